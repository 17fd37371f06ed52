"""On-disk formats: binary matrices, CSV interchange, training traces, PGM.

Binary matrix file layout (all integers little-endian):

    bytes 0-3    magic "PADL"
    bytes 4-7    format version, u32, currently 1
    bytes 8-15   rows, u64 (> 0)
    bytes 16-23  cols, u64 (> 0)
    bytes 24-    rows*cols float64 values, column-major

Round-trips are bit-exact. Format errors carry the byte offset at which
parsing failed.
"""

import math
import struct

import numpy as np

from .errors import ContractError, FormatError
from .model import as_matrix

MAGIC = b"PADL"
VERSION = 1
_HEADER = struct.Struct("<4sIQQ")

TRACE_HEADER = "t,total,recon,coding,l1,l2,avg_support,atoms_replaced"


def write_matrix(path, m) -> None:
    """Write a matrix in the binary format above."""
    m = as_matrix(m, "matrix")
    payload = m.astype("<f8").tobytes(order="F")
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, m.shape[0], m.shape[1]))
        f.write(payload)


def read_matrix(path) -> np.ndarray:
    """Read a binary matrix file; inverse of write_matrix."""
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 4:
        raise FormatError("file too short for magic", len(data))
    if data[:4] != MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}, expected {MAGIC!r}", 0)
    if len(data) < _HEADER.size:
        raise FormatError("truncated header", len(data))
    _, version, rows, cols = _HEADER.unpack_from(data)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}, expected {VERSION}", 4)
    if rows == 0:
        raise FormatError("rows must be > 0", 8)
    if cols == 0:
        raise FormatError("cols must be > 0", 16)
    expected = rows * cols * 8
    got = len(data) - _HEADER.size
    if got < expected:
        raise FormatError(
            f"payload truncated: expected {expected} bytes, got {got}",
            _HEADER.size + got,
        )
    if got > expected:
        raise FormatError(f"{got - expected} trailing bytes", _HEADER.size + expected)
    flat = np.frombuffer(data, dtype="<f8", count=rows * cols, offset=_HEADER.size)
    bad = np.flatnonzero(~np.isfinite(flat))
    if bad.size:
        raise FormatError(
            "non-finite value in payload", _HEADER.size + 8 * int(bad[0])
        )
    return np.ascontiguousarray(flat.reshape((rows, cols), order="F"))


def write_csv_matrix(path, m) -> None:
    """Write a matrix as comma-separated text, one row per line."""
    m = as_matrix(m, "matrix")
    np.savetxt(path, m, delimiter=",", fmt="%.17g")


def read_csv_matrix(path) -> np.ndarray:
    """Read a comma-separated matrix written by write_csv_matrix."""
    try:
        m = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise FormatError(f"malformed CSV: {exc}", 0) from None
    if m.size == 0:
        raise FormatError("empty CSV matrix", 0)
    if not np.all(np.isfinite(m)):
        raise FormatError("non-finite value in CSV matrix", 0)
    return m


def _fmt(v) -> str:
    return f"{float(v):.17g}"


def write_trace_csv(path, trace) -> None:
    """Write a training trace: '# key=value' metadata, then one row per iteration."""
    hp = trace.hyperparams
    lines = [
        f"# seed={trace.seed}",
        f"# n_features={trace.n_features}",
        f"# n_atoms={trace.n_atoms}",
        f"# n_examples={trace.n_examples}",
        f"# tau={_fmt(hp.tau)}",
        f"# eta={_fmt(hp.eta)}",
        f"# mu={_fmt(hp.mu)}",
        f"# rtol={_fmt(hp.rtol)}",
        f"# t_max={hp.t_max}",
        f"# history_h={hp.history_h}",
        f"# inner_max_iter={hp.inner_max_iter}",
        f"# inner_rtol={_fmt(hp.inner_rtol)}",
        f"# initial_total={_fmt(trace.initial_energy.total)}",
        f"# stop_reason={trace.stop_reason}",
        TRACE_HEADER,
    ]
    for r in trace.records:
        e = r.energy
        lines.append(
            f"{r.t},{_fmt(e.total)},{_fmt(e.reconstruction)},{_fmt(e.coding)},"
            f"{_fmt(e.l1)},{_fmt(e.l2)},{_fmt(r.avg_support)},{r.atoms_replaced}"
        )
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def read_trace_csv(path):
    """Read a trace file; returns (metadata dict, float record array).

    Record columns follow TRACE_HEADER order; the array has one row per outer
    iteration (possibly zero rows).
    """
    meta = {}
    rows = []
    header_seen = False
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value.strip()
                continue
            if not header_seen:
                if line != TRACE_HEADER:
                    raise FormatError(f"unexpected trace header {line!r}", 0)
                header_seen = True
                continue
            rows.append([float(v) for v in line.split(",")])
    if not header_seen:
        raise FormatError("missing trace header", 0)
    n_cols = len(TRACE_HEADER.split(","))
    data = np.array(rows, dtype=np.float64).reshape((len(rows), n_cols))
    return meta, data


def write_pgm_tiles(d_mat, tile_rows: int, tile_cols: int, path) -> None:
    """Render dictionary atoms as a tiled 8-bit PGM image.

    Each atom (column) is reshaped column-major to tile_rows x tile_cols and
    min-max scaled to 0..255 on its own (constant atoms render black). Tiles
    are laid out on a grid with ceil(sqrt(K)) tiles per row and separated by
    one-pixel black rules, filling columns downward first.
    """
    d_mat = as_matrix(d_mat, "dictionary")
    d, k = d_mat.shape
    if tile_rows < 1 or tile_cols < 1:
        raise ContractError(
            f"tile dims must be positive, got {tile_rows}x{tile_cols}"
        )
    if tile_rows * tile_cols != d:
        raise ContractError(
            f"atoms of length {d} cannot be rendered as {tile_rows}x{tile_cols} "
            f"tiles ({tile_rows * tile_cols} pixels)"
        )
    per_row = math.isqrt(k)
    if per_row * per_row < k:
        per_row += 1
    n_rows = -(-k // per_row)
    height = n_rows * tile_rows + (n_rows - 1)
    width = per_row * tile_cols + (per_row - 1)
    canvas = np.zeros((height, width), dtype=np.uint8)
    for idx in range(k):
        grid_col, grid_row = divmod(idx, n_rows)
        tile = d_mat[:, idx].reshape((tile_rows, tile_cols), order="F")
        lo, hi = tile.min(), tile.max()
        if hi > lo:
            gray = np.rint((tile - lo) / (hi - lo) * 255.0).astype(np.uint8)
        else:
            gray = np.zeros_like(tile, dtype=np.uint8)
        r0 = grid_row * (tile_rows + 1)
        c0 = grid_col * (tile_cols + 1)
        canvas[r0:r0 + tile_rows, c0:c0 + tile_cols] = gray
    with open(path, "wb") as f:
        f.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        f.write(canvas.tobytes())


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) PGM with maxval <= 255 into a float matrix."""
    with open(path, "rb") as f:
        data = f.read()

    pos = 0

    def token():
        nonlocal pos
        while pos < len(data):
            if data[pos:pos + 1].isspace():
                pos += 1
            elif data[pos:pos + 1] == b"#":
                while pos < len(data) and data[pos] != ord("\n"):
                    pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("unexpected end of PGM header", start)
        return data[start:pos], start

    magic, start = token()
    if magic != b"P5":
        raise FormatError(f"bad PGM magic {magic!r}, expected b'P5'", start)
    dims = []
    for _ in range(3):
        tok, start = token()
        if not tok.isdigit():
            raise FormatError(f"non-numeric PGM header token {tok!r}", start)
        dims.append(int(tok))
    width, height, maxval = dims
    if width < 1 or height < 1:
        raise FormatError(f"bad PGM dimensions {width}x{height}", start)
    if not 0 < maxval <= 255:
        raise FormatError(f"unsupported PGM maxval {maxval}", start)
    pos += 1  # single whitespace after maxval
    expected = width * height
    if len(data) - pos < expected:
        raise FormatError(
            f"PGM payload truncated: expected {expected} bytes, "
            f"got {len(data) - pos}",
            len(data),
        )
    img = np.frombuffer(data, dtype=np.uint8, count=expected, offset=pos)
    return img.reshape((height, width)).astype(np.float64)
