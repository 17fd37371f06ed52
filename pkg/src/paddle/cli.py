"""Command line interface.

Subcommands: gen (synthetic corpora and patch extraction), train, encode
(sparse or fast linear), eval (metrics), render (dictionary tile sheet).

Every command accepts --config FILE with ``key = value`` lines (``#``
comments); keys are the flag names with dashes or underscores, unknown keys
are rejected. Explicit flags override config values, which override built-in
defaults. The fully resolved configuration is echoed to ``<out>/resolved.cfg``.

Exit codes: 0 success, 2 validation/format/config/usage errors, 1 divergence
(the partial trace is still written), I/O failures, and unexpected errors.
"""

import argparse
import sys
import time
import traceback
from pathlib import Path

import numpy as np

from . import datasets, io, metrics, solvers, trainer
from .errors import ContractError, DivergenceError, FormatError
from .model import HyperParams, Model, encode_linear
from .trainer import InitStrategy, TrainingDiverged


class ConfigError(ValueError):
    """Bad --config file: unreadable, unparsable, or unknown/invalid keys."""


def _tile_pair(text: str):
    parts = text.lower().split("x")
    try:
        if len(parts) != 2:
            raise ValueError
        pair = (int(parts[0]), int(parts[1]))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected ROWSxCOLS (e.g. 12x12), got {text!r}"
        ) from None
    return pair


def _add_hyper_flags(p, inner_only=False):
    if not inner_only:
        p.add_argument("--tau", type=float, default=0.1,
                       help="l1 code penalty weight (default 0.1)")
        p.add_argument("--eta", type=float, default=1.0,
                       help="code-prediction term weight (default 1)")
        p.add_argument("--mu", type=float, default=0.0,
                       help="ridge weight on the codes (default 0)")
    p.add_argument("--inner-max-iter", type=int, default=200,
                   help="inner solver iteration cap (default 200)")
    p.add_argument("--inner-rtol", type=float, default=1e-6,
                   help="inner solver relative objective tolerance (default 1e-6)")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="paddle",
        description="Sparse dictionary learning with a jointly trained linear encoder.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")
    commands = {}

    gen = commands["gen"] = sub.add_parser(
        "gen", help="generate synthetic data or extract image patches")
    gen.add_argument("--config", help="key=value config file")
    gen.add_argument("--out", help="output directory")
    gen.add_argument("--variant", choices=("low-rank", "tight-frame", "patches"))
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--d", type=int, help="data dimension (synthetic variants)")
    gen.add_argument("--k-true", type=int, help="number of generating atoms")
    gen.add_argument("--n", type=int, help="number of examples")
    gen.add_argument("--superposition-s", type=int, default=3,
                     help="atoms per example (tight-frame, default 3)")
    gen.add_argument("--noise-sigma", type=float, default=None,
                     help="additive noise level (default: 1%% of clean RMS)")
    gen.add_argument("--image", action="append",
                     help="source image (.pad/.csv/.pgm); repeatable")
    gen.add_argument("--patch-side", type=int, default=12)
    gen.add_argument("--count", type=int, help="number of patches")
    gen.add_argument("--normalization", choices=("berkeley", "unit-range", "none"),
                     default="none")

    tr = commands["train"] = sub.add_parser("train", help="learn a model")
    tr.add_argument("--config", help="key=value config file")
    tr.add_argument("--out", help="output directory")
    tr.add_argument("--x", help="training data matrix")
    tr.add_argument("--k", type=int, help="number of atoms to learn")
    _add_hyper_flags(tr)
    tr.add_argument("--rtol", type=float, default=1e-4,
                    help="outer stopping tolerance (default 1e-4)")
    tr.add_argument("--t-max", type=int, default=500,
                    help="outer iteration cap (default 500)")
    tr.add_argument("--history", type=int, default=5,
                    help="energies averaged by the stopping rule (default 5)")
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--init", choices=("data-columns", "gaussian", "provided"),
                    default="data-columns")
    tr.add_argument("--d0", help="initial dictionary (init=provided)")
    tr.add_argument("--c0", help="initial dual (init=provided)")
    tr.add_argument("--u0", help="initial codes (init=provided)")
    tr.add_argument("--min-usage", type=int, default=0,
                    help="replace atoms used in at most this many examples")
    tr.add_argument("--snapshot-every", type=int, default=0,
                    help="write D_t.pad every N outer iterations (0: never)")

    en = commands["encode"] = sub.add_parser("encode", help="encode data with a model")
    en.add_argument("--config", help="key=value config file")
    en.add_argument("--out", help="output directory")
    en.add_argument("--x", help="data matrix")
    en.add_argument("--dict", help="dictionary matrix file")
    en.add_argument("--dual", help="dual matrix file")
    en.add_argument("--mode", choices=("linear", "sparse"))
    _add_hyper_flags(en)

    ev = commands["eval"] = sub.add_parser("eval", help="evaluate a model")
    ev.add_argument("--config", help="key=value config file")
    ev.add_argument("--out", help="optional output directory for report.txt")
    ev.add_argument("--dict", help="dictionary matrix file")
    ev.add_argument("--dual", help="dual matrix file")
    ev.add_argument("--codes", help="codes matrix file")
    ev.add_argument("--x", help="data matrix (for the PCA comparison)")
    ev.add_argument("--true-dict", help="generating dictionary to match against")
    ev.add_argument("--pca-k", type=int, help="PCA components for the angle metric")
    ev.add_argument("--theta", type=float, default=0.95,
                    help="cosine threshold for matched atoms (default 0.95)")
    ev.add_argument("--zero-tol", type=float, default=1e-12,
                    help="support threshold on |u| (default 1e-12)")

    rn = commands["render"] = sub.add_parser(
        "render", help="render dictionary atoms as a tiled PGM")
    rn.add_argument("--config", help="key=value config file")
    rn.add_argument("--out", help="output directory")
    rn.add_argument("--dict", help="dictionary matrix file")
    rn.add_argument("--tile", type=_tile_pair, help="tile shape ROWSxCOLS")

    return parser, commands


def _read_config_file(path):
    entries = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{ln}: expected key=value, got {line!r}")
        entries[key.strip()] = value.strip()
    return entries


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _config_defaults(subparser, path):
    """Turn a config file into validated set_defaults() values."""
    actions = {}
    for action in subparser._actions:
        if action.dest in ("help", "config") or not action.option_strings:
            continue
        actions[action.dest] = action
    out = {}
    for key, raw in _read_config_file(path).items():
        dest = key.replace("-", "_")
        if dest not in actions:
            raise ConfigError(f"unknown config key {key!r}")
        action = actions[dest]
        try:
            if isinstance(action, argparse._AppendAction):
                items = [v.strip() for v in raw.split(",") if v.strip()]
                value = [action.type(v) if action.type else v for v in items]
            elif isinstance(
                action, (argparse._StoreTrueAction, argparse._StoreFalseAction)
            ):
                low = raw.lower()
                if low in _TRUE:
                    value = True
                elif low in _FALSE:
                    value = False
                else:
                    raise ValueError(f"expected a boolean, got {raw!r}")
            else:
                value = action.type(raw) if action.type else raw
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise ConfigError(f"config key {key!r}: {exc}") from None
        if action.choices is not None and value not in action.choices:
            raise ConfigError(
                f"config key {key!r}: {value!r} not in {tuple(action.choices)}"
            )
        out[dest] = value
    return out


def _require(args, *dests):
    for dest in dests:
        if getattr(args, dest) is None:
            flag = "--" + dest.replace("_", "-")
            raise ContractError(f"{flag} is required for '{args.command}'")


def _ensure_out(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_matrix(path) -> np.ndarray:
    name = str(path)
    if name.endswith(".csv"):
        return io.read_csv_matrix(name)
    if name.endswith(".pgm"):
        return io.read_pgm(name)
    return io.read_matrix(name)


def _echo_config(args, out_dir: Path):
    lines = []
    for key in sorted(vars(args)):
        if key in ("command", "config"):
            continue
        v = getattr(args, key)
        if v is None:
            continue
        if key == "tile":
            v = f"{v[0]}x{v[1]}"
        elif isinstance(v, (list, tuple)):
            v = ",".join(str(i) for i in v)
        elif isinstance(v, bool):
            v = "true" if v else "false"
        lines.append(f"{key}={v}")
    (out_dir / "resolved.cfg").write_text("\n".join(lines) + "\n")


def cmd_gen(args) -> int:
    _require(args, "out", "variant")
    out = _ensure_out(args.out)
    if args.variant in ("low-rank", "tight-frame"):
        _require(args, "d", "k_true", "n")
        spec = datasets.SyntheticSpec(
            variant=args.variant,
            n_features=args.d,
            n_true_atoms=args.k_true,
            n_examples=args.n,
            superposition_s=args.superposition_s,
            noise_sigma=args.noise_sigma,
            seed=args.seed,
        )
        if args.variant == "low-rank":
            data = datasets.gen_low_rank(spec)
            truth_name = "generators.pad"
        else:
            data = datasets.gen_tight_frame(spec)
            truth_name = "frame.pad"
        io.write_matrix(out / "X.pad", data.x)
        io.write_matrix(out / truth_name, data.generators)
        io.write_matrix(out / "coefficients.pad", data.coefficients)
        print(f"wrote {out / 'X.pad'} ({data.x.shape[0]}x{data.x.shape[1]}), "
              f"{truth_name}, coefficients.pad")
    else:
        _require(args, "image", "count")
        images = [_load_matrix(p) for p in args.image]
        base, extra = divmod(args.count, len(images))
        parts = []
        for i, img in enumerate(images):
            cnt = base + (1 if i < extra else 0)
            if cnt == 0:
                continue
            spec = datasets.PatchSpec(
                patch_side=args.patch_side, count=cnt,
                normalization="none", seed=args.seed + i,
            )
            parts.append(datasets.extract_patches(img, spec))
        x = datasets.normalize(np.hstack(parts), args.normalization)
        io.write_matrix(out / "X.pad", x)
        print(f"wrote {out / 'X.pad'} ({x.shape[0]}x{x.shape[1]})")
    _echo_config(args, out)
    return 0


def cmd_train(args) -> int:
    _require(args, "out", "x")
    out = _ensure_out(args.out)
    x = _load_matrix(args.x)
    hp = HyperParams(
        tau=args.tau, eta=args.eta, mu=args.mu, rtol=args.rtol, t_max=args.t_max,
        history_h=args.history, inner_max_iter=args.inner_max_iter,
        inner_rtol=args.inner_rtol, seed=args.seed,
    )
    if args.init == "provided":
        _require(args, "d0", "c0", "u0")
        strategy = InitStrategy.provided(
            _load_matrix(args.d0), _load_matrix(args.c0), _load_matrix(args.u0)
        )
        k = args.k if args.k is not None else strategy.d0.shape[1]
    else:
        _require(args, "k")
        strategy = InitStrategy(args.init)
        k = args.k

    observer = None
    if args.snapshot_every > 0:
        def observer(t, d_mat, c_mat, u, eb):
            if t % args.snapshot_every == 0:
                io.write_matrix(out / f"D_{t:04d}.pad", d_mat)

    _echo_config(args, out)
    try:
        model, u, trace = trainer.train(
            x, hp, k, strategy, min_usage=args.min_usage, observer=observer
        )
    except TrainingDiverged as exc:
        io.write_trace_csv(out / "trace.csv", exc.trace)
        print(f"error: {exc}; partial trace written to {out / 'trace.csv'}",
              file=sys.stderr)
        return 1
    io.write_matrix(out / "D.pad", model.dictionary)
    io.write_matrix(out / "C.pad", model.dual)
    io.write_matrix(out / "U.pad", u)
    io.write_trace_csv(out / "trace.csv", trace)
    last = trace.records[-1]
    print(f"{trace.stop_reason} after {last.t} iterations; "
          f"energy {last.energy.total:.6g}; avg support {last.avg_support:.2f}; "
          f"wrote D.pad C.pad U.pad trace.csv in {out}")
    return 0


def cmd_encode(args) -> int:
    _require(args, "out", "x", "dict", "dual", "mode")
    out = _ensure_out(args.out)
    x = _load_matrix(args.x)
    model = Model(_load_matrix(args.dict), _load_matrix(args.dual))
    stats = [f"mode={args.mode}", f"columns={x.shape[1]}", f"atoms={model.n_atoms}"]
    if args.mode == "linear":
        start = time.perf_counter()
        u = encode_linear(x, model)
        elapsed = time.perf_counter() - start
    else:
        hp = HyperParams(
            tau=args.tau, eta=args.eta, mu=args.mu,
            inner_max_iter=args.inner_max_iter, inner_rtol=args.inner_rtol,
        )
        u0 = np.zeros((model.n_atoms, x.shape[1]))
        start = time.perf_counter()
        u, report = solvers.solve_codes(x, model, u0, hp)
        elapsed = time.perf_counter() - start
        stats.append(f"inner_iterations={report.iterations_run}")
        stats.append(f"converged={str(report.converged).lower()}")
    stats.append(f"encode_seconds={elapsed:.9f}")
    io.write_matrix(out / "U.pad", u)
    (out / "encode_stats.txt").write_text("\n".join(stats) + "\n")
    _echo_config(args, out)
    print("; ".join(stats))
    return 0


def cmd_eval(args) -> int:
    _require(args, "dict")
    d_mat = _load_matrix(args.dict)
    lines = []
    u = _load_matrix(args.codes) if args.codes else None
    if args.dual:
        model = Model(d_mat, _load_matrix(args.dual))
        lines.append(f"dual_distance={metrics.dual_distance(model):.17g}")
        if u is not None:
            used = np.flatnonzero(
                np.count_nonzero(np.abs(u) > args.zero_tol, axis=1) > 0
            )
            if used.size:
                dd_used = metrics.dual_distance(model, indices=used)
                lines.append(f"dual_distance_used={dd_used:.17g}")
                lines.append(f"atoms_used={used.size}")
    if u is not None:
        avg, _ = metrics.support_stats(u, zero_tol=args.zero_tol)
        lines.append(f"avg_support={avg:.17g}")
    if args.true_dict:
        t_mat = _load_matrix(args.true_dict)
        report = metrics.match_atoms(t_mat, d_mat, theta=args.theta)
        lines.append(f"matched_fraction={report.matched_fraction:.17g}")
        lines.append(f"matched_pairs={len(report.pairs)}")
        if t_mat.shape == d_mat.shape and t_mat.shape[0] >= t_mat.shape[1]:
            angle = metrics.largest_principal_angle(t_mat, d_mat)
            lines.append(f"principal_angle={angle:.17g}")
    if args.x is not None and args.pca_k is not None:
        basis = metrics.pca_basis(_load_matrix(args.x), args.pca_k)
        angle = metrics.largest_principal_angle(basis, d_mat)
        lines.append(f"pca_angle={angle:.17g}")
    if not lines:
        raise ContractError(
            "nothing to evaluate: pass --dual, --codes, --true-dict, or --x/--pca-k"
        )
    print("\n".join(lines))
    if args.out:
        out = _ensure_out(args.out)
        (out / "report.txt").write_text("\n".join(lines) + "\n")
        _echo_config(args, out)
    return 0


def cmd_render(args) -> int:
    _require(args, "out", "dict", "tile")
    out = _ensure_out(args.out)
    d_mat = _load_matrix(args.dict)
    path = out / "dictionary.pgm"
    io.write_pgm_tiles(d_mat, args.tile[0], args.tile[1], path)
    _echo_config(args, out)
    print(f"wrote {path}")
    return 0


_HANDLERS = {
    "gen": cmd_gen,
    "train": cmd_train,
    "encode": cmd_encode,
    "eval": cmd_eval,
    "render": cmd_render,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser, commands = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2

    try:
        if args.config:
            commands[args.command].set_defaults(
                **_config_defaults(commands[args.command], args.config)
            )
            try:
                args = parser.parse_args(argv)
            except SystemExit as exc:
                return int(exc.code) if exc.code else 0
        return _HANDLERS[args.command](args)
    except (ContractError, FormatError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 1


def entry():
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
