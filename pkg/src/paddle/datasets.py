"""Data generation and preparation: synthetic corpora, patches, normalization.

Two synthetic families exercise the two recovery regimes: ``low-rank`` draws
data from dense Gaussian combinations of K_true generator directions
(K_true < d), where training should recover the principal subspace;
``tight-frame`` draws sparse superpositions of atoms of a unit-norm tight
frame (K_true >= d), where training should recover the atoms themselves.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .model import as_matrix

_SYNTH_VARIANTS = ("low-rank", "tight-frame")
_NORM_MODES = ("berkeley", "unit-range", "none")

# Frame tightness target: max |F F^T - (K/d) I| relative to K/d.
_TIGHTNESS_TOL = 1e-6


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of a synthetic draw.

    noise_sigma is the additive Gaussian noise level; None means 1% of the
    clean data RMS. superposition_s is the number of atoms per example
    (tight-frame only).
    """

    variant: str
    n_features: int
    n_true_atoms: int
    n_examples: int
    superposition_s: int = 3
    noise_sigma: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.variant not in _SYNTH_VARIANTS:
            raise ContractError(
                f"unknown synthetic variant {self.variant!r}; "
                f"expected one of {_SYNTH_VARIANTS}"
            )
        for name in ("n_features", "n_true_atoms", "n_examples"):
            if getattr(self, name) < 1:
                raise ContractError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.variant == "low-rank" and self.n_true_atoms > self.n_features:
            raise ContractError(
                f"low-rank draw needs n_true_atoms <= n_features, got "
                f"{self.n_true_atoms} > {self.n_features}"
            )
        if self.variant == "tight-frame":
            if self.n_true_atoms < self.n_features:
                raise ContractError(
                    f"tight frame needs n_true_atoms >= n_features, got "
                    f"{self.n_true_atoms} < {self.n_features}"
                )
            if not 1 <= self.superposition_s <= self.n_true_atoms:
                raise ContractError(
                    f"superposition_s must be in [1, n_true_atoms], got "
                    f"{self.superposition_s}"
                )
        if self.noise_sigma is not None and (
            not np.isfinite(self.noise_sigma) or self.noise_sigma < 0
        ):
            raise ContractError(
                f"noise_sigma must be finite and >= 0, got {self.noise_sigma}"
            )
        if not 0 <= self.seed < 2**64:
            raise ContractError(f"seed must be an unsigned 64-bit int, got {self.seed}")


@dataclass(frozen=True)
class PatchSpec:
    """Random square patches from grayscale images."""

    patch_side: int = 12
    count: int = 1000
    normalization: str = "none"
    seed: int = 0

    def __post_init__(self):
        if self.patch_side < 1:
            raise ContractError(f"patch_side must be >= 1, got {self.patch_side}")
        if self.count < 1:
            raise ContractError(f"count must be >= 1, got {self.count}")
        if self.normalization not in _NORM_MODES:
            raise ContractError(
                f"unknown normalization {self.normalization!r}; "
                f"expected one of {_NORM_MODES}"
            )
        if not 0 <= self.seed < 2**64:
            raise ContractError(f"seed must be an unsigned 64-bit int, got {self.seed}")


@dataclass(frozen=True)
class SyntheticData:
    """A synthetic draw: data, the planted generators, and their coefficients."""

    x: np.ndarray
    generators: np.ndarray
    coefficients: np.ndarray
    noise_sigma: float


def _noise_level(spec, clean, rng):
    if spec.noise_sigma is not None:
        return float(spec.noise_sigma)
    return 0.01 * float(np.sqrt(np.mean(clean * clean)))


def gen_low_rank(spec: SyntheticSpec) -> SyntheticData:
    """Dense Gaussian mixtures of K_true random generators plus noise.

    Generator entries and mixing coefficients are i.i.d. standard normal,
    so the clean data live in a K_true-dimensional subspace.
    """
    if spec.variant != "low-rank":
        raise ContractError(f"spec variant is {spec.variant!r}, expected 'low-rank'")
    rng = np.random.default_rng(spec.seed)
    g = rng.standard_normal((spec.n_features, spec.n_true_atoms))
    coeff = rng.standard_normal((spec.n_true_atoms, spec.n_examples))
    clean = g @ coeff
    sigma = _noise_level(spec, clean, rng)
    x = clean + sigma * rng.standard_normal(clean.shape)
    return SyntheticData(x=x, generators=g, coefficients=coeff, noise_sigma=sigma)


def _random_orthogonal(n, rng):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def _tight_frame(d, k, rng):
    """Unit-norm tight frame: F F^T = (k/d) I, columns of norm 1."""
    blocks, rem = divmod(k, d)
    if rem == 0:
        # Union of random orthonormal bases is exactly tight with unit atoms.
        return np.hstack([_random_orthogonal(d, rng) for _ in range(blocks)])
    f = rng.standard_normal((d, k))
    f /= np.linalg.norm(f, axis=0)
    target = k / d
    for _ in range(200):
        # Alternate the tightness projection F <- sqrt(k/d) (F F^T)^(-1/2) F
        # with per-column renormalization until both properties hold.
        w, v = np.linalg.eigh(f @ f.T)
        if w[0] <= 0:
            raise ContractError("tight-frame construction degenerated (rank loss)")
        inv_half = (v / np.sqrt(w)) @ v.T
        f = np.sqrt(target) * (inv_half @ f)
        f /= np.linalg.norm(f, axis=0)
        gap = np.abs(f @ f.T - target * np.eye(d)).max()
        if gap <= _TIGHTNESS_TOL * target:
            return f
    raise ContractError(
        f"tight-frame construction did not reach tightness {_TIGHTNESS_TOL:g} "
        f"for d={d}, k={k}"
    )


def gen_tight_frame(spec: SyntheticSpec) -> SyntheticData:
    """Sparse s-atom superpositions of a unit-norm tight frame plus noise.

    Each example uses s distinct atoms with coefficients drawn uniformly from
    [0.5, 1] in magnitude and random sign.
    """
    if spec.variant != "tight-frame":
        raise ContractError(f"spec variant is {spec.variant!r}, expected 'tight-frame'")
    rng = np.random.default_rng(spec.seed)
    frame = _tight_frame(spec.n_features, spec.n_true_atoms, rng)
    coeff = np.zeros((spec.n_true_atoms, spec.n_examples))
    for j in range(spec.n_examples):
        atoms = rng.choice(spec.n_true_atoms, size=spec.superposition_s, replace=False)
        mags = rng.uniform(0.5, 1.0, size=spec.superposition_s)
        signs = rng.choice((-1.0, 1.0), size=spec.superposition_s)
        coeff[atoms, j] = mags * signs
    clean = frame @ coeff
    sigma = _noise_level(spec, clean, rng)
    x = clean + sigma * rng.standard_normal(clean.shape)
    return SyntheticData(x=x, generators=frame, coefficients=coeff, noise_sigma=sigma)


def extract_patches(image, spec: PatchSpec) -> np.ndarray:
    """Vectorized random patches, one column-major-flattened patch per column.

    Patch positions are uniform over all valid top-left corners (with
    replacement). ``spec.normalization`` is applied to the result.
    """
    img = as_matrix(image, "image")
    p = spec.patch_side
    h, w = img.shape
    if p > min(h, w):
        raise ContractError(
            f"patch_side {p} exceeds image extent {img.shape}"
        )
    rng = np.random.default_rng(spec.seed)
    rows = rng.integers(0, h - p + 1, size=spec.count)
    cols = rng.integers(0, w - p + 1, size=spec.count)
    out = np.empty((p * p, spec.count))
    for j in range(spec.count):
        out[:, j] = img[rows[j]:rows[j] + p, cols[j]:cols[j] + p].ravel(order="F")
    return normalize(out, spec.normalization)


def normalize(x, mode: str) -> np.ndarray:
    """Prepare a data matrix for training.

    berkeley: subtract the global mean, divide by 125 (half the 8-bit range),
    then recenter every column to mean zero. unit-range: affinely map the
    global range onto [0, 1] (constant input is an error). none: unchanged.
    """
    x = as_matrix(x, "X")
    if mode == "none":
        return x
    if mode == "berkeley":
        y = (x - x.mean()) / 125.0
        return y - y.mean(axis=0, keepdims=True)
    if mode == "unit-range":
        lo, hi = float(x.min()), float(x.max())
        if hi == lo:
            raise ContractError("unit-range normalization undefined for constant data")
        return (x - lo) / (hi - lo)
    raise ContractError(f"unknown normalization {mode!r}; expected one of {_NORM_MODES}")
