"""Core model objects: dictionary/dual-operator pair, hyperparameters, energy.

The learned model couples a synthesis dictionary D (one atom per column, each
constrained to the unit Euclidean ball) with a dual analysis operator C (one
filter per row, same constraint) so that C X approximates the sparse codes U.
Given data X (one example per column), codes U and hyperparameters, the energy
is

    E(D, C, U) = (1/d) ||X - D U||_F^2 + (eta/K) ||U - C X||_F^2
                 + (2 tau/K) ||U||_1 + (mu/K) ||U||_F^2

with d the data dimension and K the number of atoms.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ContractError

# Unit-ball feasibility is checked on squared norms with this much slack, so
# that projected iterates round-tripping through arithmetic still validate.
FEASIBILITY_SLACK = 1e-12


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D, nonempty, finite float64 array or raise ContractError."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ContractError(f"{name} must be 2-D, got {arr.ndim}-D")
    if arr.size == 0:
        raise ContractError(f"{name} must be nonempty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractError(f"{name} contains non-finite entries")
    return arr


def _check_cols_match(a, a_name, rows, b_name):
    if a.shape[1] != rows:
        raise ContractError(
            f"{a_name} has {a.shape[1]} columns but {b_name} has {rows} rows"
        )


def _sq_frob(a) -> float:
    return float(np.vdot(a, a))


@dataclass(frozen=True)
class Model:
    """Dictionary / dual-operator pair with unit-ball feasibility enforced.

    dictionary: d x K, atoms in columns, ||d_i||_2 <= 1.
    dual:       K x d, filters in rows,  ||c_i||_2 <= 1.
    """

    dictionary: np.ndarray
    dual: np.ndarray

    def __post_init__(self):
        d_mat = as_matrix(self.dictionary, "dictionary")
        c_mat = as_matrix(self.dual, "dual")
        if c_mat.shape != (d_mat.shape[1], d_mat.shape[0]):
            raise ContractError(
                f"dual must have shape {(d_mat.shape[1], d_mat.shape[0])} "
                f"(transpose of dictionary {d_mat.shape}), got {c_mat.shape}"
            )
        col_sq = np.einsum("ij,ij->j", d_mat, d_mat)
        if np.any(col_sq > 1.0 + FEASIBILITY_SLACK):
            worst = int(np.argmax(col_sq))
            raise ContractError(
                f"dictionary column {worst} has squared norm {col_sq[worst]:.17g} > 1"
            )
        row_sq = np.einsum("ij,ij->i", c_mat, c_mat)
        if np.any(row_sq > 1.0 + FEASIBILITY_SLACK):
            worst = int(np.argmax(row_sq))
            raise ContractError(
                f"dual row {worst} has squared norm {row_sq[worst]:.17g} > 1"
            )
        object.__setattr__(self, "dictionary", d_mat)
        object.__setattr__(self, "dual", c_mat)

    @property
    def n_features(self) -> int:
        return self.dictionary.shape[0]

    @property
    def n_atoms(self) -> int:
        return self.dictionary.shape[1]


@dataclass(frozen=True)
class HyperParams:
    """Energy weights and iteration controls.

    tau weights the l1 code penalty, eta the code-prediction (dual) term, mu an
    optional ridge on the codes. rtol/history_h/t_max control the outer
    stopping rule (relative change of the energy against the mean of the last
    history_h energies); inner_max_iter/inner_rtol control each inner
    accelerated proximal solve. seed drives every random choice of a run.
    """

    tau: float = 0.1
    eta: float = 1.0
    mu: float = 0.0
    rtol: float = 1e-4
    t_max: int = 500
    history_h: int = 5
    inner_max_iter: int = 200
    inner_rtol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        for name in ("tau", "eta", "mu"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ContractError(f"{name} must be finite and >= 0, got {v}")
        if not np.isfinite(self.rtol) or self.rtol <= 0:
            raise ContractError(f"rtol must be positive, got {self.rtol}")
        if not np.isfinite(self.inner_rtol) or self.inner_rtol <= 0:
            raise ContractError(f"inner_rtol must be positive, got {self.inner_rtol}")
        if self.t_max < 1:
            raise ContractError(f"t_max must be >= 1, got {self.t_max}")
        if self.inner_max_iter < 1:
            raise ContractError(
                f"inner_max_iter must be >= 1, got {self.inner_max_iter}"
            )
        # A single-iteration run never accumulates enough history for the
        # upper bound to matter, so only multi-iteration runs enforce it.
        if self.history_h < 1 or (self.t_max > 1 and self.history_h >= self.t_max):
            raise ContractError(
                f"history_h must satisfy 1 <= history_h < t_max, got "
                f"history_h={self.history_h}, t_max={self.t_max}"
            )
        if not 0 <= self.seed < 2**64:
            raise ContractError(f"seed must be an unsigned 64-bit int, got {self.seed}")


@dataclass(frozen=True)
class EnergyBreakdown:
    """Energy value split into its four terms; total is their exact sum."""

    reconstruction: float
    coding: float
    l1: float
    l2: float
    total: float


def energy(x, model: Model, u, hp: HyperParams) -> EnergyBreakdown:
    """Evaluate the training energy at (X, D, C, U).

    Terms: reconstruction (1/d)||X - D U||_F^2, coding (eta/K)||U - C X||_F^2,
    l1 (2 tau/K)||U||_1, l2 (mu/K)||U||_F^2.
    """
    x = as_matrix(x, "X")
    u = as_matrix(u, "U")
    d_mat, c_mat = model.dictionary, model.dual
    d, n = x.shape
    k = d_mat.shape[1]
    if d_mat.shape[0] != d:
        raise ContractError(
            f"dictionary has {d_mat.shape[0]} rows but X has {d} rows"
        )
    if u.shape != (k, n):
        raise ContractError(
            f"U must have shape {(k, n)} (atoms x examples), got {u.shape}"
        )
    recon = _sq_frob(x - d_mat @ u) / d
    coding = hp.eta / k * _sq_frob(u - c_mat @ x) if hp.eta > 0 else 0.0
    l1 = 2.0 * hp.tau / k * kernels.abs_sum(u) if hp.tau > 0 else 0.0
    l2 = hp.mu / k * _sq_frob(u) if hp.mu > 0 else 0.0
    return EnergyBreakdown(recon, coding, l1, l2, recon + coding + l1 + l2)


def encode_linear(x, model: Model) -> np.ndarray:
    """Feed-forward codes C X (the fast approximation to sparse coding)."""
    x = as_matrix(x, "X")
    _check_cols_match(model.dual, "dual", x.shape[0], "X")
    return model.dual @ x


def decode(model: Model, u) -> np.ndarray:
    """Reconstruction D U."""
    u = as_matrix(u, "U")
    _check_cols_match(model.dictionary, "dictionary", u.shape[0], "U")
    return model.dictionary @ u
