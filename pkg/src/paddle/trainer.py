"""Outer training loop: block coordinate descent over codes, dictionary, dual.

Per outer iteration t the loop solves the three blocks in order (codes first,
with under-used atoms replaced before the dictionary update), evaluates the
energy, and stops when E^t is close to the trailing average of previous
energies:

    E_H = (1/H) * sum_{i = max(t-H, 0)}^{t-1} E^i,   stop iff |E^t - E_H| / E_H < rtol

(the divisor stays H even when fewer than H terms exist, which damps early
stops in the first iterations). Inner solves warm-start from the previous
outer iterate, so the returned best-objective iterates keep the energy
non-increasing.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import solvers
from .errors import ContractError, DivergenceError
from .metrics import support_stats
from .model import EnergyBreakdown, HyperParams, Model, as_matrix, energy

_VARIANTS = ("data-columns", "gaussian", "provided")


@dataclass(frozen=True)
class InitStrategy:
    """How to seed (D0, C0, U0).

    data-columns: D0 = K distinct data columns projected onto the unit ball;
    gaussian: D0 = projected standard normal; provided: caller supplies all
    three. In the first two cases C0 = D0^T (rows projected) and U0 = 0.
    """

    variant: str
    d0: np.ndarray | None = None
    c0: np.ndarray | None = None
    u0: np.ndarray | None = None

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ContractError(
                f"unknown init variant {self.variant!r}; expected one of {_VARIANTS}"
            )
        given = (self.d0 is not None, self.c0 is not None, self.u0 is not None)
        if self.variant == "provided" and not all(given):
            raise ContractError("provided init requires d0, c0 and u0")
        if self.variant != "provided" and any(given):
            raise ContractError(f"{self.variant} init takes no matrices")

    @classmethod
    def data_columns(cls):
        return cls("data-columns")

    @classmethod
    def gaussian(cls):
        return cls("gaussian")

    @classmethod
    def provided(cls, d0, c0, u0):
        return cls("provided", d0=d0, c0=c0, u0=u0)


def initialize(x, k: int, strategy: InitStrategy, seed: int):
    """Build (D0, C0, U0) for a run; deterministic given the seed."""
    x = as_matrix(x, "X")
    d, n = x.shape
    if k < 1:
        raise ContractError(f"K must be >= 1, got {k}")
    if strategy.variant == "provided":
        d0 = as_matrix(strategy.d0, "D0")
        c0 = as_matrix(strategy.c0, "C0")
        u0 = as_matrix(strategy.u0, "U0")
        if d0.shape != (d, k):
            raise ContractError(f"D0 must have shape {(d, k)}, got {d0.shape}")
        if c0.shape != (k, d):
            raise ContractError(f"C0 must have shape {(k, d)}, got {c0.shape}")
        if u0.shape != (k, n):
            raise ContractError(f"U0 must have shape {(k, n)}, got {u0.shape}")
        Model(d0, c0)  # feasibility check
        return d0, c0, u0
    rng = np.random.default_rng(seed)
    if strategy.variant == "data-columns":
        if n < k:
            raise ContractError(
                f"data-columns init needs at least K={k} examples, X has {n}"
            )
        cols = rng.choice(n, size=k, replace=False)
        d0 = solvers.project_columns(x[:, cols])
    else:
        d0 = solvers.project_columns(rng.standard_normal((d, k)))
    c0 = solvers.project_rows(d0.T.copy())
    u0 = np.zeros((k, n))
    return d0, c0, u0


def replace_underused_atoms(x, d_mat, u, min_usage: int = 0):
    """Re-seed atoms whose code row is (nearly) unused.

    An atom is under-used when its row of U has at most ``min_usage`` nonzero
    entries (0 by default: used in no example at all). Under-used atoms are
    processed in ascending index order; each claims the not-yet-claimed
    example with the largest reconstruction residual ||x_j - D u_j||_2
    (ties broken toward smaller j), and that example's code column is set to
    the corresponding standard basis vector, so the next dictionary update
    pulls the atom toward the example. Residuals are computed once up front.

    Returns (U', [(atom, example), ...]).
    """
    x = as_matrix(x, "X")
    d_mat = as_matrix(d_mat, "dictionary")
    u = as_matrix(u, "U")
    k, n = u.shape
    if d_mat.shape != (x.shape[0], k):
        raise ContractError(
            f"dictionary must have shape {(x.shape[0], k)} to match X and U, "
            f"got {d_mat.shape}"
        )
    if u.shape[1] != x.shape[1]:
        raise ContractError(f"U has {n} columns but X has {x.shape[1]} columns")
    if min_usage < 0:
        raise ContractError(f"min_usage must be >= 0, got {min_usage}")

    usage = np.count_nonzero(u, axis=1)
    under = np.flatnonzero(usage <= min_usage)
    if under.size == 0:
        return u, []
    if under.size > n:
        warnings.warn(
            f"{under.size} under-used atoms but only {n} examples; "
            f"replacing the first {n}",
            stacklevel=2,
        )
    residual = x - d_mat @ u
    res_norms = np.sqrt(np.einsum("ij,ij->j", residual, residual))
    # Stable sort on -norm: ties keep ascending example order.
    claim_order = np.argsort(-res_norms, kind="stable")

    u_new = u.copy()
    replaced = []
    for rank, atom in enumerate(under[:n]):
        j = int(claim_order[rank])
        u_new[:, j] = 0.0
        u_new[atom, j] = 1.0
        replaced.append((int(atom), j))
    return u_new, replaced


def should_stop(energies, t: int, history: int, rtol: float) -> bool:
    """Trailing-average stopping rule; energies holds E^0 ... E^t."""
    if t < 1 or t >= len(energies):
        raise ContractError(f"t must be in [1, len(energies)-1], got {t}")
    if history < 1:
        raise ContractError(f"history must be >= 1, got {history}")
    e_h = sum(energies[max(t - history, 0):t]) / history
    e_t = energies[t]
    if e_h == 0.0:
        return e_t == 0.0
    return abs(e_t - e_h) / abs(e_h) < rtol


@dataclass(frozen=True)
class TraceRecord:
    """One outer iteration: energy terms, support size, replacements, inner work."""

    t: int
    energy: EnergyBreakdown
    avg_support: float
    atoms_replaced: int
    inner_iterations: tuple[int, int, int]  # codes, dictionary, dual


@dataclass
class TrainTrace:
    """Run header plus one record per outer iteration."""

    seed: int
    hyperparams: HyperParams
    n_features: int
    n_atoms: int
    n_examples: int
    initial_energy: EnergyBreakdown
    records: list[TraceRecord] = field(default_factory=list)
    stop_reason: str = "max_iterations"

    def totals(self) -> list[float]:
        """Energy totals E^0 ... E^t."""
        return [self.initial_energy.total] + [r.energy.total for r in self.records]


class TrainingDiverged(DivergenceError):
    """Divergence during training; carries the partial trace."""

    def __init__(self, message: str, iteration: int, trace: TrainTrace):
        super().__init__(message, iteration)
        self.trace = trace


def train(x, hp: HyperParams, k: int, strategy: InitStrategy | None = None, *,
          min_usage: int = 0, observer=None):
    """Learn (D, C) and codes U on data X by block coordinate descent.

    Per iteration: solve codes (warm start), replace under-used atoms, solve
    dictionary, solve dual, record the energy, check the stopping rule.
    ``observer(t, D, C, U, energy_breakdown)``, when given, is called after
    every outer iteration (snapshots, per-iteration metrics). Deterministic
    for a fixed (hp.seed, strategy, backend). On divergence raises
    TrainingDiverged carrying the partial trace.
    """
    x = as_matrix(x, "X")
    if strategy is None:
        strategy = InitStrategy.data_columns()
    d_mat, c_mat, u = initialize(x, k, strategy, hp.seed)

    e0 = energy(x, Model(d_mat, c_mat), u, hp)
    trace = TrainTrace(
        seed=hp.seed,
        hyperparams=hp,
        n_features=x.shape[0],
        n_atoms=k,
        n_examples=x.shape[1],
        initial_energy=e0,
    )
    energies = [e0.total]
    xxt = x @ x.T if hp.eta > 0 else None

    for t in range(1, hp.t_max + 1):
        try:
            u, rep_u = solvers.solve_codes(x, Model(d_mat, c_mat), u, hp)
            u, replaced = replace_underused_atoms(x, d_mat, u, min_usage)
            d_mat, rep_d = solvers.solve_dictionary(x, d_mat, u, hp)
            c_mat, rep_c = solvers.solve_dual(x, c_mat, u, hp, xxt=xxt)
        except DivergenceError as exc:
            trace.stop_reason = "diverged"
            raise TrainingDiverged(
                f"training diverged at outer iteration {t}", exc.iteration, trace
            ) from exc
        eb = energy(x, Model(d_mat, c_mat), u, hp)
        energies.append(eb.total)
        avg_support, _ = support_stats(u)
        trace.records.append(
            TraceRecord(
                t=t,
                energy=eb,
                avg_support=avg_support,
                atoms_replaced=len(replaced),
                inner_iterations=(
                    rep_u.iterations_run, rep_d.iterations_run, rep_c.iterations_run
                ),
            )
        )
        if observer is not None:
            observer(t, d_mat, c_mat, u, eb)
        if should_stop(energies, t, hp.history_h, hp.rtol):
            trace.stop_reason = "converged"
            break
    else:
        trace.stop_reason = "max_iterations"

    return Model(d_mat, c_mat), u, trace
