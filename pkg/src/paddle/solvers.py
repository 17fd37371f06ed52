"""Proximal machinery and the three block solvers.

Each block subproblem of the training energy is "smooth F + simple J":

  codes U:       F = (1/d)||X - D U||^2 + (eta/K)||U - C X||^2 + (mu/K)||U||^2,
                 J = (2 tau/K)||U||_1          -> prox is entrywise shrinkage
  dictionary D:  F = (1/d)||X - D U||^2,       J = indicator of unit-ball columns
  dual C:        F = (1/K)||U - C X||^2,       J = indicator of unit-ball rows

All three are solved with a fixed-step accelerated forward-backward loop
(``fista_solve``): a gradient step of length 1/(2 sigma) followed by the prox,
with momentum extrapolation. The iteration is not monotone, so the solver
returns the best-objective iterate observed (the initial point included),
which keeps the outer training loop's energy non-increasing under warm starts.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ContractError, DivergenceError
from .model import Model, HyperParams, as_matrix

# Abort an inner solve once the objective exceeds the best seen by this
# factor: the trajectory has left the useful region and cannot improve the
# returned (best) iterate. Generous enough to never clip ordinary
# non-monotone ripples of the accelerated iteration.
_RUNAWAY_FACTOR = 1e8


@dataclass(frozen=True)
class StepSizes:
    """Inverse step scales for the three blocks (step length is 1/(2 sigma))."""

    sigma_u: float
    sigma_d: float
    sigma_c: float


@dataclass(frozen=True)
class SolveReport:
    """Outcome of one inner solve.

    iterations_run counts prox steps taken; converged means the relative
    objective change dropped below the tolerance (not the iteration cap).
    final_objective is the best value observed, never above initial_objective.
    """

    iterations_run: int
    initial_objective: float
    final_objective: float
    converged: bool


@dataclass
class FistaState:
    """Rolling state of the accelerated iteration.

    current/previous are the last two prox outputs, momentum_point is the
    extrapolated point the next gradient is evaluated at, and ``a`` is the
    momentum driver sequence a_{p+1} = (1 + sqrt(1 + 4 a_p^2))/2, nondecreasing
    from 1.
    """

    current: np.ndarray
    previous: np.ndarray
    momentum_point: np.ndarray
    a: float
    iteration: int


def soft_threshold(a, lam: float) -> np.ndarray:
    """Entrywise shrinkage S_lam(a) = sign(a) * max(|a| - lam, 0).

    This is the proximity operator of lam * ||.||_1.
    """
    a = as_matrix(a, "soft_threshold input")
    if not np.isfinite(lam) or lam < 0:
        raise ContractError(f"threshold must be finite and >= 0, got {lam}")
    return kernels.soft_threshold(a, lam)


def project_ball(v) -> np.ndarray:
    """Project a vector onto the unit Euclidean ball: v / max(1, ||v||)."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ContractError(f"project_ball expects a nonempty vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ContractError("project_ball input contains non-finite entries")
    return v / max(1.0, float(np.linalg.norm(v)))


def project_columns(a) -> np.ndarray:
    """Project every column onto the unit Euclidean ball."""
    return kernels.project_columns(as_matrix(a, "project_columns input"))


def project_rows(a) -> np.ndarray:
    """Project every row onto the unit Euclidean ball."""
    return kernels.project_rows(as_matrix(a, "project_rows input"))


def _check_shapes(x, d_mat, c_mat=None, u=None):
    d, n = x.shape
    k = d_mat.shape[1]
    if d_mat.shape[0] != d:
        raise ContractError(f"dictionary has {d_mat.shape[0]} rows but X has {d} rows")
    if c_mat is not None and c_mat.shape != (k, d):
        raise ContractError(
            f"dual must have shape {(k, d)} to match dictionary and X, got {c_mat.shape}"
        )
    if u is not None and u.shape != (k, n):
        raise ContractError(f"U must have shape {(k, n)}, got {u.shape}")


def grad_codes(x, d_mat, c_mat, u, hp: HyperParams) -> np.ndarray:
    """Gradient of the smooth code energy:

    (-2/d) D^T (X - D U) + (2 eta/K)(U - C X) + (2 mu/K) U.
    """
    x = as_matrix(x, "X")
    d_mat = as_matrix(d_mat, "dictionary")
    c_mat = as_matrix(c_mat, "dual")
    u = as_matrix(u, "U")
    _check_shapes(x, d_mat, c_mat, u)
    d = x.shape[0]
    k = d_mat.shape[1]
    g = (-2.0 / d) * (d_mat.T @ (x - d_mat @ u))
    if hp.eta > 0:
        g += (2.0 * hp.eta / k) * (u - c_mat @ x)
    if hp.mu > 0:
        g += (2.0 * hp.mu / k) * u
    return g


def grad_dictionary(x, d_mat, u) -> np.ndarray:
    """Gradient of (1/d)||X - D U||^2 in D: (-2/d)(X - D U) U^T."""
    x = as_matrix(x, "X")
    d_mat = as_matrix(d_mat, "dictionary")
    u = as_matrix(u, "U")
    _check_shapes(x, d_mat, u=u)
    return (-2.0 / x.shape[0]) * ((x - d_mat @ u) @ u.T)


def grad_dual(x, c_mat, u) -> np.ndarray:
    """Gradient of (1/K)||U - C X||^2 in C: (-2/K)(U - C X) X^T.

    The eta weight cancels against the step size in the dual update, so the
    surrogate without eta is used throughout.
    """
    x = as_matrix(x, "X")
    c_mat = as_matrix(c_mat, "dual")
    u = as_matrix(u, "U")
    k = u.shape[0]
    if c_mat.shape != (k, x.shape[0]):
        raise ContractError(
            f"dual must have shape {(k, x.shape[0])} to match U and X, got {c_mat.shape}"
        )
    if u.shape[1] != x.shape[1]:
        raise ContractError(
            f"U has {u.shape[1]} columns but X has {x.shape[1]} columns"
        )
    return (-2.0 / k) * ((u - c_mat @ x) @ x.T)


def eigen_range(g) -> tuple[float, float]:
    """Smallest and largest eigenvalue of a symmetric matrix.

    Input must be square and symmetric to 1e-10 relative to its largest entry.
    Tiny negative eigenvalues (above -1e-10 relative) coming from rounding of
    positive semidefinite Gram matrices are clamped to zero.
    """
    g = as_matrix(g, "G")
    if g.shape[0] != g.shape[1]:
        raise ContractError(f"eigen_range expects a square matrix, got {g.shape}")
    scale = float(np.abs(g).max())
    asym = float(np.abs(g - g.T).max())
    if asym > 1e-10 * max(1.0, scale):
        raise ContractError(
            f"eigen_range expects a symmetric matrix (asymmetry {asym:.3e})"
        )
    w = np.linalg.eigvalsh(g)
    lo, hi = float(w[0]), float(w[-1])
    tol = 1e-10 * max(1.0, abs(hi))
    if -tol <= lo < 0.0:
        lo = 0.0
    if -tol <= hi < 0.0:
        hi = 0.0
    return lo, hi


def step_sizes(x, d_mat, u, hp: HyperParams) -> StepSizes:
    """Inverse step scales for the three block solvers.

    sigma_u = (a + b)/(2 d) + eta/K + mu/K   (a, b extreme eigenvalues of D^T D)
    sigma_d = 2 ||U U^T||_F / d
    sigma_c = 2 ||X X^T||_F / K
    """
    x = as_matrix(x, "X")
    d_mat = as_matrix(d_mat, "dictionary")
    u = as_matrix(u, "U")
    _check_shapes(x, d_mat, u=u)
    d = x.shape[0]
    k = d_mat.shape[1]
    lo, hi = eigen_range(d_mat.T @ d_mat)
    sigma_u = (lo + hi) / (2.0 * d) + hp.eta / k + hp.mu / k
    sigma_d = 2.0 * float(np.linalg.norm(u @ u.T)) / d
    sigma_c = 2.0 * float(np.linalg.norm(x @ x.T)) / k
    return StepSizes(sigma_u=sigma_u, sigma_d=sigma_d, sigma_c=sigma_c)


def ista_step(point, grad_value, sigma: float, prox) -> np.ndarray:
    """One forward-backward step: prox(point - grad_value / (2 sigma))."""
    point = as_matrix(point, "point")
    grad_value = as_matrix(grad_value, "gradient")
    if point.shape != grad_value.shape:
        raise ContractError(
            f"point shape {point.shape} and gradient shape {grad_value.shape} differ"
        )
    if not np.isfinite(sigma) or sigma <= 0:
        raise ContractError(f"sigma must be positive, got {sigma}")
    return prox(kernels.forward_step(point, grad_value, 1.0 / (2.0 * sigma)))


def _proximal_descent(grad, prox, objective, sigma, init, max_iter, rtol, accelerated):
    if not np.isfinite(sigma) or sigma <= 0:
        raise ContractError(f"sigma must be positive, got {sigma}")
    if max_iter < 1:
        raise ContractError(f"max_iter must be >= 1, got {max_iter}")
    if rtol < 0:
        raise ContractError(f"rtol must be >= 0, got {rtol}")
    step = 1.0 / (2.0 * sigma)
    init = as_matrix(init, "init")

    state = FistaState(
        current=init, previous=init, momentum_point=init, a=1.0, iteration=0
    )
    f_init = float(objective(init))
    best_f, best = f_init, init
    f_prev = f_init
    iterations = 0
    converged = False
    for p in range(1, max_iter + 1):
        point = state.momentum_point if accelerated else state.current
        nxt = prox(kernels.forward_step(point, grad(point), step))
        if not np.all(np.isfinite(nxt)):
            raise DivergenceError("inner solve produced a non-finite iterate", p)
        f_new = float(objective(nxt))
        iterations = p
        if f_new < best_f:
            best_f, best = f_new, nxt
        if accelerated:
            a_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * state.a * state.a))
            coef = (state.a - 1.0) / a_next
            state = FistaState(
                current=nxt,
                previous=state.current,
                momentum_point=kernels.combine_momentum(nxt, state.current, coef),
                a=a_next,
                iteration=p,
            )
        else:
            state = FistaState(
                current=nxt, previous=state.current, momentum_point=nxt,
                a=1.0, iteration=p,
            )
        if f_prev == 0.0:
            if f_new == 0.0:
                converged = True
                break
        elif abs(f_new - f_prev) / abs(f_prev) < rtol:
            converged = True
            break
        if f_new > _RUNAWAY_FACTOR * (abs(best_f) + 1.0):
            break
        f_prev = f_new
    return best, SolveReport(iterations, f_init, best_f, converged)


def fista_solve(grad, prox, objective, sigma, init, max_iter=200, rtol=1e-6):
    """Accelerated proximal descent on objective = F + J from ``init``.

    grad evaluates the gradient of the smooth part F, prox is the proximity
    operator of J scaled for step 1/(2 sigma), objective evaluates F + J.
    At iteration p the gradient step is taken at the extrapolated point
    phi^p, then

        xi^p     = prox(phi^p - grad(phi^p) / (2 sigma))
        a_{p+1}  = (1 + sqrt(1 + 4 a_p^2)) / 2,   a_1 = 1
        phi^{p+1} = xi^p + ((a_p - 1)/a_{p+1}) (xi^p - xi^{p-1})

    Stops when the relative objective change over one iteration drops below
    rtol or after max_iter steps; returns (best-objective iterate, report).
    """
    return _proximal_descent(grad, prox, objective, sigma, init, max_iter, rtol, True)


def ista_solve(grad, prox, objective, sigma, init, max_iter=200, rtol=1e-6):
    """Unaccelerated forward-backward descent; same contract as fista_solve."""
    return _proximal_descent(grad, prox, objective, sigma, init, max_iter, rtol, False)


def _code_sigma(lo, hi, d, k, hp):
    """Inverse step scale for the code block, with a stability guard.

    The fast choice (lo + hi)/(2 d) + (eta + mu)/K (step 2/(m + L) in terms of
    the extreme curvatures m, L of the smooth part) is optimal for the plain
    forward-backward iteration on a positive definite problem, but the
    accelerated recursion tolerates it only while L <= 2 m; beyond that the
    momentum amplifies the sign-flipping top curvature mode. When the
    conditioning is worse, fall back to sigma = L, the general Lipschitz
    fixed-step choice (the same convention the dictionary and dual blocks use).
    """
    m = 2.0 * lo / d + 2.0 * (hp.eta + hp.mu) / k
    big = 2.0 * hi / d + 2.0 * (hp.eta + hp.mu) / k
    if big <= 2.0 * m:
        return (lo + hi) / (2.0 * d) + (hp.eta + hp.mu) / k
    return big


def solve_codes(x, model: Model, u_init, hp: HyperParams):
    """Minimize the energy in U for fixed (D, C) by accelerated shrinkage.

    Returns (U, SolveReport). The per-entry threshold is tau/(K sigma_u) and
    one forward-backward step from U is

        S_{tau/(K sigma_u)}[(1 - eta/(K sigma_u) - mu/(K sigma_u)) U
                            + (1/sigma_u)((1/d) D^T (X - D U) + (eta/K) C X)].

    Degenerate case: if D = 0 and eta = mu = 0 the smooth part is constant, so
    the minimizer is U = 0 when tau > 0 (and U_init already minimal otherwise).
    """
    x = as_matrix(x, "X")
    u_init = as_matrix(u_init, "U_init")
    d_mat, c_mat = model.dictionary, model.dual
    _check_shapes(x, d_mat, c_mat, u_init)
    d, _ = x.shape
    k = d_mat.shape[1]

    gram = d_mat.T @ d_mat
    lo, hi = eigen_range(gram)
    sigma = _code_sigma(lo, hi, d, k, hp)

    dtx = d_mat.T @ x
    cx = c_mat @ x if hp.eta > 0 else None
    xsq = float(np.vdot(x, x))

    def objective(u):
        recon = (xsq - 2.0 * float(np.vdot(dtx, u)) + float(np.vdot(u, gram @ u))) / d
        val = recon
        if hp.eta > 0:
            val += hp.eta / k * float(np.vdot(u - cx, u - cx))
        if hp.mu > 0:
            val += hp.mu / k * float(np.vdot(u, u))
        if hp.tau > 0:
            val += 2.0 * hp.tau / k * kernels.abs_sum(u)
        return val

    if sigma == 0.0:
        out = np.zeros_like(u_init) if hp.tau > 0 else u_init
        return out, SolveReport(0, objective(u_init), objective(out), True)

    const = (2.0 / d) * dtx
    if hp.eta > 0:
        const = const + (2.0 * hp.eta / k) * cx
    ridge = 2.0 * (hp.eta + hp.mu) / k

    def grad(u):
        g = (2.0 / d) * (gram @ u) - const
        if ridge > 0:
            g += ridge * u
        return g

    lam = hp.tau / (k * sigma)

    def prox(m):
        return kernels.soft_threshold(m, lam)

    return fista_solve(
        grad, prox, objective, sigma, u_init, hp.inner_max_iter, hp.inner_rtol
    )


def solve_dictionary(x, d_init, u, hp: HyperParams):
    """Minimize (1/d)||X - D U||^2 over unit-ball columns, warm-started.

    Returns (D, SolveReport). One forward-backward step from D is the
    column-projected D + (1/(d sigma_d)) (X - D U) U^T with
    sigma_d = 2||U U^T||_F / d. If U = 0 the objective is constant in D and
    d_init is returned unchanged. d_init must be feasible.
    """
    x = as_matrix(x, "X")
    d_init = as_matrix(d_init, "D_init")
    u = as_matrix(u, "U")
    _check_shapes(x, d_init, u=u)
    d = x.shape[0]

    uut = u @ u.T
    sigma = 2.0 * float(np.linalg.norm(uut)) / d
    xut = x @ u.T
    xsq = float(np.vdot(x, x))

    def objective(dm):
        return (xsq - 2.0 * float(np.vdot(xut, dm)) + float(np.vdot(dm, dm @ uut))) / d

    if sigma == 0.0:
        f0 = objective(d_init)
        return d_init, SolveReport(0, f0, f0, True)

    def grad(dm):
        return (2.0 / d) * (dm @ uut - xut)

    return fista_solve(
        grad, kernels.project_columns, objective, sigma, d_init,
        hp.inner_max_iter, hp.inner_rtol,
    )


def solve_dual(x, c_init, u, hp: HyperParams, xxt=None):
    """Minimize the coding term over unit-ball rows of C, warm-started.

    Returns (C, SolveReport). The tracked objective is the eta-free surrogate
    (1/K)||U - C X||_F^2 (proportional to the energy's coding term for
    eta > 0, so minimizer and relative changes coincide); one step is the
    row-projected C + (1/(K sigma_c)) (U - C X) X^T with
    sigma_c = 2||X X^T||_F / K. If eta = 0 the energy does not involve C and
    c_init is returned unchanged. X X^T may be passed in to avoid
    recomputation across outer iterations. c_init must be feasible.
    """
    x = as_matrix(x, "X")
    c_init = as_matrix(c_init, "C_init")
    u = as_matrix(u, "U")
    k = u.shape[0]
    if c_init.shape != (k, x.shape[0]):
        raise ContractError(
            f"C_init must have shape {(k, x.shape[0])} to match U and X, "
            f"got {c_init.shape}"
        )
    if u.shape[1] != x.shape[1]:
        raise ContractError(
            f"U has {u.shape[1]} columns but X has {x.shape[1]} columns"
        )

    if xxt is None:
        xxt = x @ x.T
    sigma = 2.0 * float(np.linalg.norm(xxt)) / k
    uxt = u @ x.T
    usq = float(np.vdot(u, u))

    def objective(cm):
        return (usq - 2.0 * float(np.vdot(uxt, cm)) + float(np.vdot(cm, cm @ xxt))) / k

    if hp.eta == 0.0 or sigma == 0.0:
        f0 = objective(c_init)
        return c_init, SolveReport(0, f0, f0, True)

    def grad(cm):
        return (2.0 / k) * (cm @ xxt - uxt)

    return fista_solve(
        grad, kernels.project_rows, objective, sigma, c_init,
        hp.inner_max_iter, hp.inner_rtol,
    )
