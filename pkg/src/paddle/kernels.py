"""Backend dispatch for the elementwise hot-loop kernels.

Two interchangeable implementations exist: a compiled Cython extension
(``_kernels_c``) and a pure-numpy fallback (``_kernels_py``). The compiled one
is selected at import when available. ``set_backend`` switches explicitly,
which the benchmark and the parity tests use; it is configuration, not
something to flip mid-solve.
"""

from . import _kernels_py

try:
    from . import _kernels_c
except ImportError:  # extension not built; numpy fallback only
    _kernels_c = None

_backends = {"python": _kernels_py}
if _kernels_c is not None:
    _backends["c"] = _kernels_c

_active = "c" if _kernels_c is not None else "python"


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_backends))


def active_backend() -> str:
    return _active


def set_backend(name: str) -> None:
    global _active
    if name not in _backends:
        raise ValueError(
            f"unknown kernel backend {name!r}; available: {available_backends()}"
        )
    _active = name


def soft_threshold(a, lam):
    """Entrywise shrinkage sign(a) * max(|a| - lam, 0)."""
    return _backends[_active].soft_threshold(a, lam)


def forward_step(point, grad, step):
    """Gradient step point - step * grad."""
    return _backends[_active].forward_step(point, grad, step)


def combine_momentum(xi, xi_prev, coef):
    """Extrapolation xi + coef * (xi - xi_prev)."""
    return _backends[_active].combine_momentum(xi, xi_prev, coef)


def project_columns(a):
    """Scale every column with Euclidean norm > 1 back onto the unit ball."""
    return _backends[_active].project_columns(a)


def project_rows(a):
    """Scale every row with Euclidean norm > 1 back onto the unit ball."""
    return _backends[_active].project_rows(a)


def abs_sum(a) -> float:
    """Sum of absolute values."""
    return _backends[_active].abs_sum(a)
