"""Pure-numpy implementations of the elementwise hot-loop kernels.

Mirrors ``_kernels_c``; the active implementation is picked in ``kernels``.
"""

import numpy as np


def soft_threshold(a, lam):
    """Entrywise shrinkage sign(a) * max(|a| - lam, 0)."""
    return np.sign(a) * np.maximum(np.abs(a) - lam, 0.0)


def forward_step(point, grad, step):
    """Gradient step point - step * grad."""
    return point - step * grad


def combine_momentum(xi, xi_prev, coef):
    """Extrapolation xi + coef * (xi - xi_prev)."""
    return xi + coef * (xi - xi_prev)


def project_columns(a):
    """Scale every column with Euclidean norm > 1 back onto the unit ball."""
    norms = np.sqrt(np.einsum("ij,ij->j", a, a))
    return a / np.maximum(norms, 1.0)


def project_rows(a):
    """Scale every row with Euclidean norm > 1 back onto the unit ball."""
    norms = np.sqrt(np.einsum("ij,ij->i", a, a))
    return a / np.maximum(norms, 1.0)[:, None]


def abs_sum(a):
    """Sum of absolute values, as a float."""
    return float(np.abs(a).sum())
