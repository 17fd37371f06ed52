"""Evaluation metrics: subspace recovery, dual coherence, support, matching."""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .model import Model, as_matrix


def pca_basis(x, k: int) -> np.ndarray:
    """Top-k left singular basis of the column-centered data, d x k orthonormal."""
    x = as_matrix(x, "X")
    d, n = x.shape
    if not 1 <= k <= min(d, n):
        raise ContractError(f"k must be in [1, min(d, n)] = [1, {min(d, n)}], got {k}")
    centered = x - x.mean(axis=1, keepdims=True)
    left, _, _ = np.linalg.svd(centered, full_matrices=False)
    return left[:, :k]


def largest_principal_angle(a, b) -> float:
    """Largest principal angle (radians) between the column spans of a and b.

    Both inputs are d x k with full column rank; the angle is
    arccos(smallest singular value of Qa^T Qb) after orthonormalizing each
    basis, symmetric in its arguments, and in [0, pi/2].
    """
    a = as_matrix(a, "A")
    b = as_matrix(b, "B")
    if a.shape != b.shape:
        raise ContractError(f"bases must have equal shapes, got {a.shape} and {b.shape}")
    if a.shape[0] < a.shape[1]:
        raise ContractError(f"bases must be tall (d >= k), got shape {a.shape}")
    for name, m in (("A", a), ("B", b)):
        if np.linalg.matrix_rank(m) < m.shape[1]:
            raise ContractError(f"{name} does not have full column rank")
    qa, _ = np.linalg.qr(a)
    qb, _ = np.linalg.qr(b)
    s = np.linalg.svd(qa.T @ qb, compute_uv=False)
    return float(np.arccos(np.clip(s[-1], -1.0, 1.0)))


def dual_distance(model: Model, indices=None) -> float:
    """Mean misalignment between atoms and their dual filters.

    For each atom/filter pair (d_i, c_i) the distance is
    1 - |<d_i, c_i>| / (||d_i|| ||c_i||); the metric is the mean over pairs
    (optionally restricted to ``indices``, e.g. the atoms actually used).
    Pairs where either vector is zero are skipped with a warning; if every
    pair is zero the metric is undefined and a ContractError is raised.
    """
    d_mat, c_mat = model.dictionary, model.dual
    k = d_mat.shape[1]
    if indices is None:
        idx = np.arange(k)
    else:
        idx = np.asarray(indices, dtype=int)
        if idx.size == 0 or np.any(idx < 0) or np.any(idx >= k):
            raise ContractError(f"indices must be a nonempty subset of [0, {k})")
    d_norms = np.linalg.norm(d_mat[:, idx], axis=0)
    c_norms = np.linalg.norm(c_mat[idx, :], axis=1)
    ok = (d_norms > 0) & (c_norms > 0)
    if not np.any(ok):
        raise ContractError("dual distance undefined: every selected pair is zero")
    if not np.all(ok):
        skipped = idx[~ok]
        warnings.warn(
            f"dual_distance: skipping zero-norm atom/filter pairs {skipped.tolist()}",
            stacklevel=2,
        )
    inner = np.abs(np.einsum("ij,ji->i", d_mat[:, idx].T, c_mat[idx, :].T))
    cos = inner[ok] / (d_norms[ok] * c_norms[ok])
    return float(np.mean(1.0 - cos))


def support_stats(u, zero_tol: float = 1e-12):
    """Average support size and per-example support counts of the codes.

    An entry is counted as used when |u| > zero_tol. Returns (mean count,
    int array of length n_examples).
    """
    u = as_matrix(u, "U")
    if zero_tol < 0:
        raise ContractError(f"zero_tol must be >= 0, got {zero_tol}")
    counts = np.count_nonzero(np.abs(u) > zero_tol, axis=0)
    return float(counts.mean()), counts


@dataclass(frozen=True)
class MatchReport:
    """Greedy one-to-one atom matching result.

    pairs maps true-atom index -> (learned-atom index, |cosine|); the
    matched_fraction counts true atoms whose |cosine| reached the threshold,
    divided by the number of true atoms.
    """

    pairs: list
    matched_fraction: float


def match_atoms(true_dict, learned_dict, theta: float = 0.95) -> MatchReport:
    """Greedily match learned atoms to true atoms by absolute cosine.

    Pairs are claimed in decreasing |cosine| order, each atom used at most
    once (ties broken toward smaller indices). Zero-norm atoms on either side
    are excluded from matching (with a warning) and count as unmatched.
    """
    t = as_matrix(true_dict, "true dictionary")
    l = as_matrix(learned_dict, "learned dictionary")
    if t.shape[0] != l.shape[0]:
        raise ContractError(
            f"dictionaries must share the feature dimension, got {t.shape} and {l.shape}"
        )
    if not 0 <= theta <= 1:
        raise ContractError(f"theta must be in [0, 1], got {theta}")
    tn = np.linalg.norm(t, axis=0)
    ln = np.linalg.norm(l, axis=0)
    t_ok = tn > 0
    l_ok = ln > 0
    if not (np.all(t_ok) and np.all(l_ok)):
        warnings.warn(
            f"match_atoms: excluding zero-norm atoms "
            f"(true {np.flatnonzero(~t_ok).tolist()}, "
            f"learned {np.flatnonzero(~l_ok).tolist()})",
            stacklevel=2,
        )
    cos = np.zeros((t.shape[1], l.shape[1]))
    if np.any(t_ok) and np.any(l_ok):
        tt = t[:, t_ok] / tn[t_ok]
        ll = l[:, l_ok] / ln[l_ok]
        cos[np.ix_(t_ok, l_ok)] = np.abs(tt.T @ ll)

    order = np.argsort(-cos, axis=None, kind="stable")
    used_t = np.zeros(t.shape[1], dtype=bool)
    used_l = np.zeros(l.shape[1], dtype=bool)
    n_pairs = min(int(t_ok.sum()), int(l_ok.sum()))
    pairs = []
    for flat in order:
        i, j = divmod(int(flat), l.shape[1])
        if used_t[i] or used_l[j] or not (t_ok[i] and l_ok[j]):
            continue
        used_t[i] = used_l[j] = True
        pairs.append((i, j, float(cos[i, j])))
        if len(pairs) == n_pairs:
            break
    matched = sum(1 for _, _, c in pairs if c >= theta)
    return MatchReport(pairs=pairs, matched_fraction=matched / t.shape[1])
