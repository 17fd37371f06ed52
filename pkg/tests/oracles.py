"""Independent reference implementations used to check the library.

Everything here is deliberately written the slow, obvious way (explicit
loops, grid searches, classic textbook iterations) so that agreement with
the fast library code is meaningful evidence of correctness.
"""

import itertools

import numpy as np


def naive_energy(x, d_mat, c_mat, u, tau, eta, mu):
    """Element-by-element evaluation of the training objective."""
    d, n = x.shape
    k = d_mat.shape[1]
    recon = 0.0
    for a in range(d):
        for j in range(n):
            pred = 0.0
            for i in range(k):
                pred += d_mat[a, i] * u[i, j]
            recon += (x[a, j] - pred) ** 2
    coding = 0.0
    for i in range(k):
        for j in range(n):
            pred = 0.0
            for a in range(d):
                pred += c_mat[i, a] * x[a, j]
            coding += (u[i, j] - pred) ** 2
    l1 = 0.0
    l2 = 0.0
    for i in range(k):
        for j in range(n):
            l1 += abs(u[i, j])
            l2 += u[i, j] ** 2
    return recon / d + eta * coding / k + 2.0 * tau * l1 / k + mu * l2 / k


def naive_matmul(a, b):
    """Triple-loop matrix product."""
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            s = 0.0
            for t in range(a.shape[1]):
                s += a[i, t] * b[t, j]
            out[i, j] = s
    return out


def grid_prox_l1(x, lam, lo=-3.0, hi=3.0, step=1e-4):
    """Brute-force argmin_y { lam*|y| + 0.5*(x-y)^2 } over a grid."""
    ys = np.arange(lo, hi + step, step)
    vals = lam * np.abs(ys) + 0.5 * (x - ys) ** 2
    return float(ys[np.argmin(vals)])


def grid_project_ball_2d(v, step=1e-3):
    """Nearest point to v in the unit disk, found over a dense grid."""
    ax = np.arange(-1.0, 1.0 + step, step)
    gx, gy = np.meshgrid(ax, ax, indexing="ij")
    mask = gx * gx + gy * gy <= 1.0
    px, py = gx[mask], gy[mask]
    d2 = (px - v[0]) ** 2 + (py - v[1]) ** 2
    i = int(np.argmin(d2))
    return np.array([px[i], py[i]])


def central_diff(f, m, h=1e-6):
    """Central finite-difference gradient of scalar f at matrix m."""
    g = np.zeros_like(m)
    for idx in np.ndindex(m.shape):
        step = np.zeros_like(m)
        step[idx] = h
        g[idx] = (f(m + step) - f(m - step)) / (2.0 * h)
    return g


def jacobi_eigvals(g, sweeps=100, tol=1e-14):
    """Eigenvalues of a symmetric matrix by the cyclic Jacobi method."""
    a = np.array(g, dtype=float, copy=True)
    n = a.shape[0]
    for _ in range(sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += a[p, q] * a[p, q]
        if off <= tol * max(1.0, float(np.trace(a * a))):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < 1e-300:
                    continue
                theta = 0.5 * (a[q, q] - a[p, p]) / a[p, q]
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = c
                rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
    return np.sort(np.diag(a))


def cd_codes(x, d_mat, c_mat, tau, eta, mu, u0, sweeps=40000, tol=1e-13):
    """Cyclic coordinate descent on the code objective, run to high precision.

    Each coordinate update is the exact scalar soft-threshold minimizer, so
    the limit is the block optimum independently of the library's solver.
    """
    d, n = x.shape
    k = d_mat.shape[1]
    tau_w = tau / k
    u = np.array(u0, dtype=float, copy=True)
    gram = d_mat.T @ d_mat / d + (eta + mu) / k * np.eye(k)
    diag = np.diag(gram).copy()
    cx = c_mat @ x
    b = d_mat.T @ x / d + (eta / k) * cx

    def objective(u):
        r = x - d_mat @ u
        val = np.vdot(r, r) / d + 2.0 * tau_w * np.abs(u).sum()
        val += eta / k * np.vdot(u - cx, u - cx) + mu / k * np.vdot(u, u)
        return float(val)

    prev = objective(u)
    for _ in range(sweeps):
        for i in range(k):
            rho = b[i] - gram[i] @ u + diag[i] * u[i]
            u[i] = np.sign(rho) * np.maximum(np.abs(rho) - tau_w, 0.0) / diag[i]
        cur = objective(u)
        if abs(prev - cur) <= tol * max(1.0, abs(cur)):
            break
        prev = cur
    return u, objective(u)


def code_objective(x, d_mat, c_mat, tau, eta, mu, u):
    """The code-block objective evaluated directly from its definition."""
    d = x.shape[0]
    k = d_mat.shape[1]
    r = x - d_mat @ u
    cx = c_mat @ x
    val = np.vdot(r, r) / d + 2.0 * tau / k * np.abs(u).sum()
    val += eta / k * np.vdot(u - cx, u - cx) + mu / k * np.vdot(u, u)
    return float(val)


def projected_gradient_rows(x, u, c0, iters=200000, tol=1e-12):
    """Per-row projected gradient descent for min ||U - C X||_F^2, rows in
    the unit ball. Plain small-step descent run to a tiny tolerance."""
    xxt = x @ x.T
    step = 1.0 / (2.0 * np.linalg.eigvalsh(xxt).max() + 1e-12)
    c = np.array(c0, dtype=float, copy=True)
    uxt = u @ x.T
    prev = np.inf
    for _ in range(iters):
        grad = 2.0 * (c @ xxt - uxt)
        c = c - step * grad
        norms = np.sqrt((c * c).sum(axis=1))
        scale = np.maximum(norms, 1.0)
        c = c / scale[:, None]
        r = u - c @ x
        cur = float(np.vdot(r, r))
        if abs(prev - cur) <= tol * max(1.0, cur):
            break
        prev = cur
    return c, cur


def best_assignment_cosines(true_dict, learned_dict):
    """Exhaustive optimal one-to-one assignment maximizing total |cosine|.

    Only usable for tiny K (factorial search). Returns the per-true-atom
    |cosine| under the best total assignment.
    """
    k = true_dict.shape[1]
    tn = true_dict / np.linalg.norm(true_dict, axis=0)
    ln = learned_dict / np.linalg.norm(learned_dict, axis=0)
    cos = np.abs(tn.T @ ln)
    best, best_val = None, -1.0
    for perm in itertools.permutations(range(k)):
        val = sum(cos[i, perm[i]] for i in range(k))
        if val > best_val:
            best_val, best = val, perm
    return np.array([cos[i, best[i]] for i in range(k)])


def pca_basis_by_jacobi(x, k):
    """Top-k orthonormal eigenbasis of X X^T via the Jacobi iteration.

    An eigenvector variant of jacobi_eigvals: accumulate rotations so the
    result is independent of the library's SVD-based routine.
    """
    s = x @ x.T
    n = s.shape[0]
    a = s.copy()
    v = np.eye(n)
    for _ in range(100):
        off = np.sum(np.triu(a, 1) ** 2)
        if off <= 1e-14 * max(1.0, float(np.trace(a * a))):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < 1e-300:
                    continue
                theta = 0.5 * (a[q, q] - a[p, p]) / a[p, q]
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                sn = t * c
                rot = np.eye(n)
                rot[p, p] = c
                rot[q, q] = c
                rot[p, q] = sn
                rot[q, p] = -sn
                a = rot.T @ a @ rot
                v = v @ rot
    order = np.argsort(np.diag(a))[::-1]
    return v[:, order[:k]]
