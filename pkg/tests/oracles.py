"""Reference implementations that share no code with the package.

Slow, simple and written directly from the definitions.
"""

import itertools

import numpy as np


def jacobi_eigenvalues(A, tol=1e-15, max_sweeps=100):
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(A**2) - np.sum(np.diag(A) ** 2), 0.0))
        if off <= tol * max(1.0, np.abs(A).max()):
            break
        for p in range(n - 1):
            for q in np.nonzero(A[p, p + 1:])[0] + p + 1:
                apq = A[p, q]
                diff = A[q, q] - A[p, p]
                if abs(diff) > 1e150 * abs(apq):
                    t = apq / diff            # theta huge: t ~ 1 / (2 theta)
                else:
                    theta = diff / (2.0 * apq)
                    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                    if theta < 0:
                        t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J with J the rotation in the (p, q) plane
                ap, aq = A[:, p].copy(), A[:, q].copy()
                A[:, p], A[:, q] = c * ap - s * aq, s * ap + c * aq
                ap, aq = A[p, :].copy(), A[q, :].copy()
                A[p, :], A[q, :] = c * ap - s * aq, s * ap + c * aq
                A[p, q] = A[q, p] = 0.0
    return np.sort(np.diag(A))


def quartic_grid_min(p, q, r, s, lo, hi, step=1e-5):
    """Minimum of the quartic sampled on a uniform grid plus both endpoints."""
    n = int(np.ceil((hi - lo) / step))
    v = np.linspace(lo, hi, n + 1)
    val = p + q * v + r * v**2 + s * v**4
    return float(val.min())


def cubic_roots_bisection(a1, a0, span=None, samples=20001):
    """Real roots of v^3 + a1 v + a0 by sign changes on a grid and bisection."""
    f = lambda v: v**3 + a1 * v + a0
    bound = span if span is not None else 1.0 + max(abs(a1), abs(a0))  # Cauchy bound
    grid = np.linspace(-bound, bound, samples)
    vals = f(grid)
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            roots.append(a)
            continue
        if fa * fb < 0:
            for _ in range(200):
                mid = 0.5 * (a + b)
                if f(mid) * fa > 0:
                    a, fa = mid, f(mid)
                else:
                    b = mid
            roots.append(0.5 * (a + b))
    if vals[-1] == 0.0:
        roots.append(grid[-1])
    return roots


def box_qp_enumeration(B, b, lam):
    """Exact minimizer of ||B w - b||^2 + lam sum(w) on [0,1]^m by trying all 3^m
    assignments of each controller to {lower bound, upper bound, free}."""
    m = B.shape[1]
    G = B.T @ B
    c = B.T @ b
    best_w, best_f = None, np.inf
    for state in itertools.product((0, 1, 2), repeat=m):
        state = np.array(state)
        w = np.where(state == 1, 1.0, 0.0)
        free = state == 2
        if free.any():
            rhs = c[free] - 0.5 * lam - G[np.ix_(free, ~free)] @ w[~free]
            try:
                w[free] = np.linalg.solve(G[np.ix_(free, free)], rhs)
            except np.linalg.LinAlgError:
                continue
            if np.any(w[free] < 0) or np.any(w[free] > 1):
                continue
        f = float(np.sum((B @ w - b) ** 2) + lam * w.sum())
        if f < best_f:
            best_w, best_f = w, f
    return best_w, best_f


def dense_quadratic_rig(B, pairs, C, w):
    """Quadratic rig written as an explicit sum over pairs."""
    out = B @ w
    for k, (i, j) in enumerate(pairs):
        out = out + w[i] * w[j] * C[:, k]
    return out
