"""Brute-force reference computations, independent of the package code paths."""

import itertools

import numpy as np


def box_matrix(k, n, circular=False):
    """Operator matrix straight from the definition: row i sums x[i..i+k-1] (mod n if circular)."""
    rows = n if circular else n - k + 1
    M = np.zeros((rows, n), dtype=np.int64)
    for i in range(rows):
        for j in range(n):
            offset = (j - i) % n if circular else j - i
            if 0 <= offset < k:
                M[i, j] = 1
    return M


def window_sums_2d(x, k):
    h, w = x.shape
    out = np.zeros((h - k + 1, w - k + 1), dtype=x.dtype)
    for i in range(h - k + 1):
        for j in range(w - k + 1):
            out[i, j] = x[i:i + k, j:j + k].sum()
    return out


def lp_vertices(c, E, f, tol=1e-9):
    """All basic feasible solutions of ``E u = f, u >= 0`` with their objectives."""
    E = np.asarray(E, dtype=float)
    f = np.asarray(f, dtype=float)
    c = np.asarray(c, dtype=float)
    m, p = E.shape
    # keep an independent subset of rows
    rows = []
    for i in range(m):
        if np.linalg.matrix_rank(E[rows + [i]]) > len(rows):
            rows.append(i)
    Er, fr = E[rows], f[rows]
    r = len(rows)
    out = []
    for cols in itertools.combinations(range(p), r):
        B = Er[:, cols]
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        ub = np.linalg.solve(B, fr)
        if np.any(ub < -tol):
            continue
        u = np.zeros(p)
        u[list(cols)] = ub
        if np.max(np.abs(E @ u - f), initial=0.0) > 1e-7 * (1 + np.max(np.abs(f), initial=0.0)):
            continue
        out.append((float(c @ u), u))
    return out


def lp_min(c, E, f):
    """Minimum objective by vertex enumeration (assumes a bounded optimum); None if infeasible."""
    verts = lp_vertices(c, E, f)
    return min(v for v, _ in verts) if verts else None


def l1_minimizers(M, y, tol=1e-7):
    """Distinct optimal vertices (in x-space) of ``min ||x||_1 s.t. M x = y``."""
    n = M.shape[1]
    verts = lp_vertices(np.ones(2 * n), np.hstack([M, -M]), y)
    best = min(v for v, _ in verts)
    xs = []
    for v, u in verts:
        if v <= best + tol:
            x = u[:n] - u[n:]
            if not any(np.max(np.abs(x - other)) <= 1e-7 for other in xs):
                xs.append(x)
    return best, xs


def nullspace_gap_exhaustive(z, s):
    """max over |S| <= s of ||z_S||_1 - ||z_notS||_1 by enumerating every S."""
    mag = np.abs(np.asarray(z, dtype=float))
    total = mag.sum()
    best = -np.inf
    for size in range(0, s + 1):
        for S in itertools.combinations(range(len(mag)), size):
            inside = mag[list(S)].sum()
            best = max(best, inside - (total - inside))
    return best
