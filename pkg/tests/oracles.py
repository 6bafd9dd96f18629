"""Independent reference computations the tests compare library results to.

Everything here is deliberately built on machinery the library does not
use on its main paths: exact rational arithmetic for vertex enumeration,
raw scipy LPs for optimal values, and explicit support enumeration for
the interpolation QP. Small and slow on purpose.
"""

import itertools
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog


def _exact_solve(rows, rhs):
    """Gauss-Jordan over the rationals; None when the block is singular."""
    n = len(rhs)
    M = [list(row) + [r] for row, r in zip(rows, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        inv = M[col][col]
        M[col] = [v / inv for v in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
    return [M[r][n] for r in range(n)]


def rational_vertices(A, b):
    """All vertices of {x : A x <= b} by exact subset enumeration.

    Floats are binary rationals, so converting entries to Fraction is
    lossless and feasibility tests are exact. Returns a sorted list of
    exact coordinate tuples; callers compare against float enumeration
    within a merge radius.
    """
    A = [[Fraction(x) for x in row] for row in np.asarray(A, float).tolist()]
    b = [Fraction(x) for x in np.asarray(b, float).tolist()]
    m, n = len(A), len(A[0])
    found = set()
    for subset in itertools.combinations(range(m), n):
        v = _exact_solve([A[i] for i in subset], [b[i] for i in subset])
        if v is None:
            continue
        if all(sum(Ai[j] * v[j] for j in range(n)) <= bi for Ai, bi in zip(A, b)):
            found.add(tuple(v))
    return sorted(found)


def lp_max(c, A, b):
    """max c'x over {A x <= b} by a bare scipy call, free variables.

    Returns (value, status) with status one of "optimal", "unbounded",
    "infeasible".
    """
    res = linprog(-np.asarray(c, float), A_ub=A, b_ub=b,
                  bounds=[(None, None)] * np.asarray(A).shape[1],
                  method="highs")
    if res.status == 3:
        return np.inf, "unbounded"
    if res.status == 2:
        return -np.inf, "infeasible"
    assert res.status == 0, res.message
    return -res.fun, "optimal"


def simplex_qp_weights(points, x):
    """Unique solution of min ||w||^2 s.t. points' w = x, 1'w = 1, w >= 0.

    Enumerates every support set: the minimum-norm solution of the
    equality system restricted to a support is optimal for the QP when
    it is feasible, and the true optimum shows up as the candidate with
    the smallest norm (its own positive support yields exactly it).
    Exponential in the point count; returns None when x is outside the
    hull.
    """
    pts = np.asarray(points, float)
    x = np.asarray(x, float).reshape(-1)
    N = pts.shape[0]
    f_full = np.concatenate([x, [1.0]])
    best = None
    best_norm = np.inf
    for size in range(1, N + 1):
        for support in itertools.combinations(range(N), size):
            E = np.vstack([pts[list(support)].T, np.ones((1, size))])
            w_s, *_ = np.linalg.lstsq(E, f_full, rcond=None)
            if np.max(np.abs(E @ w_s - f_full)) > 1e-9 or np.min(w_s) < -1e-10:
                continue
            norm = float(w_s @ w_s)
            if norm < best_norm - 1e-14:
                best_norm = norm
                best = (support, w_s)
    if best is None:
        return None
    out = np.zeros(N)
    out[list(best[0])] = best[1]
    return out


def halfspace_support(A, b, directions):
    """Support values of {A x <= b} in each direction, via lp_max."""
    return np.array([lp_max(c, A, b)[0] for c in np.atleast_2d(directions)])
