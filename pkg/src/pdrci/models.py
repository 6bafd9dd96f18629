"""LPV system and constraint data.

The plant is x+ = A(p) x + B(p) u + w with A(p) = sum_j p_j A^j and
B(p) = sum_j p_j B^j, the scheduling parameter p confined to a polytope
P, its one-step increment to a polytope R, and the disturbance to W.
Two standing requirements make the downstream convex program work:

    (1) 0 in R, so the parameter may also stand still;
    (2) p >= 0 everywhere on P, so in-cone offsets combine conically.

Systems violating (2) are handled by the nonnegativity lifting below,
which prepends a constant parameter coordinate fixed to one and shifts
the rest into the nonnegative orthant.
"""

import logging

import numpy as np

from .polytopes import (
    DEFAULT_TOL,
    HPolytope,
    VPolytope,
    contains,
    enumerate_vertices,
    support_value,
)

logger = logging.getLogger(__name__)

# Rejection-sampling cap for one parameter step.
MAX_SAMPLE_TRIES = 100_000


class AssumptionError(Exception):
    """Constraint data violates a standing requirement."""


class LpvSystem:
    """Matrix family A^j (n x n), B^j (n x m), j = 1..s."""

    def __init__(self, A_list, B_list):
        A_list = [np.asarray(A, dtype=float) for A in A_list]
        B_list = [np.asarray(B, dtype=float) for B in B_list]
        if len(A_list) != len(B_list) or not A_list:
            raise ValueError("need matching nonempty A and B families")
        n = A_list[0].shape[0]
        m = B_list[0].shape[1] if B_list[0].ndim == 2 else 1
        B_list = [B.reshape(n, -1) for B in B_list]
        for A in A_list:
            if A.shape != (n, n):
                raise ValueError("all A^j must be square and share a shape")
        for B in B_list:
            if B.shape != (n, m):
                raise ValueError("all B^j must share the shape n x m")
        self.A_list = A_list
        self.B_list = B_list
        self.n = n
        self.m = m
        self.s = len(A_list)

    def evaluate(self, p):
        """(A(p), B(p)) as parameter-weighted sums."""
        p = np.asarray(p, dtype=float).reshape(-1)
        if p.size != self.s:
            raise ValueError(f"parameter has {p.size} entries, expected {self.s}")
        A = sum(pj * Aj for pj, Aj in zip(p, self.A_list))
        B = sum(pj * Bj for pj, Bj in zip(p, self.B_list))
        return A, B

    def __repr__(self):
        return f"LpvSystem(n={self.n}, m={self.m}, s={self.s})"


def evaluate_matrices(sys, p):
    """Functional alias for LpvSystem.evaluate."""
    return sys.evaluate(p)


class LpvProblem:
    """System plus constraint polytopes X, U, W, P, R.

    Vertices of P and W are enumerated once at construction and cached
    (the template-selection step iterates over them). Validation checks
    the standing requirements; a violated 0-in-R check degrades to a
    warning and a flag because the quasi-LPV route never consults the
    rate bound (its intersection constraint is tied off by Y = 0).
    """

    def __init__(self, sys, X, U, W, P, R, tol=None, validate=True):
        self.sys = sys
        self.X = X
        self.U = U
        self.W = W
        self.P = P
        self.R = R
        self.tol = tol or DEFAULT_TOL
        # W and P are frequently degenerate (segments, simplex slices),
        # so enumeration must tolerate extra active rows.
        self.vertices_P = enumerate_vertices(P, self.tol, on_degenerate="ignore")
        self.vertices_W = enumerate_vertices(W, self.tol, on_degenerate="ignore")
        self.rate_bound_valid = contains(R, np.zeros(R.dim), self.tol)
        if validate:
            self._validate()

    def _validate(self):
        if self.P.dim != self.sys.s:
            raise AssumptionError("P lives in the wrong dimension")
        if self.X.dim != self.sys.n or self.U.dim != self.sys.m or self.W.dim != self.sys.n:
            raise AssumptionError("constraint polytope dimensions do not match the system")
        if self.R.dim != self.sys.s:
            raise AssumptionError("R lives in the wrong dimension")
        if not self.rate_bound_valid:
            logger.warning(
                "0 is not in R; rate-bound machinery is unsound for this model "
                "(acceptable only for the quasi-LPV route)"
            )
        for j in range(self.sys.s):
            e = np.zeros(self.sys.s)
            e[j] = -1.0
            if support_value(self.P, e) > self.tol.feas_tol:
                raise AssumptionError(
                    f"P admits negative values in coordinate {j}; "
                    "apply the nonnegativity lifting first"
                )
        # boundedness of P, W, R was established by vertex enumeration / membership
        enumerate_vertices(self.R, self.tol, on_degenerate="ignore")

    def __repr__(self):
        return f"LpvProblem({self.sys!r})"


class PPlusData:
    """Joint constraint data for (p, p_increment) pairs.

    H_pdelta has the block structure [[H^p, 0], [0, H^d], [H^p, H^p]]
    with right-hand side (h^p, h^d, h^p): row groups encode p in P,
    increment in R, and p + increment in P.
    """

    def __init__(self, H_pdelta, h_pdelta):
        self.H_pdelta = H_pdelta
        self.h_pdelta = h_pdelta


def build_pplus(P, R):
    """Assemble PPlusData from the parameter set and the increment set."""
    mp, s = P.A.shape
    md = R.A.shape[0]
    H = np.zeros((2 * mp + md, 2 * s))
    H[:mp, :s] = P.A
    H[mp:mp + md, s:] = R.A
    H[mp + md:, :s] = P.A
    H[mp + md:, s:] = P.A
    h = np.concatenate([P.b, R.b, P.b])
    return PPlusData(H, h)


def sample_parameter_step(p, problem, rng):
    """One admissible next parameter, uniform on ({p} + R) intersect P.

    Parameter sets routinely carry equality rows (simplex sums, pinned
    lifted coordinates), so the feasible region is sampled inside its
    own affine hull: its vertices are enumerated, candidates are drawn
    uniformly from the bounding box in affine-hull coordinates, and
    rejected against the half-space rows. Falls back to p itself (always
    admissible when 0 is in R) after MAX_SAMPLE_TRIES.
    """
    p = np.asarray(p, dtype=float).reshape(-1)
    R, P = problem.R, problem.P
    F = np.vstack([P.A, R.A])
    g = np.concatenate([P.b, R.b + R.A @ p])
    # bounded: the intersection sits inside the bounded parameter set
    verts = enumerate_vertices(HPolytope(F, g), problem.tol,
                               on_degenerate="ignore", assume_bounded=True).vertices
    if len(verts) == 1:
        return verts[0]
    center = verts.mean(axis=0)
    spread = verts - center
    _, svals, vt = np.linalg.svd(spread, full_matrices=False)
    basis = vt[svals > 1e-10 * max(1.0, svals[0])]
    coords = spread @ basis.T
    lo, hi = coords.min(axis=0), coords.max(axis=0)
    feas = problem.tol.feas_tol
    for _ in range(MAX_SAMPLE_TRIES):
        q = center + basis.T @ rng.uniform(lo, hi)
        if np.all(F @ q <= g + feas):
            return q
    logger.warning("parameter-step sampling hit the retry cap; returning p unchanged")
    return p


def _unit(n, j):
    e = np.zeros(n)
    e[j] = 1.0
    return e


def lift_nonnegative(sys, P_hat, R_hat=None):
    """Nonnegativity lifting: constant coordinate plus orthant shift.

    Given matrices over a parameter set P_hat that may admit negative
    coordinates, pick the componentwise shift rho with rho + p >= 0 on
    P_hat, and return (lifted system, lifted P, lifted R) over

        p_lifted = (1, p_hat + rho),   s_lifted = s + 1.

    The first lifted matrix absorbs -sum_j rho_j A^j so that evaluating
    the lifted system at a lifted parameter reproduces the original
    dynamics exactly.
    """
    s = sys.s
    rho = np.zeros(s)
    for j in range(s):
        low = -support_value(P_hat, -_unit(s, j))
        rho[j] = max(0.0, -low)
    A0 = -sum(rho[j] * sys.A_list[j] for j in range(s))
    B0 = -sum(rho[j] * sys.B_list[j] for j in range(s))
    lifted_sys = LpvSystem([A0] + list(sys.A_list), [B0] + list(sys.B_list))

    # P_lifted = {1} x ({rho} + P_hat), the equality stored as a row pair
    mp = P_hat.A.shape[0]
    Hp = np.zeros((mp + 2, s + 1))
    Hp[:mp, 1:] = P_hat.A
    hp = np.concatenate([P_hat.b + P_hat.A @ rho, [1.0, -1.0]])
    Hp[mp, 0] = 1.0
    Hp[mp + 1, 0] = -1.0
    P_lifted = HPolytope(Hp, hp)

    if R_hat is None:
        R_lifted = None
    else:
        md = R_hat.A.shape[0]
        Hd = np.zeros((md + 2, s + 1))
        Hd[:md, 1:] = R_hat.A
        hd = np.concatenate([R_hat.b, [0.0, 0.0]])
        Hd[md, 0] = 1.0
        Hd[md + 1, 0] = -1.0
        R_lifted = HPolytope(Hd, hd)
    return lifted_sys, P_lifted, R_lifted, rho


def problem_to_dict(problem, lift=False):
    """Model-file dictionary {n, m, s, A, B, X, U, W, P, R, lift}."""

    def hp(P):
        return {"H": P.A.tolist(), "h": P.b.tolist()}

    return {
        "n": problem.sys.n,
        "m": problem.sys.m,
        "s": problem.sys.s,
        "A": [A.tolist() for A in problem.sys.A_list],
        "B": [B.tolist() for B in problem.sys.B_list],
        "X": hp(problem.X),
        "U": hp(problem.U),
        "W": hp(problem.W),
        "P": hp(problem.P),
        "R": hp(problem.R),
        "lift": bool(lift),
    }


def problem_from_dict(data, tol=None, validate=True):
    """Inverse of problem_to_dict; applies the lifting when lift is set."""

    def hp(d):
        return HPolytope(np.array(d["H"], dtype=float), np.array(d["h"], dtype=float))

    sys = LpvSystem([np.array(A, dtype=float) for A in data["A"]],
                    [np.array(B, dtype=float) for B in data["B"]])
    X, U, W, P, R = (hp(data[k]) for k in ("X", "U", "W", "P", "R"))
    if data.get("lift"):
        sys, P, R, _ = lift_nonnegative(sys, P, R)
    return LpvProblem(sys, X, U, W, P, R, tol=tol, validate=validate)
