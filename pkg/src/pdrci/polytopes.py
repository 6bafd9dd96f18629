"""Dense convex-polytope geometry.

Half-space and vertex representations, support functions, exhaustive
vertex enumeration with active sets, projection, a one-step-backward
invariant-set recursion, volume, and the coverage distance used as the
synthesis objective. Everything here is deliberately desk scale: dense
numpy arrays, exhaustive row-subset enumeration, and LPs solved with
scipy's HiGHS interface. No sparse structure, no floating templates.

All sets are closed and convex:

    H-form   {x : A x <= b}
    V-form   conv{v_1, ..., v_N}

Equality constraints are stored as paired inequalities so that the
multiplier-based duality encodings downstream apply without special
casing.
"""

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

logger = logging.getLogger(__name__)

# Merge radius for duplicate vertices (infinity norm).
DEDUP_TOL = 1e-7
# A row of A with norm below this is rejected as degenerate input.
ZERO_ROW_TOL = 1e-12


class PolytopeError(Exception):
    """Base class for geometry failures."""


class UnboundedError(PolytopeError):
    """LP or enumeration hit an unbounded direction."""


class InfeasibleError(PolytopeError):
    """The polytope is empty."""


class DegenerateError(PolytopeError):
    """A vertex has more than `dim` active rows, or a set is lower-dimensional."""


class NotConvergedError(PolytopeError):
    """An iterative computation hit its iteration cap."""


class EmptyResultError(PolytopeError):
    """A recursion emptied out."""


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances shared across the geometry layer.

    feas_tol : slack accepted when testing `A x <= b`.
    rank_tol : smallest |det| (after row scaling) treated as nonsingular.
    psd_tol  : eigenvalue slack for semidefiniteness checks downstream.
    """

    feas_tol: float = 1e-8
    rank_tol: float = 1e-9
    psd_tol: float = 1e-7

    def __post_init__(self):
        if min(self.feas_tol, self.rank_tol, self.psd_tol) <= 0:
            raise ValueError("tolerances must be strictly positive")


DEFAULT_TOL = Tolerances()


class HPolytope:
    """Polytope in half-space form {x : A x <= b}.

    Parameters
    ----------
    A : (m, dim) array
        Facet normals, one per row. No row may be (numerically) zero.
    b : (m,) array
        Offsets.
    """

    def __init__(self, A, b):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).reshape(-1)
        if A.shape[0] != b.shape[0]:
            raise ValueError(f"A has {A.shape[0]} rows but b has {b.shape[0]} entries")
        norms = np.linalg.norm(A, axis=1)
        if A.shape[0] and norms.min() < ZERO_ROW_TOL:
            raise ValueError("A contains an all-zero row")
        self.A = A
        self.b = b

    @property
    def dim(self):
        return self.A.shape[1]

    @property
    def n_rows(self):
        return self.A.shape[0]

    @classmethod
    def from_bounds(cls, lower, upper):
        """Axis-aligned box {lower <= x <= upper}."""
        lower = np.asarray(lower, dtype=float).reshape(-1)
        upper = np.asarray(upper, dtype=float).reshape(-1)
        n = lower.size
        eye = np.eye(n)
        return cls(np.vstack([eye, -eye]), np.concatenate([upper, -lower]))

    @classmethod
    def box(cls, radius, dim=None):
        """Symmetric box {|x_i| <= radius_i} (scalar radius broadcasts)."""
        radius = np.asarray(radius, dtype=float).reshape(-1)
        if radius.size == 1 and dim is not None:
            radius = np.full(dim, radius[0])
        return cls.from_bounds(-radius, radius)

    def normalized(self):
        """Same set with unit-Euclidean-norm rows."""
        norms = np.linalg.norm(self.A, axis=1)
        return HPolytope(self.A / norms[:, None], self.b / norms)

    def __repr__(self):
        return f"HPolytope(dim={self.dim}, rows={self.n_rows})"


class VPolytope:
    """Polytope as the convex hull of a finite point list.

    active_sets, when present, records for each vertex the row indices of
    the H-form it was enumerated from (exactly `dim` of them for simple
    vertices).
    """

    def __init__(self, vertices, active_sets=None):
        vertices = np.atleast_2d(np.asarray(vertices, dtype=float))
        if active_sets is not None and len(active_sets) != vertices.shape[0]:
            raise ValueError("one active set per vertex required")
        self.vertices = vertices
        self.active_sets = None if active_sets is None else [tuple(s) for s in active_sets]

    @property
    def dim(self):
        return self.vertices.shape[1]

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    def volume(self):
        """Lebesgue volume of the hull (zero when degenerate)."""
        try:
            return float(ConvexHull(self.vertices).volume)
        except QhullError:
            return 0.0

    def __repr__(self):
        return f"VPolytope(dim={self.dim}, vertices={self.n_vertices})"


def _solve_lp(c, A_ub, b_ub):
    """min c'x s.t. A_ub x <= b_ub, x free. Returns the scipy result."""
    return linprog(
        c,
        A_ub=A_ub,
        b_ub=b_ub,
        bounds=[(None, None)] * A_ub.shape[1],
        method="highs",
    )


def support_value(P, c):
    """Support function max{c'x : x in P} by LP.

    Raises UnboundedError / InfeasibleError as detected by the solver.
    """
    c = np.asarray(c, dtype=float).reshape(-1)
    res = _solve_lp(-c, P.A, P.b)
    if res.status == 3:
        raise UnboundedError(f"support unbounded in direction {c}")
    if res.status == 2:
        raise InfeasibleError("polytope is empty")
    if res.status != 0:
        raise PolytopeError(f"LP failed with status {res.status}: {res.message}")
    return -res.fun


def contains(P, x, tol=None):
    """Membership test A x <= b + tol elementwise.

    `tol` may be a Tolerances bundle, a bare float slack, or None for
    the default feasibility tolerance.
    """
    if tol is None:
        t = DEFAULT_TOL.feas_tol
    elif isinstance(tol, Tolerances):
        t = tol.feas_tol
    else:
        t = float(tol)
    x = np.asarray(x, dtype=float).reshape(-1)
    return bool(np.all(P.A @ x <= P.b + t))


def enumerate_vertices(P, tol=None, on_degenerate="warn", assume_bounded=False):
    """All vertices of a bounded H-polytope by exhaustive row-subset solving.

    Every dim-subset of rows with a well-conditioned square block is
    solved; solutions feasible within feas_tol are kept and deduplicated
    within DEDUP_TOL in the infinity norm. The first subset found in
    lexicographic order names the vertex and provides its active set.

    Parameters
    ----------
    on_degenerate : "warn" | "error" | "ignore"
        Behavior when a kept vertex has more than dim active rows.
        Template construction passes "error"; most callers warn.
    assume_bounded : skip the recession-cone check; for callers that
        intersect with an already-bounded set in a hot loop.

    Raises
    ------
    DegenerateError, InfeasibleError, UnboundedError
    """
    tol = tol or DEFAULT_TOL
    A, b = P.A, P.b
    m, n = A.shape
    if m < n:
        raise UnboundedError("fewer rows than dimensions")
    # Scale rows once so the determinant guard is meaningful.
    norms = np.linalg.norm(A, axis=1)
    As = A / norms[:, None]
    bs = b / norms
    verts = []
    acts = []
    degenerate = []
    for subset in itertools.combinations(range(m), n):
        block = As[list(subset)]
        if abs(np.linalg.det(block)) < tol.rank_tol:
            continue
        v = np.linalg.solve(block, bs[list(subset)])
        if not np.all(As @ v <= bs + tol.feas_tol):
            continue
        if any(np.max(np.abs(v - w)) < DEDUP_TOL for w in verts):
            continue
        n_active = int(np.sum(As @ v >= bs - tol.feas_tol))
        if n_active > n:
            degenerate.append((len(verts), n_active))
        verts.append(v)
        acts.append(subset)
    if not verts:
        raise InfeasibleError("no vertices found; polytope empty or degenerate")
    if degenerate:
        msg = ", ".join(f"vertex {i} has {k} active rows" for i, k in degenerate)
        if on_degenerate == "error":
            raise DegenerateError(msg)
        if on_degenerate == "warn":
            logger.warning("non-simple polytope: %s", msg)
    # Boundedness: every direction supported by some vertex. A cheap
    # sufficient check is that the recession cone {Ax <= 0} is {0},
    # equivalently the rows positively span R^n.
    if not assume_bounded and not _rows_positively_span(As, tol):
        raise UnboundedError("polytope is unbounded")
    return VPolytope(np.array(verts), acts)


def _rows_positively_span(A, tol):
    # {x : Ax <= 0} = {0} iff for every unit e_i both +-e_i are dominated;
    # test by LP: max e_i'x s.t. Ax <= 0, |x|_inf <= 1 must be 0.
    n = A.shape[1]
    box = np.vstack([np.eye(n), -np.eye(n)])
    Ab = np.vstack([A, box])
    bb = np.concatenate([np.zeros(A.shape[0]), np.ones(2 * n)])
    for i in range(n):
        for sign in (1.0, -1.0):
            c = np.zeros(n)
            c[i] = -sign
            res = _solve_lp(c, Ab, bb)
            if res.status != 0 or -res.fun > 10 * tol.feas_tol:
                return False
    return True


def normalize_rows(A, b):
    """Scale each row of (A, b) to unit Euclidean norm."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).reshape(-1)
    norms = np.linalg.norm(A, axis=1)
    return A / norms[:, None], b / norms


def remove_redundant_rows(A, b, tol=1e-9):
    """Minimal sub-representation: drop rows the others already imply.

    Row i is redundant when max{A_i x : other rows} <= b_i + tol.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).reshape(-1)
    keep = []
    for i in range(A.shape[0]):
        others = [j for j in range(A.shape[0]) if j != i and (j in keep or j > i)]
        res = _solve_lp(-A[i], A[others], b[others])
        if res.status == 0 and -res.fun <= b[i] + tol:
            continue  # implied by the others
        keep.append(i)
    return A[keep], b[keep]


def hull_to_hrep(points):
    """H-form of the convex hull of full-dimensional `points`."""
    hull = ConvexHull(points)
    A = hull.equations[:, :-1]
    b = -hull.equations[:, -1]
    return A, b


def project(P, n_keep, tol=None):
    """Orthogonal projection onto the first n_keep coordinates.

    Enumerate vertices, drop coordinates, hull back to H-form. Scoped to
    combined dimension <= 5 per the enumeration cost.

    Raises DegenerateError when the projected hull is lower-dimensional.
    """
    tol = tol or DEFAULT_TOL
    V = enumerate_vertices(P, tol, on_degenerate="ignore")
    pts = V.vertices[:, :n_keep]
    spread = pts - pts.mean(axis=0)
    if np.linalg.matrix_rank(spread, tol=1e-9) < n_keep:
        raise DegenerateError("projection is lower-dimensional")
    A, b = hull_to_hrep(pts)
    A, b = normalize_rows(A, b)
    A, b = remove_redundant_rows(A, b)
    return HPolytope(A, b)


def volume(V):
    """Volume by fan triangulation from the centroid over hull facets.

    Exact for convex bodies and deterministic. dim <= 4 by scope.
    """
    pts = V.vertices
    n = pts.shape[1]
    centroid = pts.mean(axis=0)
    spread = pts - centroid
    if np.linalg.matrix_rank(spread, tol=1e-9) < n:
        raise DegenerateError("affine hull is lower-dimensional")
    hull = ConvexHull(pts)
    total = 0.0
    fact = float(math.factorial(n))
    for simplex in hull.simplices:
        edges = pts[simplex] - centroid
        total += abs(np.linalg.det(edges)) / fact
    return total


def distance_metric(Z, D, X_vertices, return_eps=False):
    """Coverage distance min ||eps||_1 s.t. X <= Z + {x : D x <= eps}.

    Each vertex x^t of X is split as s^t + b^t with s^t in Z and
    D b^t <= eps; eps >= 0 is shared across vertices. One LP.

    Parameters
    ----------
    Z : HPolytope
        Candidate set (must satisfy Z subset of X for the metric to be
        meaningful; infeasibility of the LP signals a direction D
        cannot cover).
    D : (m_d, n) array of cover directions.
    X_vertices : VPolytope (or array) with the vertices of X.

    Raises InfeasibleError when no finite cover exists.
    """
    D = np.atleast_2d(np.asarray(D, dtype=float))
    Xv = X_vertices.vertices if isinstance(X_vertices, VPolytope) else np.atleast_2d(X_vertices)
    T, n = Xv.shape
    md = D.shape[0]
    # variables: [s^1 .. s^T | eps], with b^t = x^t - s^t eliminated
    n_var = T * n + md
    rows = []
    rhs = []
    for t in range(T):
        # C s^t <= y  (membership of the split point)
        blk = np.zeros((Z.n_rows, n_var))
        blk[:, t * n:(t + 1) * n] = Z.A
        rows.append(blk)
        rhs.append(Z.b)
        # D (x^t - s^t) <= eps
        blk = np.zeros((md, n_var))
        blk[:, t * n:(t + 1) * n] = -D
        blk[:, T * n:] = -np.eye(md)
        rows.append(blk)
        rhs.append(-D @ Xv[t])
    # eps >= 0
    blk = np.zeros((md, n_var))
    blk[:, T * n:] = -np.eye(md)
    rows.append(blk)
    rhs.append(np.zeros(md))
    c = np.zeros(n_var)
    c[T * n:] = 1.0
    res = _solve_lp(c, np.vstack(rows), np.concatenate(rhs))
    if res.status == 2:
        raise InfeasibleError("no finite cover: Z empty or D directions insufficient")
    if res.status != 0:
        raise PolytopeError(f"cover LP failed with status {res.status}: {res.message}")
    if return_eps:
        return res.fun, res.x[T * n:]
    return res.fun


def mrci(problem, max_iter=100, tol=1e-9):
    """Maximal-RCI fixed point of the backward recursion.

    Omega_{k+1} = X  intersect  {x : for every vertex p of P there is
    u in U with A(p) x + B(p) u + W inside Omega_k}. Scoped to n = 2,
    m = 1 with the parameter treated at the vertices of P and no rate
    bound. Rows of the result are unit-normalized and minimal; they are
    meant to seed a template.

    Raises NotConvergedError / EmptyResultError.
    """
    X, U, W = problem.X, problem.U, problem.W
    n = X.dim
    m = U.dim
    P_vertices = problem.vertices_P.vertices
    F, g = X.A.copy(), X.b.copy()
    for it in range(max_iter):
        pieces_A = [X.A]
        pieces_b = [X.b]
        for p in P_vertices:
            Ap, Bp = problem.sys.evaluate(p)
            # Pontryagin difference Omega - W, rowwise support tightening
            dW = np.array([support_value(W, F[i]) for i in range(F.shape[0])])
            # one-step set in (x, u): F(Ax + Bu) <= g - d, u in U
            Axu = np.vstack([
                np.hstack([F @ Ap, F @ Bp]),
                np.hstack([np.zeros((U.n_rows, n)), U.A]),
            ])
            bxu = np.concatenate([g - dW, U.b])
            pre = project(HPolytope(Axu, bxu), n)
            pieces_A.append(pre.A)
            pieces_b.append(pre.b)
        A_new = np.vstack(pieces_A)
        b_new = np.concatenate(pieces_b)
        A_new, b_new = normalize_rows(A_new, b_new)
        A_new, b_new = remove_redundant_rows(A_new, b_new, tol=1e-12)
        if b_new.size == 0:
            raise EmptyResultError("recursion emptied")
        # Converged when the previous iterate is contained in the new one
        # (the recursion is monotone decreasing, so mutual inclusion follows).
        gap = max(
            support_value(HPolytope(F, g), A_new[i]) - b_new[i]
            for i in range(A_new.shape[0])
        )
        F, g = A_new, b_new
        if gap < tol:
            logger.info("invariant-set recursion converged after %d iterations", it + 1)
            return HPolytope(F, g)
    raise NotConvergedError(f"no fixed point within {max_iter} iterations")
