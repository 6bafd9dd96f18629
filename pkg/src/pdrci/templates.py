"""Configuration-constrained polytope templates.

A template freezes the vertex combinatorics of the parametric polytope
{x : C x <= y}: a seed offset sigma is enumerated once, each vertex k
contributes a linear vertex map V^k (the inverse of its active-row
block, zero-padded to m_s columns), and the cone

    S = {y : E y <= 0},   E = rows of (C V^k - I) stacked over k,

collects exactly the offsets for which the vertex family {V^k y} spans
{x : C x <= y}. Inside the cone, vertices are linear in y, which is
what makes the downstream program convex.
"""

import logging

import numpy as np

from .polytopes import (
    DegenerateError,
    DEFAULT_TOL,
    HPolytope,
    VPolytope,
    enumerate_vertices,
    normalize_rows,
)

logger = logging.getLogger(__name__)


class NonSimpleSeedError(DegenerateError):
    """The seed polytope has a vertex with more than n active rows."""


class SingularBlockError(Exception):
    """An active-row block of C is not invertible at working precision."""


class ConfigurationViolatedError(Exception):
    """An offset vector lies outside the template's configuration cone."""


class ConfiguredTemplate:
    """Frozen vertex configuration of {x : C x <= y}.

    Fields
    ------
    C : (m_s, n) row-normalized template matrix
    V : list of N vertex maps, each (n, m_s), zero outside its active columns
    E : (N * m_s, m_s) configuration cone matrix
    active_sets : list of N index tuples J_k (each of size n)
    seed_sigma : (m_s,) offset the configuration was built from
    simple : True when every seed vertex had exactly n active rows; when
        False, {C x <= y} can strictly contain the certified vertex hull
    """

    def __init__(self, C, V, E, active_sets, seed_sigma, simple=True):
        self.C = C
        self.V = V
        self.E = E
        self.active_sets = [tuple(s) for s in active_sets]
        self.seed_sigma = seed_sigma
        self.simple = simple

    @property
    def n(self):
        return self.C.shape[1]

    @property
    def m_s(self):
        return self.C.shape[0]

    @property
    def N(self):
        return len(self.V)

    def __repr__(self):
        return f"ConfiguredTemplate(m_s={self.m_s}, n={self.n}, N={self.N})"


def uniform_polygon(m):
    """Unit normals of a regular m-gon, rows (cos, sin)(2*pi*i/m)."""
    if m < 3:
        raise ValueError("a polygon needs at least 3 rows")
    angles = 2.0 * np.pi * np.arange(m) / m
    return np.column_stack([np.cos(angles), np.sin(angles)])


def build_template(C, sigma, tol=None, degenerate_vertices="error"):
    """Construct the vertex maps and configuration cone for (C, sigma).

    Rows of C are scaled to unit Euclidean norm (offsets rescaled
    accordingly) so that feasibility tolerances are geometrically
    meaningful. The seed polytope {C x <= sigma} must be bounded and
    nonempty; it should be simple (every vertex with exactly n active
    rows). Non-simple seeds raise NonSimpleSeedError unless
    degenerate_vertices="first" is passed, in which case the first
    lexicographic row subset names each vertex and a warning is logged:
    with a degenerate seed {C x <= y} can strictly contain the vertex
    hull, so downstream consumers must treat the vertex family, not the
    half-space form, as the certified object.

    Raises
    ------
    NonSimpleSeedError, SingularBlockError, UnboundedError, InfeasibleError
    """
    tol = tol or DEFAULT_TOL
    C = np.atleast_2d(np.asarray(C, dtype=float))
    sigma = np.asarray(sigma, dtype=float).reshape(-1)
    if sigma.size == 1:
        sigma = np.full(C.shape[0], sigma[0])
    C, sigma = normalize_rows(C, sigma)
    m_s, n = C.shape

    policy = "error" if degenerate_vertices == "error" else "warn"
    try:
        seed = enumerate_vertices(HPolytope(C, sigma), tol, on_degenerate=policy)
    except DegenerateError as exc:
        raise NonSimpleSeedError(str(exc)) from exc

    V = []
    for k, J in enumerate(seed.active_sets):
        block = C[list(J)]
        cond = np.linalg.cond(block)
        if not np.isfinite(cond) or cond > 1.0 / tol.rank_tol:
            raise SingularBlockError(
                f"active block of vertex {k} has condition number {cond:.3e}"
            )
        Vk = np.zeros((n, m_s))
        Vk[:, list(J)] = np.linalg.inv(block)
        V.append(Vk)

    E = np.vstack([C @ Vk - np.eye(m_s) for Vk in V])
    active_counts = [
        int(np.sum(np.abs(C @ v - sigma) <= 10 * tol.feas_tol)) for v in seed.vertices
    ]
    simple = all(count == n for count in active_counts)
    T = ConfiguredTemplate(C, V, E, seed.active_sets, sigma, simple=simple)
    resid = check_configuration(T, sigma)
    if resid > tol.feas_tol:
        raise ConfigurationViolatedError(
            f"seed offset violates its own cone by {resid:.3e}"
        )
    return T


def vertices_at(T, y, tol=None):
    """Vertex family {V^k y} of {x : C x <= y} for an in-cone offset.

    Raises ConfigurationViolatedError when E y exceeds the tolerance;
    for simple templates the returned hull equals the half-space set.
    """
    tol = tol or DEFAULT_TOL
    y = np.asarray(y, dtype=float).reshape(-1)
    resid = check_configuration(T, y)
    if resid > tol.feas_tol:
        raise ConfigurationViolatedError(f"E y has positive residual {resid:.3e}")
    return VPolytope(np.array([Vk @ y for Vk in T.V]), T.active_sets)


def check_configuration(T, y):
    """max(E y); at or below zero means the configuration holds."""
    y = np.asarray(y, dtype=float).reshape(-1)
    return float(np.max(T.E @ y))
