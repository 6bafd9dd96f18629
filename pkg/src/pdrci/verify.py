"""Independent verification oracles for synthesized set families.

Everything here re-derives its quantities from raw data: template vertex
maps, the matrix families, and constraint rows. No assembly code is
shared with the synthesis module, so these checks double as an oracle
for it rather than a restatement of it.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .models import sample_parameter_step
from .polytopes import HPolytope, VPolytope, distance_metric, enumerate_vertices, support_value

logger = logging.getLogger(__name__)

DEFAULT_CHECK_TOL = 1e-6


@dataclass
class VerificationReport:
    """Worst residual per check plus pass flags at the check tolerance."""

    max_invariance_residual: float
    max_config_residual: float
    max_state_residual: float
    max_input_residual: float
    samples_used: dict
    tol: float

    @property
    def passes(self):
        return {
            "invariance": self.max_invariance_residual <= self.tol,
            "configuration": self.max_config_residual <= self.tol,
            "state": self.max_state_residual <= self.tol,
            "input": self.max_input_residual <= self.tol,
        }

    @property
    def all_pass(self):
        return all(self.passes.values())

    def to_dict(self):
        return {
            "max_invariance_residual": self.max_invariance_residual,
            "max_config_residual": self.max_config_residual,
            "max_state_residual": self.max_state_residual,
            "max_input_residual": self.max_input_residual,
            "samples_used": dict(self.samples_used),
            "tol": self.tol,
            "passes": self.passes,
            "all_pass": self.all_pass,
        }


def sample_parameters(problem, n, rng, include_vertices=True):
    """Hull-weighted parameter samples; the vertices of P come first."""
    Pv = problem.vertices_P.vertices
    out = [v.copy() for v in Pv] if include_vertices else []
    while len(out) < n:
        weights = rng.dirichlet(np.ones(len(Pv)))
        out.append(weights @ Pv)
    return out[:n]


def verify_solution(solution, template, problem, n_samples=1000, rng=None,
                    tol=DEFAULT_CHECK_TOL):
    """Sampled invariance / state / input / configuration residuals.

    Draws n_samples parameter pairs (p, p+) with the admissible-step
    sampler, then checks every template vertex against every disturbance
    vertex: the one-step image C (A(p) x^k(p) + B(p) u^k(p) + w) must
    stay below the next offsets y0 + Y p+, the vertex itself inside X,
    its input inside U, and the offsets inside the configuration cone.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    C = template.C
    Wv = problem.vertices_W.vertices
    inv_r = config_r = state_r = input_r = -np.inf
    params = sample_parameters(problem, n_samples, rng)
    # Without a valid rate bound (quasi-LPV models set R for bookkeeping
    # only) the admissible-step set can be empty; the representation is
    # then parameter independent and any next parameter is fair game.
    stepped = getattr(problem, "rate_bound_valid", True)
    for p in params:
        if stepped:
            p_next = sample_parameter_step(p, problem, rng)
        else:
            p_next = rng.dirichlet(np.ones(len(problem.vertices_P.vertices))) \
                @ problem.vertices_P.vertices
        y = solution.y0 + solution.Y @ p
        y_next = solution.y0 + solution.Y @ p_next
        config_r = max(config_r, float(np.max(template.E @ y)))
        A_p, B_p = problem.sys.evaluate(p)
        for k in range(template.N):
            x_k = template.V[k] @ y
            u_k = solution.u0[k] + solution.U[k] @ p
            state_r = max(state_r, float(np.max(problem.X.A @ x_k - problem.X.b)))
            input_r = max(input_r, float(np.max(problem.U.A @ u_k - problem.U.b)))
            drift = A_p @ x_k + B_p @ u_k
            for w in Wv:
                inv_r = max(inv_r, float(np.max(C @ (drift + w) - y_next)))
    return VerificationReport(
        max_invariance_residual=inv_r,
        max_config_residual=config_r,
        max_state_residual=state_r,
        max_input_residual=input_r,
        samples_used={
            "pairs": len(params),
            "template_vertices": template.N,
            "disturbance_vertices": len(Wv),
        },
        tol=tol,
    )


def dtot(sets_or_solution, problem, param_samples, template=None, D=None,
         X_vertices=None):
    """Total coverage distance: sum of d_X(S(p)) over the parameter list.

    sets_or_solution is either a list of half-space sets (one per
    sample; param_samples only sets the length contract) or a solution
    whose offsets are evaluated per sample through the template.
    """
    if X_vertices is None:
        X_vertices = enumerate_vertices(problem.X, problem.tol,
                                        on_degenerate="ignore").vertices
    if isinstance(sets_or_solution, (list, tuple)):
        sets = list(sets_or_solution)
        if len(sets) != len(param_samples):
            raise ValueError("one set per parameter sample required")
        if D is None:
            raise ValueError("D is required with explicit sets")
        return float(sum(distance_metric(Z, D, X_vertices) for Z in sets))
    if template is None:
        raise ValueError("template is required with a solution argument")
    Dmat = template.C if D is None else np.atleast_2d(np.asarray(D, float))
    total = 0.0
    for p in param_samples:
        Z = HPolytope(template.C, sets_or_solution.offsets_at(p))
        total += distance_metric(Z, Dmat, X_vertices)
    return float(total)


def union_set_estimate(solution, template, problem, n_params=50, resolution=None):
    """Inner hull estimate of the parametric union of the set family.

    Collects the vertex families V^k (y0 + Y p) at the vertices of P
    plus a deterministic interior grid of hull weights, and returns the
    hull of all collected points. The true union need not be convex;
    this is its convex inner sketch, which is also what gets drawn.
    """
    from scipy.spatial import ConvexHull

    Pv = problem.vertices_P.vertices
    weights = _simplex_grid(len(Pv), resolution or _grid_resolution(len(Pv), n_params))
    points = []
    for wgt in weights:
        p = wgt @ Pv
        y = solution.y0 + solution.Y @ p
        for Vk in template.V:
            points.append(Vk @ y)
    points = np.array(points)
    hull = ConvexHull(points)
    return VPolytope(points[hull.vertices])


def check_prop3(y0, Y, template, P, n_dirs=50, rng=None):
    """Support equivalence of the intersection offsets.

    The rowwise-min offsets y_tilde_i = min_p (y0 + Y p)_i are computed
    by LP over P; the claim under test is that {C x <= y_tilde} has the
    same support values as the intersection of the family over P, whose
    support in a direction equals the minimum over P (concave in the
    offsets, hence attained at a vertex). Returns the worst absolute
    support gap over n_dirs random directions.
    """
    if rng is None:
        rng = np.random.default_rng(1)
    y0 = np.asarray(y0, float).reshape(-1)
    Y = np.atleast_2d(np.asarray(Y, float))
    C = template.C
    y_tilde = np.array([y0[i] - support_value(P, -Y[i]) for i in range(len(y0))])
    S_tilde = HPolytope(C, y_tilde)
    Pverts = enumerate_vertices(P, on_degenerate="ignore").vertices
    family = [HPolytope(C, y0 + Y @ p) for p in Pverts]
    worst = 0.0
    n = C.shape[1]
    for _ in range(n_dirs):
        c = rng.standard_normal(n)
        c /= np.linalg.norm(c)
        h_tilde = support_value(S_tilde, c)
        h_min = min(support_value(Z, c) for Z in family)
        worst = max(worst, abs(h_tilde - h_min))
    return float(worst)


def _grid_resolution(n_vertices, n_params):
    r = 1
    while _grid_size(n_vertices, r + 1) <= n_params:
        r += 1
    return r


def _grid_size(n_vertices, r):
    from math import comb

    return comb(r + n_vertices - 1, n_vertices - 1)


def _simplex_grid(n_vertices, resolution):
    """All hull-weight vectors with entries k/resolution summing to one."""
    grids = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            grids.append(prefix + [remaining])
            return
        for k in range(remaining + 1):
            rec(prefix + [k], remaining - k, slots - 1)

    rec([], resolution, n_vertices)
    return np.array(grids, dtype=float) / resolution
