"""Online vertex-interpolation control and closed-loop simulation.

The state is expressed as a convex combination of the current parametric
vertices x^k(p) = V^k(y0 + Y p) through the least-norm weight QP

    min ||lambda||^2   s.t.   sum_k lambda_k x^k(p) = x,
                              sum_k lambda_k = 1,  lambda >= 0,

and the applied input interpolates the vertex laws with the same
weights. Strict convexity makes lambda unique, so the controller is
deterministic. The QP is solved exactly by a null-space reduction to a
least-distance program handled by the Lawson-Hanson NNLS routine.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from .models import sample_parameter_step
from .polytopes import contains
from .templates import vertices_at

logger = logging.getLogger(__name__)

MEMBERSHIP_TOL = 1e-6


class OutsideSetError(Exception):
    """The state is outside the certified set for the current parameter."""

    def __init__(self, message, residual=None, trajectory=None):
        super().__init__(message)
        self.residual = residual
        self.trajectory = trajectory


class QPInfeasibleError(Exception):
    """The weight QP failed although membership held: vertex data inconsistent."""


@dataclass
class ControllerState:
    """Bundle of everything the online law needs; read-only at runtime."""

    solution: object
    template: object
    problem: object
    membership_tol: float = MEMBERSHIP_TOL


@dataclass
class Trajectory:
    """Aligned closed-loop time series with membership diagnostics."""

    states: np.ndarray
    inputs: np.ndarray
    params: np.ndarray
    disturbances: np.ndarray
    residuals: np.ndarray
    violations: list = field(default_factory=list)

    @property
    def horizon(self):
        return len(self.inputs)

    @property
    def max_residual(self):
        return float(np.max(self.residuals)) if len(self.residuals) else -np.inf


def interpolation_weights(points, x, zero_tol=1e-12):
    """Least-norm convex weights expressing x over the given points.

    Returns None when x is not in the convex hull. points is (N, n).
    """
    N = points.shape[0]
    E = np.vstack([points.T, np.ones((1, N))])
    f = np.concatenate([np.asarray(x, float).reshape(-1), [1.0]])
    lam_p, *_ = np.linalg.lstsq(E, f, rcond=None)
    if np.max(np.abs(E @ lam_p - f)) > 1e-9:
        return None  # x outside the affine hull of the vertices
    Z = scipy.linalg.null_space(E)
    if Z.shape[1] == 0:
        return lam_p if np.min(lam_p) >= -1e-9 else None
    # least-distance program: min ||v|| s.t. Z v >= -lam_p
    E_nnls = np.vstack([Z.T, -lam_p[None, :]])
    f_nnls = np.zeros(Z.shape[1] + 1)
    f_nnls[-1] = 1.0
    q, _ = scipy.optimize.nnls(E_nnls, f_nnls)
    r = E_nnls @ q - f_nnls
    if abs(r[-1]) <= zero_tol:
        return None  # hull constraints inconsistent: x outside
    v = -r[:-1] / r[-1]
    lam = lam_p + Z @ v
    return lam


def control(x, p, ctrl):
    """Interpolated vertex input at state x, parameter p.

    Raises OutsideSetError when x is outside the certified set (residual
    attached) and QPInfeasibleError when the weight QP breaks down on a
    simple template, which signals inconsistent vertex data.
    """
    x = np.asarray(x, float).reshape(-1)
    p = np.asarray(p, float).reshape(-1)
    sol, T = ctrl.solution, ctrl.template
    if not contains(ctrl.problem.P, p, ctrl.problem.tol):
        raise OutsideSetError("parameter outside its polytope", residual=None)
    y = sol.offsets_at(p)
    row_residual = float(np.max(T.C @ x - y))
    if row_residual > ctrl.membership_tol:
        raise OutsideSetError(
            f"state outside the half-space form (residual {row_residual:.3e})",
            residual=row_residual)
    points = vertices_at(T, y, ctrl.problem.tol).vertices
    lam = interpolation_weights(points, x)
    if lam is None:
        if T.simple:
            raise QPInfeasibleError(
                "weight QP infeasible although half-space membership holds")
        raise OutsideSetError(
            "state inside the half-space form but outside the certified "
            f"vertex hull (row residual {row_residual:.3e})",
            residual=row_residual)
    u_matrix = np.vstack([sol.vertex_input(k, p) for k in range(T.N)])
    u = u_matrix.T @ lam
    input_residual = float(np.max(ctrl.problem.U.A @ u - ctrl.problem.U.b))
    if input_residual > 1e-7:
        raise QPInfeasibleError(
            f"interpolated input violates the input set by {input_residual:.3e}")
    return u


def simulate(ctrl, x0, p0, T, rng, disturbance="vertices", param_fn=None):
    """Closed-loop run of T steps; fail-fast on membership violations.

    disturbance is "vertices" (sampled from the corners of the
    disturbance set) or "uniform" (uniform over its bounding box with
    rejection). param_fn, when given, maps the next state to the next
    parameter (state-dependent scheduling); otherwise the parameter walks
    randomly inside its polytope subject to the rate bound.

    A membership violation beyond the tolerance is recorded in
    trajectory.violations and raises OutsideSetError carrying the partial
    trajectory; the run never continues silently.
    """
    problem = ctrl.problem
    n, m = problem.sys.n, problem.sys.m
    x = np.asarray(x0, float).reshape(-1)
    p = np.asarray(p0, float).reshape(-1)
    states, inputs, params, dists, residuals = [x.copy()], [], [p.copy()], [], []
    violations = []

    def _pack():
        return Trajectory(
            states=np.array(states),
            inputs=np.array(inputs).reshape(-1, m),
            params=np.array(params),
            disturbances=np.array(dists).reshape(-1, n),
            residuals=np.array(residuals),
            violations=violations,
        )

    for t in range(T + 1):
        y = ctrl.solution.offsets_at(p)
        res = float(np.max(ctrl.template.C @ x - y))
        residuals.append(res)
        if res > ctrl.membership_tol:
            row = int(np.argmax(ctrl.template.C @ x - y))
            violations.append((t, row, res))
            raise OutsideSetError(
                f"membership violated at step {t}, row {row} (residual {res:.3e})",
                residual=res, trajectory=_pack())
        if t == T:
            break
        try:
            u = control(x, p, ctrl)
        except OutsideSetError as exc:
            exc.trajectory = _pack()
            raise
        w = _sample_disturbance(problem, rng, disturbance)
        A_p, B_p = problem.sys.evaluate(p)
        x = A_p @ x + B_p @ u + w
        p = (np.asarray(param_fn(x), float).reshape(-1) if param_fn is not None
             else sample_parameter_step(p, problem, rng))
        states.append(x.copy())
        inputs.append(np.atleast_1d(u))
        params.append(p.copy())
        dists.append(w.copy())
    return _pack()


def _sample_disturbance(problem, rng, mode):
    verts = problem.vertices_W.vertices
    if mode == "vertices":
        return verts[rng.integers(len(verts))]
    if mode == "uniform":
        lo = verts.min(axis=0)
        hi = verts.max(axis=0)
        for _ in range(10_000):
            w = lo + (hi - lo) * rng.random(len(lo))
            if contains(problem.W, w, problem.tol):
                return w
        return verts[rng.integers(len(verts))]
    raise ValueError(f"unknown disturbance mode {mode!r}")
