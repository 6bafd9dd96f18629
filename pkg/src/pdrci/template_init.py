"""Feasibility-guaranteeing template selection by alternating convex steps.

Seeks an invertible shape transform W such that S(W) = {x : C_hat W^-1 x <= 1}
is robustly control invariant over the whole parameter polytope with one
input per seed vertex, while minimizing the coverage distance from the
state constraint set. The program is bilinear in W and its inverse M, so
it is attacked by alternation:

    step A  freeze M and the interpolation weights of the coverage
            encoding; solve the LP in (W, vertex inputs, slack) inside
            a trust region around the previous shape
    step B  M <- W^-1; refresh weights and the exact coverage distance
            by an LP at the new fixed shape

Because the linearization is only trustworthy near the previous iterate,
a candidate is judged by its true merit, exact coverage distance plus a
penalty on the worst re-derived invariance residual, neither of which
depends on the frozen M. Accepting only merit-nonincreasing candidates
and halving the trust radius otherwise makes the recorded history
nonincreasing by construction and lets the scheme walk out of an
infeasible start. The best iterate (smallest exact coverage distance
among iterates whose re-derived inputs replay feasibly) is returned;
stalling without a feasible iterate returns the lowest-merit one with
converged = False.
"""

import logging
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np
from scipy.optimize import linprog

from .polytopes import (HPolytope, VPolytope, _solve_lp, distance_metric,
                        enumerate_vertices, support_value)
from .synthesis import SolverNumericalError

logger = logging.getLogger(__name__)

REPLAY_TOL = 1e-6
# exact-penalty weight pricing invariance violation against coverage
# distance, in both the step LP and the acceptance merit so the LP is a
# first-order model of the merit it is judged by
MERIT_PEN = 1e6


class InfeasibleAtInitError(Exception):
    """No admissible vertex inputs exist even at the initial scaled shape."""


class SingularWError(Exception):
    """The shape transform drifted to numerical singularity."""


@dataclass
class InitOptions:
    D: np.ndarray = None          # coverage directions; defaults to the seed rows
    max_iter: int = 100           # accepted alternation steps
    step_tol: float = 1e-7        # ||W_t - W_{t-1}||_inf stopping rule
    feas_tol: float = 1e-8
    plateau_tol: float = 1e-9     # tolerated objective increase per step
    cond_cap: float = 1e8
    bisect_iters: int = 40
    solver: str = "SCIPY"         # the subproblems are LPs; SCIPY routes to HiGHS


@dataclass
class PiRciResult:
    """Converged (or best-effort) shape transform and its certificates."""

    W: np.ndarray
    M: np.ndarray
    u_vertices: list
    z_vertices: VPolytope
    dist: float
    iterations: int
    converged: bool
    objective_history: list = field(default_factory=list)

    def template_matrix(self, C_hat):
        return np.asarray(C_hat, float) @ self.M

    def to_dict(self, C_hat):
        return {
            "W": self.W.tolist(),
            "M": self.M.tolist(),
            "u_vertices": [u.tolist() for u in self.u_vertices],
            "C": self.template_matrix(C_hat).tolist(),
            "dist": self.dist,
            "iterations": self.iterations,
            "converged": self.converged,
            "objective_history": list(self.objective_history),
        }


def init_template(C_hat, problem, opts=None):
    """Alternating LP/inversion search for the shape transform.

    Raises InfeasibleAtInitError when not even the initial scaled shape
    admits feasible vertex inputs, SingularWError when W degenerates.
    """
    opts = opts or InitOptions()
    C_hat = np.atleast_2d(np.asarray(C_hat, float))
    n, m = problem.sys.n, problem.sys.m
    D = C_hat if opts.D is None else np.atleast_2d(np.asarray(opts.D, float))
    Z = HPolytope(C_hat, np.ones(C_hat.shape[0]))
    zv = enumerate_vertices(Z, on_degenerate="ignore")
    zhat = zv.vertices
    Xv = enumerate_vertices(problem.X, on_degenerate="ignore").vertices
    AB = [problem.sys.evaluate(p) for p in problem.vertices_P.vertices]

    alpha = _containment_scale(Z, problem.X, opts.bisect_iters)
    if alpha <= 0:
        raise InfeasibleAtInitError("no positive scale keeps the seed shape inside X")
    W = alpha * np.eye(n)
    Mmat = np.eye(n) / alpha
    if np.linalg.cond(W) > opts.cond_cap:
        raise SingularWError("initial shape transform is numerically singular")

    lam, dist = _coverage_weights(W, zhat, Xv, D, opts.solver)
    u_sum, viol = _fit_inputs_sum(W, Mmat, problem, C_hat, zhat)
    u_fit, residual = fit_vertex_inputs(W, problem, C_hat, zhat=zhat)
    merit = dist + MERIT_PEN * viol
    history = [float(merit)]
    iterates = [(dist, residual, W.copy(), Mmat.copy(), u_fit)]
    # trust radius is relative to the current entry magnitudes; rejected
    # candidates halve it, accepted ones double it back
    trust = 1.0
    accepted = 0
    solves = 0
    settled = False
    while accepted < opts.max_iter and solves < 50 * opts.max_iter:
        solves += 1
        status, W_new, _ = _shape_step(
            Mmat, lam, zhat, Xv, AB, problem, C_hat, D, W, u_sum, trust,
            opts.solver)
        if status not in ("optimal", "optimal_inaccurate"):
            if solves == 1:
                _diagnose_infeasible(W, Mmat, zhat, AB, problem, C_hat, opts.feas_tol)
                raise InfeasibleAtInitError(
                    f"initial shape step returned status {status!r}")
            logger.warning("shape step (solve %d) returned %s, stopping",
                           solves, status)
            break
        # judge the candidate by linearization-free quantities only
        cond = np.linalg.cond(W_new)
        if cond > opts.cond_cap:
            trust *= 0.5
            if trust < 1e-6:
                settled = True
                break
            continue
        M_new = np.linalg.inv(W_new)
        try:
            u_sum_new, viol_new = _fit_inputs_sum(W_new, M_new, problem, C_hat, zhat)
            lam_new, dist_new = _coverage_weights(W_new, zhat, Xv, D, opts.solver)
        except SolverNumericalError:
            trust *= 0.5
            if trust < 1e-6:
                settled = True
                break
            continue
        merit_new = dist_new + MERIT_PEN * viol_new
        if merit_new > merit + opts.plateau_tol:
            trust *= 0.5
            if trust < 1e-6:
                settled = True
                break
            continue
        step = float(np.max(np.abs(W_new - W)))
        W, Mmat, u_sum = W_new, M_new, u_sum_new
        lam, dist, merit = lam_new, dist_new, merit_new
        history.append(float(merit_new))
        u_fit, residual = fit_vertex_inputs(W, problem, C_hat, zhat=zhat)
        iterates.append((dist_new, residual, W.copy(), Mmat.copy(), u_fit))
        accepted += 1
        trust = min(2.0 * trust, 8.0)
        if step <= opts.step_tol:
            settled = True
            break

    feasible = [rec for rec in iterates if rec[1] <= REPLAY_TOL]
    if feasible:
        dist, residual, W, Mmat, u_fit = min(feasible, key=lambda rec: rec[0])
    else:
        dist, residual, W, Mmat, u_fit = min(
            iterates, key=lambda rec: rec[0] + MERIT_PEN * max(0.0, rec[1]))
        logger.warning("no iterate replays within %.1e (best residual %.3e)",
                       REPLAY_TOL, residual)
    converged = settled and residual <= REPLAY_TOL
    exact_dist = distance_metric(HPolytope(C_hat @ Mmat, np.ones(C_hat.shape[0])), D, Xv)
    return PiRciResult(
        W=W, M=Mmat, u_vertices=u_fit,
        z_vertices=zv, dist=float(exact_dist),
        iterations=accepted, converged=converged,
        objective_history=history,
    )


def fit_vertex_inputs(W, problem, C_hat, zhat=None):
    """Per-vertex LP re-derivation of inputs, minimizing the worst residual.

    Returns (inputs, max_residual) where the residual also covers the
    input-independent state rows.
    """
    C_hat = np.atleast_2d(np.asarray(C_hat, float))
    if zhat is None:
        zhat = enumerate_vertices(
            HPolytope(C_hat, np.ones(C_hat.shape[0])), on_degenerate="ignore").vertices
    Mmat = np.linalg.inv(W)
    CM = C_hat @ Mmat
    AB = [problem.sys.evaluate(p) for p in problem.vertices_P.vertices]
    w_off = _disturbance_offsets(CM, problem)
    m = problem.sys.m
    m_s = C_hat.shape[0]
    Hu, hu = problem.U.A, problem.U.b
    inputs = []
    worst = -np.inf
    for z in zhat:
        x_j = W @ z
        # vars (u, t): minimize the max invariance violation t
        rows, rhs = [], []
        for A_i, B_i in AB:
            CMB = CM @ B_i
            base = CM @ (A_i @ x_j) + w_off - 1.0
            rows.append(np.hstack([CMB, -np.ones((m_s, 1))]))
            rhs.append(-base)
        rows.append(np.hstack([Hu, np.zeros((Hu.shape[0], 1))]))
        rhs.append(hu)
        c = np.zeros(m + 1)
        c[-1] = 1.0
        res = _solve_lp(c, np.vstack(rows), np.concatenate(rhs))
        if res.status != 0:
            inputs.append(np.zeros(m))
            worst = np.inf
            continue
        inputs.append(res.x[:m])
        worst = max(worst, float(res.x[-1]))
        worst = max(worst, float(np.max(problem.X.A @ x_j - problem.X.b)))
    return inputs, worst


def _fit_inputs_sum(W, Mmat, problem, C_hat, zhat):
    """Per-vertex LP inputs minimizing the summed invariance violation.

    Enumerates (parameter vertex, disturbance vertex) rows exactly as the
    shape-step model does, so the returned total (which also counts the
    u-independent state-row violations) is the merit the step LP predicts.
    """
    CM = C_hat @ Mmat
    AB = [problem.sys.evaluate(p) for p in problem.vertices_P.vertices]
    Wv = problem.vertices_W.vertices
    m = problem.sys.m
    m_s = C_hat.shape[0]
    ns = len(AB) * len(Wv) * m_s
    Hu, hu = problem.U.A, problem.U.b
    c = np.concatenate([np.zeros(m), np.ones(ns)])
    bounds = [(None, None)] * m + [(0.0, None)] * ns
    inputs = []
    total = 0.0
    for z in zhat:
        x_j = W @ z
        rows, rhs = [], []
        blk_at = 0
        for A_i, B_i in AB:
            CMB = CM @ B_i
            core = CM @ (A_i @ x_j) - 1.0
            for w in Wv:
                blk = np.zeros((m_s, m + ns))
                blk[:, :m] = CMB
                blk[:, m + blk_at:m + blk_at + m_s] = -np.eye(m_s)
                rows.append(blk)
                rhs.append(-(core + CM @ w))
                blk_at += m_s
        ublk = np.zeros((Hu.shape[0], m + ns))
        ublk[:, :m] = Hu
        rows.append(ublk)
        rhs.append(hu)
        res = linprog(c, A_ub=np.vstack(rows), b_ub=np.concatenate(rhs),
                      bounds=bounds, method="highs")
        if res.status != 0:
            raise SolverNumericalError(f"input-fit LP status {res.status}")
        inputs.append(res.x[:m])
        total += float(res.fun)
        total += float(np.sum(np.clip(problem.X.A @ x_j - problem.X.b, 0.0, None)))
    return inputs, total


def replay_check(W, M, u_vertices, problem, C_hat, tol=REPLAY_TOL):
    """Re-evaluate every constraint of the shape program from raw data.

    Returns max residual per group plus a list of rows exceeding tol,
    keyed by (seed vertex, parameter vertex, disturbance vertex, row).
    """
    C_hat = np.atleast_2d(np.asarray(C_hat, float))
    W = np.asarray(W, float)
    M = np.asarray(M, float)
    zhat = enumerate_vertices(
        HPolytope(C_hat, np.ones(C_hat.shape[0])), on_degenerate="ignore").vertices
    CM = C_hat @ M
    Pv = problem.vertices_P.vertices
    Wv = problem.vertices_W.vertices
    report = {
        "inverse": float(np.max(np.abs(W @ M - np.eye(W.shape[0])))),
        "rci": -np.inf, "state": -np.inf, "input": -np.inf,
        "violations": [],
    }
    for j, z in enumerate(zhat):
        x_j = W @ z
        u_j = np.atleast_1d(u_vertices[j])
        sres = problem.X.A @ x_j - problem.X.b
        report["state"] = max(report["state"], float(np.max(sres)))
        for r in np.flatnonzero(sres > tol):
            report["violations"].append(
                {"group": "state", "z_vertex": j, "row": int(r),
                 "residual": float(sres[r])})
        ures = problem.U.A @ u_j - problem.U.b
        report["input"] = max(report["input"], float(np.max(ures)))
        for r in np.flatnonzero(ures > tol):
            report["violations"].append(
                {"group": "input", "z_vertex": j, "row": int(r),
                 "residual": float(ures[r])})
        for i, p in enumerate(Pv):
            A_p, B_p = problem.sys.evaluate(p)
            base = A_p @ x_j + B_p @ u_j
            for l, w in enumerate(Wv):
                res = CM @ (base + w) - 1.0
                report["rci"] = max(report["rci"], float(np.max(res)))
                for r in np.flatnonzero(res > tol):
                    report["violations"].append(
                        {"group": "rci", "z_vertex": j, "p_vertex": i,
                         "w_vertex": l, "row": int(r), "residual": float(res[r])})
    report["max_residual"] = max(report["rci"], report["state"], report["input"])
    report["pass"] = bool(report["max_residual"] <= tol and report["inverse"] <= tol)
    return report


def _containment_scale(Z, X, bisect_iters):
    """Largest alpha with alpha*Z inside X, by bisection on support values."""
    sigma = np.array([support_value(Z, X.A[r]) for r in range(X.n_rows)])

    def fits(alpha):
        return bool(np.all(alpha * sigma <= X.b + 1e-12))

    lo, hi = 0.0, 1.0
    grow = 0
    while fits(hi) and grow < 60:
        lo, hi = hi, 2.0 * hi
        grow += 1
    for _ in range(bisect_iters):
        mid = 0.5 * (lo + hi)
        if fits(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _lp_solve(prob, solver):
    """Solve a cvxpy LP, routing SCIPY to the HiGHS backend."""
    try:
        if solver == "SCIPY":
            prob.solve(solver="SCIPY", scipy_options={"method": "highs"})
        else:
            prob.solve(solver=solver)
    except cp.error.SolverError as exc:
        raise SolverNumericalError(str(exc)) from exc


def _coverage_weights(Wmat, zhat, Xv, D, solver):
    """Exact coverage LP at a fixed shape; returns weights and distance."""
    T, N = len(Xv), len(zhat)
    verts = zhat @ Wmat.T
    lam = cp.Variable((T, N), nonneg=True)
    eps = cp.Variable(D.shape[0], nonneg=True)
    cons = [cp.sum(lam, axis=1) == 1]
    for t in range(T):
        cons.append(D @ (Xv[t] - verts.T @ lam[t]) <= eps)
    prob = cp.Problem(cp.Minimize(cp.sum(eps)), cons)
    _lp_solve(prob, solver)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise SolverNumericalError(f"coverage LP status {prob.status!r}")
    return lam.value, float(prob.value)


def _shape_step(Mmat, lam, zhat, Xv, AB, problem, C_hat, D, W_prev, u_prev,
                trust, solver):
    """Trust-region LP over (W, vertex inputs, slack) with inverse and
    weights frozen.

    The invariance rows use the exact first-order model of
    C_hat W^{-1} (A W z + B u + w) around (W_prev, u_prev): the frozen
    inverse appears both directly and through the correction term
    -CM dW M (...), without which the step direction can point uphill for
    the true residual. Rows are softened by penalized slack so the LP
    stays feasible while the penalty drives the slack to zero.
    """
    n = Mmat.shape[0]
    m = problem.sys.m
    N = len(zhat)
    m_s = C_hat.shape[0]
    CM = C_hat @ Mmat
    Wv = problem.vertices_W.vertices
    Zt = zhat.T
    Uprev = np.column_stack([np.atleast_1d(u) for u in u_prev])
    W = cp.Variable((n, n))
    Umat = cp.Variable((m, N))
    eps = cp.Variable(D.shape[0], nonneg=True)
    dW = W - W_prev
    cons = [cp.abs(dW) <= trust * (0.1 + np.abs(W_prev))]
    slacks = []
    for A_i, B_i in AB:
        lin = CM @ (A_i @ W @ Zt + B_i @ Umat)
        base_prev = A_i @ W_prev @ Zt + B_i @ Uprev
        for w in Wv:
            K = Mmat @ (base_prev + w[:, None])
            xi = cp.Variable((m_s, N), nonneg=True)
            slacks.append(xi)
            cons.append(lin + (CM @ w)[:, None] - CM @ dW @ K <= 1 + xi)
    cons.append(problem.X.A @ W @ Zt <= problem.X.b[:, None])
    cons.append(problem.U.A @ Umat <= problem.U.b[:, None])
    zbar = lam @ zhat
    for t in range(len(Xv)):
        cons.append(D @ (Xv[t] - W @ zbar[t]) <= eps)
    obj = cp.sum(eps) + MERIT_PEN * sum(cp.sum(xi) for xi in slacks)
    prob = cp.Problem(cp.Minimize(obj), cons)
    _lp_solve(prob, solver)
    if W.value is None:
        return prob.status, None, np.inf
    return prob.status, np.asarray(W.value), float(prob.value)


def _disturbance_offsets(CM, problem):
    """Rowwise worst disturbance push-in: max over W vertices of CM w."""
    Wv = problem.vertices_W.vertices
    return np.max(np.vstack([CM @ w for w in Wv]), axis=0)


def _diagnose_infeasible(W0, M0, zhat, AB, problem, C_hat, feas_tol):
    """Pin down which (seed vertex, parameter vertex) blocks the start."""
    u_fit, worst = fit_vertex_inputs(W0, problem, C_hat, zhat=zhat)
    if worst <= feas_tol:
        return
    CM = C_hat @ M0
    w_off = _disturbance_offsets(CM, problem)
    for j, z in enumerate(zhat):
        x_j = W0 @ z
        for i, (A_i, B_i) in enumerate(AB):
            res = float(np.max(CM @ (A_i @ x_j + B_i @ u_fit[j]) + w_off - 1.0))
            if res > feas_tol:
                raise InfeasibleAtInitError(
                    f"seed vertex {j} admits no admissible input at parameter "
                    f"vertex {i} (best residual {res:.3e})")
    raise InfeasibleAtInitError(
        f"initial shape infeasible (best residual {worst:.3e})")
