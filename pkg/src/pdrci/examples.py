"""Benchmark model builders and their canonical templates.

Three stock problems exercise every code path:

  * double-integrator: two-state LPV family on a simplex parameter set
    with a rate-bounded scheduling walk and an additive disturbance on
    the first state;
  * vanderpol: forward-Euler Van der Pol oscillator in quasi-LPV form,
    the scheduling parameter a function of the current state (mu and
    the sample time delta are our documented choices, not inherited);
  * vehicle: four-state lateral-dynamics model with two inputs, already
    in lifted form with a constant third parameter coordinate, the
    disturbance a segment, and a 24-row seed shape.
"""

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .models import LpvProblem, LpvSystem
from .polytopes import HPolytope, hull_to_hrep, mrci
from .template_init import InitOptions, init_template
from .templates import build_template, uniform_polygon


@dataclass
class ExampleBundle:
    name: str
    problem: LpvProblem
    D: np.ndarray = None           # canonical coverage directions (None: use C)
    quasi: bool = False
    param_of_state: object = None  # state -> scheduling parameter, quasi mode
    data: dict = field(default_factory=dict)


def simplex_parameter_set(s):
    """H-form of the unit simplex with the sum pinned by a +/- row pair."""
    rows = [-np.eye(s), np.eye(s), np.ones((1, s)), -np.ones((1, s))]
    rhs = np.concatenate([np.zeros(s), np.ones(s), [1.0], [-1.0]])
    return HPolytope(np.vstack(rows), rhs)


def segment_hrep(endpoint):
    """H-form of the segment from the origin to the given endpoint."""
    d = np.asarray(endpoint, float).reshape(-1)
    norm = np.linalg.norm(d)
    if norm == 0:
        raise ValueError("zero-length segment")
    u = d / norm
    import scipy.linalg

    comp = scipy.linalg.null_space(u[None, :]).T
    rows = np.vstack([comp, -comp, u[None, :], -u[None, :]])
    rhs = np.concatenate([np.zeros(2 * comp.shape[0]), [norm], [0.0]])
    return HPolytope(rows, rhs)


def double_integrator(kappa=0.2):
    base = np.array([[1.0, 1.0], [0.0, 1.0]])
    sys = LpvSystem(
        [1.25 * base, 0.75 * base],
        [np.array([[0.0], [1.25]]), np.array([[0.0], [0.75]])],
    )
    problem = LpvProblem(
        sys,
        X=HPolytope.box(5.0, 2),
        U=HPolytope.box(1.0, 1),
        W=HPolytope.from_bounds([-0.25, 0.0], [0.25, 0.0]),
        P=simplex_parameter_set(2),
        R=HPolytope.box(kappa, 2),
    )
    return ExampleBundle(
        name="double-integrator",
        problem=problem,
        data={"kappa": kappa, "table_zetas": [-0.25, -0.125, 0.0, 0.125, 0.25]},
    )


def zeta_to_param(zeta):
    """Scalar parameterization of the double-integrator simplex."""
    z = np.asarray(zeta, float)
    return np.stack([0.5 + 2.0 * z, 0.5 - 2.0 * z], axis=-1)


def vanderpol(mu=1.0, delta=0.1):
    """Quasi-LPV oscillator; mu * delta <= 1 keeps the parameter nonnegative."""
    if mu * delta > 1.0:
        raise ValueError("need mu * delta <= 1 for a nonnegative parameter set")
    A1 = np.array([[1.0, delta], [-delta, 1.0]])
    A2 = np.array([[1.0, delta], [-delta, 2.0]])
    Bcol = np.array([[0.0], [delta]])
    sys = LpvSystem([A1, A2], [Bcol, Bcol])
    lo = 1.0 - mu * delta
    P = HPolytope(
        np.vstack([-np.eye(2), np.eye(2), np.ones((1, 2)), -np.ones((1, 2))]),
        np.array([-lo, 0.0, 1.0, 1.0, 1.0, -1.0]),
    )
    problem = LpvProblem(
        sys,
        X=HPolytope.box(1.0, 2),
        U=HPolytope.box(1.0, 1),
        W=HPolytope.from_bounds([0.0, 0.0], [0.0, 0.0]),
        P=P,
        R=P,  # valid here only because quasi mode never steps the parameter set
    )

    def param_of_state(x):
        q = mu * delta * (1.0 - float(x[0]) ** 2)
        return np.array([1.0 - q, q])

    return ExampleBundle(
        name="vanderpol",
        problem=problem,
        D=uniform_polygon(30),
        quasi=True,
        param_of_state=param_of_state,
        data={"mu": mu, "delta": delta},
    )


def vehicle(delta=0.025):
    A0 = np.array([[0.0, 1, 0, 0], [0, 0, 0, 0], [0, 0, 0, 1], [0, 0, 0, 0]])
    A1 = np.array([[0.0, 0, 1, 0], [0, 0, 0, -1], [0, 0, 0, 0], [0, 0, 0, 0]])
    A2 = np.array([[0.0, 0, 0, 0], [0, -171.29, 0, 85.25],
                   [0, 0, 0, 0], [0, 42.19, 0, -199.65]])
    Bm = np.array([[0.0, 0], [65.8919, 0], [0, 0], [43.6411, 0.2287e-3]])
    Bw = np.array([0.0, 0.0018, 0, -0.0022])
    sys = LpvSystem(
        [delta * A1, delta * A2, delta * A0 + np.eye(4)],
        [np.zeros((4, 2)), np.zeros((4, 2)), delta * Bm],
    )
    xmax = np.array([0.4, 3.0, 10 * np.pi / 180, 1.0])
    umax = np.array([2.5 * np.pi / 180, 1.0])
    quad = np.array([[5.556, 0.18], [27.777, 0.036],
                     [19.289, 0.036], [5.556, 0.125]])
    Hq, hq = hull_to_hrep(quad)
    P_rows = np.hstack([Hq, np.zeros((Hq.shape[0], 1))])
    pin = np.zeros((2, 3))
    pin[0, 2], pin[1, 2] = 1.0, -1.0
    P = HPolytope(np.vstack([P_rows, pin]), np.concatenate([hq, [1.0, -1.0]]))
    rate = np.array([1.0, 0.02746, 0.0])
    problem = LpvProblem(
        sys,
        X=HPolytope.from_bounds(-xmax, xmax),
        U=HPolytope.from_bounds(-umax, umax),
        W=segment_hrep(100.0 * delta * Bw),
        P=P,
        R=HPolytope.from_bounds(-rate, rate),
    )
    box_rows = np.array(list(product([1.0, -1.0], repeat=4)))
    C_hat = np.vstack([np.eye(4), -np.eye(4), 0.75 * box_rows])
    W_published = np.array([
        [0.3819, -0.0432, -0.0542, 0.0438],
        [0.0057, 2.8432, -0.1253, 0.4704],
        [-0.0225, -0.0423, 0.0241, -0.0451],
        [0.0069, 0.0712, 0.0583, 0.6544],
    ])
    return ExampleBundle(
        name="vehicle",
        problem=problem,
        D=box_rows,
        data={"C_hat": C_hat, "W_published": W_published, "delta": delta},
    )


def mrci_template(problem, **kwargs):
    """Template seeded by the maximal-RCI fixed point of the problem."""
    fixed = mrci(problem, **kwargs)
    return build_template(fixed.A, fixed.b)


def polygon_template(m):
    """Template seeded by a regular m-gon at unit offsets."""
    return build_template(uniform_polygon(m), 1.0)


def nlp_template(problem, C_hat, D=None, opts=None, degenerate_vertices="error"):
    """Template C = C_hat W^-1 from the alternating shape search.

    Returns (template, PiRciResult).
    """
    if opts is None:
        opts = InitOptions(D=D)
    elif D is not None and opts.D is None:
        opts.D = D
    result = init_template(C_hat, problem, opts)
    C = result.template_matrix(C_hat)
    return build_template(C, 1.0, degenerate_vertices=degenerate_vertices), result


EXAMPLES = {
    "double-integrator": double_integrator,
    "vanderpol": vanderpol,
    "vehicle": vehicle,
}
