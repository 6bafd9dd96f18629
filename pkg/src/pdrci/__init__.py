"""Parameter-dependent robust invariant polytopes for LPV systems.

Synthesis of a polytopic set family {x : C x <= y0 + Y p} that is
robustly control invariant against bounded parameter variation, via a
single conic program over a frozen vertex configuration, plus the
runtime vertex-interpolation controller, template selection, and an
independent verification suite.
"""

from .control import ControllerState, OutsideSetError, QPInfeasibleError, Trajectory, control, simulate
from .models import AssumptionError, LpvProblem, LpvSystem, build_pplus, lift_nonnegative, sample_parameter_step
from .polytopes import (
    DegenerateError,
    HPolytope,
    InfeasibleError,
    Tolerances,
    UnboundedError,
    VPolytope,
    distance_metric,
    enumerate_vertices,
    mrci,
    support_value,
)
from .synthesis import (
    PdRciSolution,
    SolverInfeasibleError,
    SolverNumericalError,
    SynthesisOptions,
    SynthesisSpec,
    certificate_replay,
    synthesize,
    synthesize_quasi_lpv,
)
from .template_init import InfeasibleAtInitError, InitOptions, PiRciResult, SingularWError, init_template, replay_check
from .templates import (
    ConfigurationViolatedError,
    ConfiguredTemplate,
    NonSimpleSeedError,
    build_template,
    uniform_polygon,
    vertices_at,
)
from .verify import VerificationReport, check_prop3, dtot, union_set_estimate, verify_solution

__version__ = "0.1.0"

__all__ = [
    "AssumptionError",
    "ConfigurationViolatedError",
    "ConfiguredTemplate",
    "ControllerState",
    "DegenerateError",
    "HPolytope",
    "InfeasibleAtInitError",
    "InfeasibleError",
    "InitOptions",
    "LpvProblem",
    "LpvSystem",
    "NonSimpleSeedError",
    "OutsideSetError",
    "PdRciSolution",
    "PiRciResult",
    "QPInfeasibleError",
    "SingularWError",
    "SolverInfeasibleError",
    "SolverNumericalError",
    "SynthesisOptions",
    "SynthesisSpec",
    "Tolerances",
    "Trajectory",
    "UnboundedError",
    "VPolytope",
    "VerificationReport",
    "build_pplus",
    "build_template",
    "certificate_replay",
    "check_prop3",
    "control",
    "distance_metric",
    "dtot",
    "enumerate_vertices",
    "init_template",
    "lift_nonnegative",
    "mrci",
    "replay_check",
    "sample_parameter_step",
    "simulate",
    "support_value",
    "synthesize",
    "synthesize_quasi_lpv",
    "union_set_estimate",
    "uniform_polygon",
    "verify_solution",
    "vertices_at",
]
