"""Shared fixtures: the bundled example problems, solved once per session.

Synthesis runs and the template search are the expensive parts of the
suite, so every solved artifact is session scoped and lazily built; a
test run that never touches an example never pays for it. Wall-clock
timings of the solves land in the `timings` dictionary for the budget
assertions.
"""

import time
from collections import namedtuple

import numpy as np
import pytest
from hypothesis import settings

from pdrci import examples
from pdrci.models import LpvProblem, LpvSystem
from pdrci.polytopes import HPolytope, enumerate_vertices
from pdrci.synthesis import SynthesisSpec, synthesize, synthesize_quasi_lpv
from pdrci.templates import build_template, uniform_polygon
from pdrci.verify import dtot

settings.register_profile("suite", max_examples=25, deadline=None, derandomize=True)
settings.load_profile("suite")

SWEEP_KAPPAS = (0.05, 0.1, 0.2, 0.3, 0.4, 0.5)

# A solved example: everything the oracles need to re-check it.
Solved = namedtuple("Solved", "name problem template spec solution")


@pytest.fixture(scope="session")
def timings():
    return {}


@pytest.fixture(scope="session")
def di_bundle():
    return examples.double_integrator()


@pytest.fixture(scope="session")
def di_X_vertices(di_bundle):
    return enumerate_vertices(di_bundle.problem.X).vertices


@pytest.fixture(scope="session")
def di_mrci_template(di_bundle, timings):
    t0 = time.perf_counter()
    template = examples.mrci_template(di_bundle.problem)
    timings["di_mrci"] = time.perf_counter() - t0
    return template


@pytest.fixture(scope="session")
def di_solved(di_bundle, di_mrci_template, timings):
    spec = SynthesisSpec(problem=di_bundle.problem, template=di_mrci_template,
                         D=di_mrci_template.C)
    t0 = time.perf_counter()
    solution = synthesize(spec)
    timings["di_synth"] = time.perf_counter() - t0
    return Solved("double-integrator", di_bundle.problem, di_mrci_template,
                  spec, solution)


@pytest.fixture(scope="session")
def di_octagon(di_bundle):
    """Comparison-scale 8-row template from the alternating shape search."""
    return examples.nlp_template(di_bundle.problem, uniform_polygon(8))


@pytest.fixture(scope="session")
def sweep_totals(di_octagon):
    """Total coverage distance per rate-bound scale, 200 shared samples."""
    template, _ = di_octagon
    rng = np.random.default_rng(0)
    zetas = rng.uniform(-0.25, 0.25, size=200)
    params = [examples.zeta_to_param(z) for z in zetas]
    totals = []
    for kappa in SWEEP_KAPPAS:
        bundle = examples.double_integrator(kappa=kappa)
        solution = synthesize(SynthesisSpec(
            problem=bundle.problem, template=template, D=template.C))
        totals.append(dtot(solution, bundle.problem, params, template=template))
    return totals


@pytest.fixture(scope="session")
def vdp_bundle():
    return examples.vanderpol()


@pytest.fixture(scope="session")
def vdp_octagon_solved(vdp_bundle):
    template, _ = examples.nlp_template(vdp_bundle.problem, uniform_polygon(8),
                                        D=vdp_bundle.D)
    spec = SynthesisSpec(problem=vdp_bundle.problem, template=template,
                         D=vdp_bundle.D)
    solution = synthesize_quasi_lpv(spec)
    return Solved("vanderpol-8", vdp_bundle.problem, template, spec, solution)


@pytest.fixture(scope="session")
def vdp_30gon_solved(vdp_bundle):
    template = examples.polygon_template(30)
    spec = SynthesisSpec(problem=vdp_bundle.problem, template=template,
                         D=vdp_bundle.D)
    solution = synthesize_quasi_lpv(spec)
    return Solved("vanderpol-30", vdp_bundle.problem, template, spec, solution)


@pytest.fixture(scope="session")
def vehicle_bundle():
    return examples.vehicle()


@pytest.fixture(scope="session")
def vehicle_published_template(vehicle_bundle):
    """Template from the published shape matrix; its seed is degenerate."""
    C_hat = vehicle_bundle.data["C_hat"]
    W_pub = vehicle_bundle.data["W_published"]
    C = C_hat @ np.linalg.inv(W_pub)
    return build_template(C, 1.0, degenerate_vertices="first")


@pytest.fixture(scope="session")
def vehicle_published_solved(vehicle_bundle, vehicle_published_template, timings):
    spec = SynthesisSpec(problem=vehicle_bundle.problem,
                         template=vehicle_published_template,
                         D=vehicle_bundle.D)
    t0 = time.perf_counter()
    solution = synthesize(spec)
    timings["vehicle_synth"] = time.perf_counter() - t0
    return Solved("vehicle-published", vehicle_bundle.problem,
                  vehicle_published_template, spec, solution)


@pytest.fixture(scope="session")
def vehicle_search(vehicle_bundle, timings):
    """Shape transform found by our own alternating search."""
    t0 = time.perf_counter()
    template, init = examples.nlp_template(
        vehicle_bundle.problem, vehicle_bundle.data["C_hat"],
        D=vehicle_bundle.D, degenerate_vertices="first")
    timings["vehicle_nlp"] = time.perf_counter() - t0
    return template, init


@pytest.fixture(scope="session")
def vehicle_search_solved(vehicle_bundle, vehicle_search, timings):
    template, _ = vehicle_search
    spec = SynthesisSpec(problem=vehicle_bundle.problem, template=template,
                         D=vehicle_bundle.D)
    t0 = time.perf_counter()
    solution = synthesize(spec)
    timings["vehicle_search_synth"] = time.perf_counter() - t0
    return Solved("vehicle-search", vehicle_bundle.problem, template, spec,
                  solution)


def make_lti_problem():
    """Scalar contractive plant x+ = 0.5 x + u with every set degenerate
    or trivial: single parameter pinned to one, no disturbance, no rate."""
    sys = LpvSystem([np.array([[0.5]])], [np.array([[1.0]])])
    return LpvProblem(
        sys,
        X=HPolytope.box(1.0, 1),
        U=HPolytope.box(1.0, 1),
        W=HPolytope.box(0.0, 1),
        P=HPolytope(np.array([[1.0], [-1.0]]), np.array([1.0, -1.0])),
        R=HPolytope.box(0.0, 1),
    )


@pytest.fixture(scope="session")
def lti_solved():
    problem = make_lti_problem()
    template = build_template(np.array([[1.0], [-1.0]]), 1.0)
    spec = SynthesisSpec(problem=problem, template=template)
    solution = synthesize_quasi_lpv(spec)
    return Solved("lti", problem, template, spec, solution)


@pytest.fixture(scope="session")
def all_solved(di_solved, vdp_octagon_solved, vdp_30gon_solved,
               vehicle_published_solved, vehicle_search_solved, lti_solved):
    return [di_solved, vdp_octagon_solved, vdp_30gon_solved,
            vehicle_published_solved, vehicle_search_solved, lti_solved]
