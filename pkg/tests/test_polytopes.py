"""Geometry layer against exact and LP oracles."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import lp_max, rational_vertices
from pdrci.models import LpvProblem, LpvSystem
from pdrci.polytopes import (
    DegenerateError,
    HPolytope,
    InfeasibleError,
    UnboundedError,
    VPolytope,
    contains,
    distance_metric,
    enumerate_vertices,
    hull_to_hrep,
    mrci,
    normalize_rows,
    project,
    remove_redundant_rows,
    support_value,
    volume,
)


def random_bounded_3d(seed):
    """Unit box plus a few random cuts; bounded by construction."""
    rng = np.random.default_rng(seed)
    extra = rng.normal(size=(4, 3))
    extra /= np.linalg.norm(extra, axis=1)[:, None]
    box = HPolytope.box(1.0, 3)
    A = np.vstack([box.A, extra])
    b = np.concatenate([box.b, rng.uniform(0.3, 0.9, size=4)])
    return HPolytope(A, b)


def vertex_set(points, decimals=8):
    return {tuple(np.round(p, decimals)) for p in np.atleast_2d(points)}


class TestSupport:
    def test_unit_box_axes(self):
        P = HPolytope.box(1.0, 2)
        for d, want in [((1, 0), 1.0), ((0, -1), 1.0), ((1, 1), 2.0), ((-2, 1), 3.0)]:
            assert support_value(P, np.array(d, float)) == pytest.approx(want, abs=1e-9)

    def test_matches_lp_oracle(self):
        P = random_bounded_3d(7)
        rng = np.random.default_rng(11)
        for d in rng.normal(size=(20, 3)):
            want, status = lp_max(d, P.A, P.b)
            assert status == "optimal"
            assert support_value(P, d) == pytest.approx(want, abs=1e-8)

    def test_unbounded_raises(self):
        P = HPolytope(np.array([[1.0, 0.0]]), np.array([1.0]))
        with pytest.raises(UnboundedError):
            support_value(P, np.array([0.0, 1.0]))

    def test_infeasible_raises(self):
        P = HPolytope(np.array([[1.0], [-1.0]]), np.array([-1.0, -2.0]))
        with pytest.raises(InfeasibleError):
            support_value(P, np.array([1.0]))


class TestContains:
    def test_box_membership(self):
        P = HPolytope.box(1.0, 2)
        assert contains(P, [0.0, 0.0])
        assert contains(P, [1.0, -1.0])
        assert contains(P, [1.0 + 1e-10, 0.0])
        assert not contains(P, [1.1, 0.0])

    def test_float_tol_widens(self):
        P = HPolytope.box(1.0, 1)
        assert not contains(P, [1.01])
        assert contains(P, [1.01], tol=0.02)


class TestEnumerateVertices:
    def test_unit_square(self):
        V = enumerate_vertices(HPolytope.box(1.0, 2))
        assert vertex_set(V.vertices) == {(1, 1), (1, -1), (-1, 1), (-1, -1)}
        assert all(len(s) == 2 for s in V.active_sets)

    def test_matches_rational_oracle(self):
        for seed in (0, 3, 12):
            P = random_bounded_3d(seed)
            got = vertex_set(enumerate_vertices(P).vertices)
            want = {tuple(np.round([float(c) for c in v], 8))
                    for v in rational_vertices(P.A, P.b)}
            assert got == want

    def test_degenerate_vertex_policies(self):
        # A cut through the corner (1, 1) gives that vertex 3 active rows.
        box = HPolytope.box(1.0, 2)
        r = 1.0 / np.sqrt(2.0)
        P = HPolytope(np.vstack([box.A, [[r, r]]]),
                      np.concatenate([box.b, [np.sqrt(2.0)]]))
        with pytest.raises(DegenerateError):
            enumerate_vertices(P, on_degenerate="error")
        V = enumerate_vertices(P, on_degenerate="ignore")
        assert vertex_set(V.vertices) == {(1, 1), (1, -1), (-1, 1), (-1, -1)}

    def test_unbounded_detected(self):
        # x <= 1 alone is a half-plane.
        P = HPolytope(np.array([[1.0, 0.0]]), np.array([1.0]))
        with pytest.raises(UnboundedError):
            enumerate_vertices(P)


class TestVolume:
    def test_square(self):
        V = enumerate_vertices(HPolytope.box(1.0, 2))
        assert volume(V) == pytest.approx(4.0, abs=1e-12)

    def test_simplex_3d(self):
        A = np.vstack([-np.eye(3), np.ones((1, 3))])
        b = np.array([0.0, 0.0, 0.0, 1.0])
        V = enumerate_vertices(HPolytope(A, b), on_degenerate="ignore")
        assert volume(V) == pytest.approx(1.0 / 6.0, abs=1e-12)

    def test_box_4d(self):
        V = enumerate_vertices(HPolytope.box(0.5, 4))
        assert volume(V) == pytest.approx(1.0, abs=1e-10)

    def test_scaling_law(self):
        pts = np.random.default_rng(5).normal(size=(10, 3))
        base = volume(VPolytope(pts))
        assert volume(VPolytope(1.7 * pts)) == pytest.approx(1.7 ** 3 * base, rel=1e-10)

    def test_degenerate_raises(self):
        flat = VPolytope(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]))
        with pytest.raises(DegenerateError):
            volume(flat)
        assert flat.volume() == 0.0


class TestProject:
    def test_box_shadow(self):
        sq = project(HPolytope.box(1.0, 3), 2)
        V = enumerate_vertices(sq)
        assert vertex_set(V.vertices) == {(1, 1), (1, -1), (-1, 1), (-1, -1)}

    def test_support_matches_lifted_lp(self):
        P = random_bounded_3d(21)
        shadow = project(P, 2)
        rng = np.random.default_rng(2)
        for d in rng.normal(size=(15, 2)):
            want, status = lp_max(np.concatenate([d, [0.0]]), P.A, P.b)
            assert status == "optimal"
            assert support_value(shadow, d) == pytest.approx(want, abs=1e-7)


class TestDistanceMetric:
    def test_zero_on_self_cover(self):
        X = enumerate_vertices(HPolytope.box(1.0, 2))
        Z = HPolytope.box(1.0, 2)
        assert distance_metric(Z, Z.A, X) == pytest.approx(0.0, abs=1e-9)

    def test_interval_hand_value(self):
        # X = [-2, 2], Z = [-1, 1]: each end needs one unit of cover.
        Z = HPolytope.box(1.0, 1)
        got, eps = distance_metric(Z, Z.A, np.array([[2.0], [-2.0]]), return_eps=True)
        assert got == pytest.approx(2.0, abs=1e-9)
        assert eps == pytest.approx([1.0, 1.0], abs=1e-9)

    def test_antitone_in_candidate(self):
        X = np.array([[2.0], [-2.0]])
        D = np.array([[1.0], [-1.0]])
        d_small = distance_metric(HPolytope.box(0.5, 1), D, X)
        d_large = distance_metric(HPolytope.box(1.5, 1), D, X)
        assert d_large < d_small

    def test_empty_candidate_raises(self):
        empty = HPolytope(np.array([[1.0], [-1.0]]), np.array([-1.0, -2.0]))
        with pytest.raises(InfeasibleError):
            distance_metric(empty, np.array([[1.0], [-1.0]]),
                            np.array([[2.0], [-2.0]]))


def make_decoupled_problem(gain, w):
    """Two independent unstable scalars; invariant box shrinks to 1 - w."""
    sys = LpvSystem([gain * np.eye(2)], [np.eye(2)])
    return LpvProblem(
        sys,
        X=HPolytope.box(1.0, 2),
        U=HPolytope.box(1.0, 2),
        W=HPolytope.box(w, 2),
        P=HPolytope(np.array([[1.0], [-1.0]]), np.array([1.0, -1.0])),
        R=HPolytope.box(0.0, 1),
    )


class TestMrci:
    def test_contractive_plant_keeps_state_box(self):
        fixed = mrci(make_decoupled_problem(0.5, 0.0))
        for d in np.vstack([np.eye(2), -np.eye(2)]):
            assert support_value(fixed, d) == pytest.approx(1.0, abs=1e-8)

    def test_unstable_plant_shrinks_to_known_fixed_point(self):
        # x+ = 2x + u + w with |u| <= 1, |w| <= 0.5 leaves exactly [-0.5, 0.5].
        fixed = mrci(make_decoupled_problem(2.0, 0.5))
        for d in np.vstack([np.eye(2), -np.eye(2)]):
            assert support_value(fixed, d) == pytest.approx(0.5, abs=1e-7)

    def test_result_is_invariant(self, di_bundle, di_mrci_template):
        # Every seed vertex admits an input keeping the one-step image,
        # tightened by the disturbance, inside the seed set.
        problem = di_bundle.problem
        C, sigma = di_mrci_template.C, di_mrci_template.seed_sigma
        dW = np.array([support_value(problem.W, row) for row in C])
        seed_vertices = enumerate_vertices(HPolytope(C, sigma)).vertices
        for p in problem.vertices_P.vertices:
            Ap, Bp = problem.sys.evaluate(p)
            for x in seed_vertices:
                A_u = np.vstack([C @ Bp, problem.U.A])
                b_u = np.concatenate([sigma - dW - C @ Ap @ x, problem.U.b])
                val, status = lp_max(np.zeros(problem.U.dim), A_u, b_u)
                assert status == "optimal"


class TestHelpers:
    def test_normalize_rows(self):
        A, b = normalize_rows(np.array([[3.0, 4.0]]), np.array([10.0]))
        assert A == pytest.approx(np.array([[0.6, 0.8]]))
        assert b == pytest.approx([2.0])

    def test_remove_redundant_rows(self):
        box = HPolytope.box(1.0, 2)
        A = np.vstack([box.A, box.A[0], [[1.0, 0.0]]])
        b = np.concatenate([box.b, [1.0, 5.0]])
        A_min, b_min = remove_redundant_rows(A, b)
        assert A_min.shape[0] == 4
        got = vertex_set(enumerate_vertices(HPolytope(A_min, b_min)).vertices)
        assert got == {(1, 1), (1, -1), (-1, 1), (-1, -1)}

    def test_hull_round_trip(self):
        pts = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [2.0, 2.0]])
        A, b = hull_to_hrep(pts)
        P = HPolytope(A, b)
        assert all(contains(P, p, 1e-9) for p in pts)
        assert not contains(P, [3.0, 1.0])


@given(radius=st.floats(0.5, 3.0), dx=st.floats(-1.0, 1.0), dy=st.floats(-1.0, 1.0))
def test_box_support_is_scaled_l1_norm(radius, dx, dy):
    d = np.array([dx, dy])
    if np.abs(d).max() < 1e-3:
        return
    P = HPolytope.box(radius, 2)
    assert support_value(P, d) == pytest.approx(radius * np.abs(d).sum(), rel=1e-9)


@given(radius=st.floats(0.5, 2.0), stretch=st.floats(1.0, 3.0))
def test_box_volume_is_side_product(radius, stretch):
    P = HPolytope.from_bounds([-radius, -radius * stretch],
                              [radius, radius * stretch])
    V = enumerate_vertices(P)
    assert volume(V) == pytest.approx((2 * radius) ** 2 * stretch, rel=1e-9)
