"""Vertex configuration machinery: maps, cone, offset sweeps."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import halfspace_support, lp_max
from pdrci.polytopes import HPolytope, contains, enumerate_vertices
from pdrci.templates import (
    ConfigurationViolatedError,
    NonSimpleSeedError,
    build_template,
    check_configuration,
    uniform_polygon,
    vertices_at,
)


def square_template():
    return build_template(HPolytope.box(1.0, 2).A, 1.0)


def vertex_set(points, decimals=8):
    pts = getattr(points, "vertices", points)
    return {tuple(np.round(p, decimals)) for p in np.atleast_2d(pts)}


class TestBuild:
    def test_square_structure(self):
        T = square_template()
        assert T.N == 4
        assert T.m_s == 4
        assert T.simple
        assert T.E.shape == (16, 4)
        for Vk, J in zip(T.V, T.active_sets):
            assert len(J) == 2
            # zero outside the active columns, a block inverse on them
            inactive = [j for j in range(4) if j not in J]
            assert np.allclose(Vk[:, inactive], 0.0)
            assert np.allclose(T.C[list(J)] @ Vk[:, list(J)], np.eye(2), atol=1e-12)

    def test_rows_are_normalized(self):
        C = np.array([[3.0, 0.0], [0.0, 2.0], [-5.0, 0.0], [0.0, -4.0]])
        sigma = np.array([3.0, 2.0, 5.0, 4.0])
        T = build_template(C, sigma)
        assert np.linalg.norm(T.C, axis=1) == pytest.approx(np.ones(4))
        # same seed set after rescaling: the unit square
        assert vertex_set(vertices_at(T, T.seed_sigma)) == {
            (1, 1), (1, -1), (-1, 1), (-1, -1)}

    def test_seed_sigma_in_cone(self):
        T = square_template()
        assert check_configuration(T, T.seed_sigma) <= 1e-12
        assert check_configuration(T, -T.seed_sigma) > 0.1

    def test_scalar_sigma_broadcasts(self):
        C = uniform_polygon(6)
        assert np.allclose(build_template(C, 1.0).seed_sigma, np.ones(6))

    def test_non_simple_seed_rejected_by_default(self):
        box = HPolytope.box(1.0, 2)
        r = 1.0 / np.sqrt(2.0)
        C = np.vstack([box.A, [[r, r]]])
        sigma = np.concatenate([box.b, [np.sqrt(2.0)]])
        with pytest.raises(NonSimpleSeedError):
            build_template(C, sigma)
        T = build_template(C, sigma, degenerate_vertices="first")
        assert not T.simple
        assert T.N == 4

    def test_unbounded_seed_rejected(self):
        from pdrci.polytopes import UnboundedError
        with pytest.raises(UnboundedError):
            build_template(np.array([[1.0, 0.0], [0.0, 1.0]]), 1.0)


class TestUniformPolygon:
    def test_four_rows_are_axes(self):
        C = uniform_polygon(4)
        assert vertex_set(C) == {(1, 0), (0, 1), (-1, 0), (0, -1)}

    def test_rows_unit_norm(self):
        for m in (3, 8, 30):
            C = uniform_polygon(m)
            assert C.shape == (m, 2)
            assert np.linalg.norm(C, axis=1) == pytest.approx(np.ones(m))

    def test_too_few_rows(self):
        with pytest.raises(ValueError):
            uniform_polygon(2)

    def test_polygon_template_is_simple(self):
        T = build_template(uniform_polygon(30), 1.0)
        assert T.simple and T.N == 30


class TestVerticesAt:
    def test_square_at_seed(self):
        T = square_template()
        assert vertex_set(vertices_at(T, np.ones(4))) == {
            (1, 1), (1, -1), (-1, 1), (-1, -1)}

    def test_square_stretched(self):
        T = square_template()
        y = np.array([2.0, 1.0, 2.0, 1.0])
        assert check_configuration(T, y) <= 1e-12
        assert vertex_set(vertices_at(T, y)) == {
            (2, 1), (2, -1), (-2, 1), (-2, -1)}

    def test_out_of_cone_offset_raises(self):
        T = square_template()
        with pytest.raises(ConfigurationViolatedError):
            vertices_at(T, np.array([1.0, 1.0, -1.5, 1.0]))

    def test_hull_matches_halfspace_set(self):
        # For simple templates and in-cone offsets the vertex hull and
        # {C x <= y} have the same support in every direction.
        T = build_template(uniform_polygon(8), 1.0)
        rng = np.random.default_rng(4)
        tried = 0
        for _ in range(200):
            if tried == 5:
                break
            y = 1.0 + rng.uniform(-0.2, 0.4, size=8)
            if check_configuration(T, y) > 1e-9:
                continue
            tried += 1
            verts = vertices_at(T, y).vertices
            dirs = rng.normal(size=(12, 2))
            hull_sup = np.array([np.max(verts @ d) for d in dirs])
            lp_sup = halfspace_support(T.C, y, dirs)
            assert hull_sup == pytest.approx(lp_sup, abs=1e-8)
        assert tried == 5

    def test_vertices_inside_halfspace_form(self):
        T = build_template(uniform_polygon(8), 1.0)
        y = np.full(8, 1.3)
        for v in vertices_at(T, y).vertices:
            assert contains(HPolytope(T.C, y), v, 1e-9)


class TestCone:
    def test_conic_combinations_stay_inside(self):
        T = build_template(uniform_polygon(8), 1.0)
        rng = np.random.default_rng(9)
        inside = [T.seed_sigma, 2.0 * T.seed_sigma]
        y = 1.0 + rng.uniform(-0.1, 0.1, size=8)
        if check_configuration(T, y) <= 1e-12:
            inside.append(y)
        for _ in range(10):
            w = rng.uniform(0.0, 2.0, size=len(inside))
            combo = sum(wi * yi for wi, yi in zip(w, inside))
            assert check_configuration(T, combo) <= 1e-9

    def test_mrci_seed_is_simple(self, di_mrci_template):
        T = di_mrci_template
        assert T.simple
        assert T.N == T.m_s
        assert check_configuration(T, T.seed_sigma) <= 1e-9


@given(sx=st.floats(0.5, 2.0), sy=st.floats(0.5, 2.0))
def test_square_vertices_track_offsets(sx, sy):
    T = square_template()
    y = np.array([sx, sy, sx, sy])
    assert check_configuration(T, y) <= 1e-12
    got = np.array(sorted(map(tuple, vertices_at(T, y).vertices)))
    want = np.array(sorted([(sx, sy), (sx, -sy), (-sx, sy), (-sx, -sy)]))
    assert got == pytest.approx(want, abs=1e-12)
