import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intrinsic_lipschitz.metric import (
    FiberDivergenceError,
    KoranyiPoint,
    MetricSpace,
    ball,
    heis_inv,
    heis_mul,
    koranyi_distance,
    koranyi_gauge,
    ternary_minimize,
    validate_metric,
)
from intrinsic_lipschitz.models import GridSpec, make_heisenberg_model, make_linear_projection_model
from intrinsic_lipschitz.quotient import (
    CircleModel,
    RatioUndefined,
    UnknownBasePoint,
    fiber_distance,
    fiber_ratio_bound,
)
from intrinsic_lipschitz.sections import Section


def euclid(a, b):
    return np.linalg.norm(np.asarray(a) - np.asarray(b), axis=-1)


class TestValidateMetric:
    def test_collinear_reals(self):
        space = MetricSpace.from_points([0.0, 1.0, 2.0], lambda a, b: np.abs(a - b)[..., 0])
        assert validate_metric(space, 1e-12).valid

    def test_asymmetric_table(self):
        space = MetricSpace.from_table({("a", "b"): 1.0, ("b", "a"): 2.0})
        rep = validate_metric(space, 1e-9)
        assert not rep.valid
        sym = [v for v in rep.violations if v.kind == "symmetry"]
        assert len(sym) == 1 and set(sym[0].points) == {"a", "b"}

    def test_plane_l2(self):
        space = MetricSpace.from_points([(0, 0), (1, 0), (0, 1)], euclid)
        assert validate_metric(space, 1e-12)

    def test_triangle_violation(self):
        space = MetricSpace.from_table({("a", "b"): 1.0, ("b", "c"): 1.0, ("a", "c"): 5.0})
        kinds = {v.kind for v in validate_metric(space, 1e-9).violations}
        assert kinds == {"triangle"}

    def test_squared_distance_is_not_a_metric(self):
        space = MetricSpace.from_points([0.0, 1.0, 2.0], lambda a, b: ((a - b) ** 2)[..., 0])
        assert not validate_metric(space, 1e-9).valid


class TestBall:
    def test_punctured(self):
        space = MetricSpace.from_points([0.0, 0.5, 1.0], lambda a, b: np.abs(a - b)[..., 0])
        assert ball(space, 0, 0.6, punctured=True) == [0.5]

    def test_zero_radius_punctured_is_empty(self):
        space = MetricSpace.from_points([0.0, 0.5, 1.0], lambda a, b: np.abs(a - b)[..., 0])
        assert ball(space, 1, 0.0, punctured=True) == []

    def test_closed(self):
        space = MetricSpace.from_points([0.0, 1.0, 2.0], lambda a, b: np.abs(a - b)[..., 0])
        assert ball(space, 1, 1.0) == [0, 1, 2]

    def test_negative_radius(self):
        space = MetricSpace.from_points([0.0], lambda a, b: np.abs(a - b)[..., 0])
        with pytest.raises(ValueError):
            ball(space, 0, -1.0)


class TestKoranyi:
    def test_identity(self):
        assert koranyi_distance((0.3, -1.2, 0.7), (0.3, -1.2, 0.7)) == 0.0

    def test_horizontal_unit(self):
        assert koranyi_distance((1, 0, 0), (0, 0, 0)) == pytest.approx(1.0, abs=1e-15)

    def test_vertical_unit(self):
        assert koranyi_distance((0, 0, 1), (0, 0, 0)) == pytest.approx(2.0, abs=1e-15)

    def test_gauge_formula(self):
        x, y, t = 0.4, -0.2, 0.3
        assert koranyi_gauge((x, y, t)) == pytest.approx(((x * x + y * y) ** 2 + 16 * t * t) ** 0.25)

    def test_group_law(self):
        p, q = KoranyiPoint(1, 2, 3), KoranyiPoint(-1, 0.5, 2)
        assert p * q == KoranyiPoint(0, 2.5, 5 + (1 * 0.5 - 2 * -1) / 2)
        np.testing.assert_allclose(heis_mul(p, heis_inv(p)), [0, 0, 0], atol=1e-15)

    def test_associativity_on_random_triples(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            a, b, c = rng.normal(size=(3, 3))
            np.testing.assert_allclose(heis_mul(heis_mul(a, b), c), heis_mul(a, heis_mul(b, c)),
                                       atol=1e-12)

    def test_left_invariance(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            g, p, q = rng.normal(size=(3, 3))
            assert koranyi_distance(heis_mul(g, p), heis_mul(g, q)) == pytest.approx(
                koranyi_distance(p, q), rel=1e-9, abs=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(-5, 5), min_size=9, max_size=9))
    def test_metric_axioms(self, xs):
        p, q, r = np.array(xs).reshape(3, 3)
        dpq, dqr, dpr = koranyi_distance(p, q), koranyi_distance(q, r), koranyi_distance(p, r)
        assert dpq >= 0
        assert dpq == pytest.approx(koranyi_distance(q, p), rel=1e-9, abs=1e-12)
        assert dpr <= dpq + dqr + 1e-9


class TestTernary:
    def test_finds_interior_minimum(self):
        x, f = ternary_minimize(lambda s: (s - 0.3) ** 2 + 1.0, np.array([-2.0]), np.array([2.0]))
        assert x[0] == pytest.approx(0.3, abs=1e-7)
        assert f[0] == pytest.approx(1.0, abs=1e-12)

    def test_divergence_when_minimum_is_outside_bracket(self):
        with pytest.raises(FiberDivergenceError):
            ternary_minimize(lambda s: s, np.array([0.0]), np.array([1.0]))


class TestFiberDistance:
    def test_linear_projection(self):
        model = make_linear_projection_model(2, 1, 2, np.array([[5.0]]))
        assert fiber_distance(model, (3, 4), 5) == 2.0

    def test_circle(self):
        model = CircleModel(np.array([[0.2], [0.9]]))
        assert fiber_distance(model, [0.2], 0.9) == pytest.approx(0.3, abs=1e-15)

    def test_heisenberg_unit(self):
        model = make_heisenberg_model(np.array([[0.0, 0.0]]))
        assert fiber_distance(model, (1, 0, 0), (0, 0)) == pytest.approx(1.0, abs=1e-8)

    def test_heisenberg_own_fiber_is_zero(self):
        model = make_heisenberg_model(np.array([[0.4, -0.1]]))
        assert fiber_distance(model, (0.4, -0.1, 2.5), (0.4, -0.1)) == pytest.approx(0, abs=1e-8)

    def test_unknown_base_point(self):
        model = make_linear_projection_model(2, 1, 2, np.array([[5.0]]))
        with pytest.raises(UnknownBasePoint):
            fiber_distance(model, (3, 4), 6)

    def test_dominated_by_members(self):
        model = make_linear_projection_model(3, 1, 1, GridSpec(((0, 1, 0.25), (0, 1, 0.25))))
        rng = np.random.default_rng(0)
        phi = Section(model, rng.normal(size=model.m))
        for i, j in itertools.product(range(model.m), repeat=2):
            assert model.fiber_dist(phi.values[i], model.base[j]) <= \
                model.dist(phi.values[i], phi.values[j]) + 1e-15
        for i in range(model.m):
            assert model.fiber_dist(phi.values[i], model.base[i]) == 0.0

    def test_heisenberg_matches_closed_form(self):
        rng = np.random.default_rng(11)
        base = rng.uniform(-1, 1, size=(6, 2))
        tern = make_heisenberg_model(base)
        exact = make_heisenberg_model(base, oracle="closed-form")
        pts = rng.normal(size=(20, 3))
        for y in base:
            np.testing.assert_allclose(tern.fiber_dist(pts, y[None, :]),
                                       exact.fiber_dist(pts, y[None, :]), atol=1e-7)


class TestFiberRatioBound:
    def test_two_point_grid(self):
        model = make_linear_projection_model(2, 1, 2, np.array([[0.0], [1.0]]))
        assert fiber_ratio_bound(Section.canonical(model))[0] == 1.0

    def test_three_point_grid_brute_force(self):
        model = make_linear_projection_model(2, 1, 2, np.array([[0.0], [1.0], [2.0]]))
        phi = Section.canonical(model)
        best = 0.0
        for z1, z2, y in itertools.product(range(3), repeat=3):
            den = fiber_distance(model, phi(z2), y)
            if den > 0:
                best = max(best, fiber_distance(model, phi(z1), y) / den)
        assert best == 2.0
        assert fiber_ratio_bound(phi)[0] == best

    def test_single_point_undefined(self):
        model = make_linear_projection_model(2, 1, 2, np.array([[0.0]]))
        with pytest.raises(RatioUndefined):
            fiber_ratio_bound(Section.canonical(model))
