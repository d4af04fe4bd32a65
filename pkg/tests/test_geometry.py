"""Core geometry predicates: quasi-inner product, sampled inequality
checkers, convex projection, asymptotic-center estimation."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hadamard_means import (
    ConvexSetSpec,
    EuclideanSpace,
    SpaceMismatchError,
    check_cat0_sample,
    check_cauchy_schwarz_sample,
    check_four_point_sample,
    check_quasi_inner_identities,
    estimate_asymptotic_center,
    project_convex,
    quasi_inner,
    sample_in_set,
    set_contains,
)

N_SAMPLES = 2000  # module-scale sampling; the acceptance suite runs 10^4


class TestQuasiInner:
    def test_collapses_when_first_pair_degenerate(self, shipped_spaces):
        rng = np.random.default_rng(3)
        for space in shipped_spaces:
            a = space.sample(rng)
            c, d = space.sample(rng), space.sample(rng)
            assert quasi_inner(space, a, a, c, d) == pytest.approx(0.0, abs=1e-12)

    def test_euclidean_matches_dot_product(self, euclid2):
        p = euclid2.point
        assert quasi_inner(euclid2, p((0, 0)), p((1, 0)), p((0, 0)), p((0, 1))) == pytest.approx(0.0, abs=1e-12)
        assert quasi_inner(euclid2, p((0, 0)), p((1, 2)), p((0, 0)), p((1, 2))) == pytest.approx(5.0, abs=1e-10)

    def test_euclidean_dot_product_random(self, euclid2):
        rng = np.random.default_rng(11)
        for _ in range(200):
            a, b, c, d = rng.standard_normal((4, 2))
            got = quasi_inner(euclid2, *(euclid2.point(u) for u in (a, b, c, d)))
            assert got == pytest.approx(float((b - a) @ (d - c)), abs=1e-10)

    def test_rejects_mixed_spaces(self, euclid2, river):
        a = euclid2.point((0, 0))
        b = river.point((1, 1))
        with pytest.raises(SpaceMismatchError):
            quasi_inner(euclid2, a, b, a, a)

    def test_identities_all_spaces(self, shipped_spaces):
        for space in shipped_spaces:
            rep = check_quasi_inner_identities(space, rng_seed=5, n_samples=N_SAMPLES)
            assert rep.passed, rep.summary()


class TestInequalityCheckers:
    def test_cat0_holds_on_shipped_spaces(self, euclid3, shipped_spaces):
        for space in (*shipped_spaces, euclid3):
            rep = check_cat0_sample(space, rng_seed=7, n_samples=N_SAMPLES, tol=1e-10)
            assert rep.passed, rep.summary()

    def test_cat0_flags_the_circle_control(self, circle):
        rep = check_cat0_sample(circle, rng_seed=7, n_samples=N_SAMPLES)
        assert not rep.passed
        assert rep.worst_violation > 0.1
        assert rep.witness is not None and "t" in rep.witness

    def test_cauchy_schwarz_holds(self, shipped_spaces):
        for space in shipped_spaces:
            rep = check_cauchy_schwarz_sample(space, rng_seed=9, n_samples=N_SAMPLES)
            assert rep.passed, rep.summary()

    def test_cauchy_schwarz_equality_cases(self, euclid2):
        p = euclid2.point
        a, c, d = p((1, 1)), p((0, 2)), p((3, -1))
        assert quasi_inner(euclid2, a, a, c, d) <= euclid2.distance(a, a) * euclid2.distance(c, d) + 1e-12
        assert quasi_inner(euclid2, c, d, a, a) <= 1e-12

    def test_four_point_condition_holds(self, shipped_spaces):
        for space in shipped_spaces:
            rep = check_four_point_sample(space, rng_seed=13, n_samples=N_SAMPLES)
            assert rep.samples_tested == N_SAMPLES
            assert rep.passed, rep.summary()

    def test_four_point_degenerate_equal_anchors(self, euclid2):
        # with p = q every membership holds with equality
        rng = np.random.default_rng(1)
        x, y = euclid2.sample(rng), euclid2.sample(rng)
        p = euclid2.sample(rng)
        for t in np.linspace(0, 1, 9):
            m = euclid2.geodesic_point(x, y, float(t))
            assert euclid2.distance(p, m) <= euclid2.distance(m, p) + 1e-12

    def test_checker_rejects_empty_sampling(self, euclid2):
        with pytest.raises(ValueError):
            check_cat0_sample(euclid2, n_samples=0)
        with pytest.raises(ValueError):
            check_four_point_sample(euclid2, t_grid=1)


class TestProjection:
    def test_segment_projection_euclid(self, euclid2):
        seg = ConvexSetSpec.segment(euclid2.point((0, 0)), euclid2.point((2, 0)))
        got = project_convex(euclid2, seg, euclid2.point((1, 5)))
        assert got.coords == pytest.approx((1.0, 0.0), abs=1e-9)

    def test_axis_projection_river(self, river):
        got = project_convex(river, ConvexSetSpec.x_axis(), river.point((3, 2)))
        assert got.coords == pytest.approx((3.0, 0.0), abs=1e-12)

    def test_point_already_in_set(self, shipped_spaces):
        rng = np.random.default_rng(2)
        for space in shipped_spaces:
            seg = ConvexSetSpec.segment(space.sample(rng), space.sample(rng))
            x = project_convex(space, seg, space.sample(rng))
            again = project_convex(space, seg, x)
            assert space.distance(x, again) <= 1e-8

    @pytest.mark.parametrize("kind", ["singleton", "segment", "axis"])
    def test_projection_inequality_on_members(self, shipped_spaces, kind):
        # d(x, Px)^2 + d(Px, y)^2 <= d(x, y)^2 for y in the set
        rng = np.random.default_rng(4)
        for space in shipped_spaces:
            if kind == "singleton":
                spec = ConvexSetSpec.singleton(space.sample(rng))
            elif kind == "segment":
                spec = ConvexSetSpec.segment(space.sample(rng), space.sample(rng))
            else:
                spec = ConvexSetSpec.x_axis()
            for _ in range(8):
                x = space.sample(rng)
                px = project_convex(space, spec, x)
                assert set_contains(space, spec, px, tol=1e-7)
                for y in sample_in_set(space, spec, rng, 8):
                    lhs = space.distance(x, px) ** 2 + space.distance(px, y) ** 2
                    assert lhs <= space.distance(x, y) ** 2 + 1e-9

    def test_halfspace_projection_euclid(self, euclid2):
        spec = ConvexSetSpec.halfspace(euclid2.point((0, 0)), euclid2.point((2, 0)))
        inside = project_convex(euclid2, spec, euclid2.point((-1, 3)))
        assert inside.coords == pytest.approx((-1.0, 3.0))
        out = project_convex(euclid2, spec, euclid2.point((2, 1)))
        assert out.coords == pytest.approx((1.0, 1.0), abs=1e-12)
        assert set_contains(euclid2, spec, out, tol=1e-9)

    def test_projection_nonexpansive_sampled(self, shipped_spaces):
        rng = np.random.default_rng(6)
        for space in shipped_spaces:
            spec = ConvexSetSpec.segment(space.sample(rng), space.sample(rng))
            for _ in range(64):
                x, y = space.sample(rng), space.sample(rng)
                px = project_convex(space, spec, x)
                py = project_convex(space, spec, y)
                assert space.distance(px, py) <= space.distance(x, y) + 1e-9

    def test_river_box_projector(self, river):
        spec = ConvexSetSpec.river_box(-1.0, 1.0, 0.0, 0.0)  # spine interval
        got = project_convex(river, spec, river.point((3, 2)))
        assert got.coords == pytest.approx((1.0, 0.0))
        got = project_convex(river, spec, river.point((0.5, -4)))
        assert got.coords == pytest.approx((0.5, 0.0))

    def test_river_box_requires_spine_contact(self):
        with pytest.raises(ValueError):
            ConvexSetSpec.river_box(-1.0, 1.0, 0.5, 2.0)
        ConvexSetSpec.river_box(2.0, 2.0, 0.5, 2.0)  # single leg is fine


class TestAsymptoticCenter:
    def test_single_point_window(self, shipped_spaces):
        rng = np.random.default_rng(8)
        for space in shipped_spaces:
            p = space.sample(rng)
            c, r = estimate_asymptotic_center(space, [p])
            assert space.distance(c, p) <= 1e-12 and r == 0.0

    def test_two_point_euclid(self, euclid2):
        window = [euclid2.point((-1, 0)), euclid2.point((1, 0))]
        c, r = estimate_asymptotic_center(euclid2, window)
        assert c.coords == pytest.approx((0.0, 0.0), abs=1e-7)
        assert r == pytest.approx(1.0, abs=1e-7)

    def test_two_point_river(self, river):
        window = [river.point((-2, 1)), river.point((2, 1))]
        c, r = estimate_asymptotic_center(river, window)
        assert c.coords == pytest.approx((0.0, 0.0), abs=1e-7)
        assert r == pytest.approx(3.0, abs=1e-7)

    def test_escapes_tied_pair_stall(self, euclid2):
        # at (0, 0.1) both wide anchors tie; descent must still reach (0, 0)
        window = [euclid2.point((-1, 0)), euclid2.point((1, 0)), euclid2.point((0, 0.2))]
        c, r = estimate_asymptotic_center(euclid2, window)
        assert r == pytest.approx(1.0, abs=1e-6)
        assert abs(c.coords[1]) <= 1e-5


class TestGeodesicConsistency:
    @given(t=st.floats(0, 1), s=st.floats(0, 1))
    @settings(max_examples=60, deadline=None)
    def test_parameter_difference_scales_distance_euclid(self, t, s):
        space = EuclideanSpace(2)
        a, b = space.point((0.5, -2.0)), space.point((3.0, 1.0))
        pt, ps = space.geodesic_point(a, b, t), space.geodesic_point(a, b, s)
        assert space.distance(pt, ps) == pytest.approx(
            abs(t - s) * space.distance(a, b), abs=1e-9)

    def test_parameter_difference_all_spaces(self, shipped_spaces):
        rng = np.random.default_rng(10)
        for space in shipped_spaces:
            for _ in range(60):
                a, b = space.sample(rng), space.sample(rng)
                t, s = rng.uniform(size=2)
                pt = space.geodesic_point(a, b, float(t))
                ps = space.geodesic_point(a, b, float(s))
                dab = space.distance(a, b)
                assert space.distance(pt, ps) == pytest.approx(
                    abs(t - s) * dab, abs=1e-9 * max(1.0, dab))

    def test_parameter_out_of_range(self, euclid2):
        a, b = euclid2.point((0, 0)), euclid2.point((1, 0))
        with pytest.raises(ValueError):
            euclid2.geodesic_point(a, b, 1.5)
        with pytest.raises(ValueError):
            euclid2.geodesic_point(a, b, -0.1)
