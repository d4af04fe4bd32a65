"""Orbits, mean sequences, diagnostics and verdicts for the discrete engine."""

import cmath
import math

import numpy as np
import pytest

from hadamard_means import (
    ConvexSetSpec,
    FixedSetUnknownError,
    FrechetProblem,
    PiecewiseLinear,
    apply,
    custom_map,
    generate_orbit,
    geometric_schedule,
    halfspace_membership_check,
    identity_map,
    karcher_mean,
    mean_sequence,
    projection_trace,
    river_product_map,
    rotation_map,
    verdict,
)
from oracles import river_grid_mean

HALVING = PiecewiseLinear(((-5.0, -2.5), (5.0, 2.5)))
IDENTITY_PL = PiecewiseLinear(((-5.0, -5.0), (5.0, 5.0)))


def rotation_mean_magnitude(n: int, theta: float = 1.0) -> float:
    """Direct complex-arithmetic mean of the first n unit rotation iterates."""
    total = sum(cmath.exp(1j * theta * j) for j in range(n))
    return abs(total) / n


class TestGenerateOrbit:
    def test_identity_orbit_constant(self, euclid2):
        orbit = generate_orbit(identity_map(euclid2), euclid2.point((1, 2)), 5)
        assert np.allclose(orbit.coords, [[1, 2]] * 6)

    def test_quarter_turn_orbit(self, euclid2):
        rot = rotation_map(euclid2, math.pi / 2)
        orbit = generate_orbit(rot, euclid2.point((1, 0)), 4)
        want = [(1, 0), (0, 1), (-1, 0), (0, -1), (1, 0)]
        assert np.allclose(orbit.coords, want, atol=1e-12)

    def test_river_halving_orbit(self, river):
        T = river_product_map(HALVING, HALVING)
        orbit = generate_orbit(T, river.point((2, 2)), 2)
        assert np.allclose(orbit.coords, [(2, 2), (1, 1), (0.5, 0.5)])

    def test_replay_consistency(self, river):
        T = river_product_map(HALVING, HALVING)
        orbit = generate_orbit(T, river.point((2, 2)), 40)
        for i in range(orbit.horizon):
            step = apply(T, orbit.point(i))
            assert river.distance(step, orbit.point(i + 1)) <= 1e-12

    def test_boundedness_tracked_against_fixed_point(self, euclid2):
        rot = rotation_map(euclid2, 1.0)
        orbit = generate_orbit(rot, euclid2.point((1, 0)), 50)
        assert orbit.fixed_distances is not None
        assert orbit.boundedness_slack() <= 1e-9

    def test_horizon_validation(self, euclid2):
        with pytest.raises(ValueError):
            generate_orbit(identity_map(euclid2), euclid2.point((0, 0)), 0)

    def test_orbit_excursion_raises(self, disk):
        import hadamard_means as hm
        pushy = custom_map(disk, lambda u: u * 1.5, "expander")
        with pytest.raises(hm.MembershipError):
            generate_orbit(pushy, disk.point((0.5, 0)), 10)


class TestMeanSequence:
    def test_constant_orbit_means_are_start(self, euclid2):
        orbit = generate_orbit(identity_map(euclid2), euclid2.point((1, 2)), 16)
        trace, diag = mean_sequence(orbit, (1, 2, 4, 8), k_list=(1,))
        for m in trace.means:
            assert m.coords == pytest.approx((1.0, 2.0), abs=1e-12)
        assert all(r.residual <= 1e-12 for r in diag.records)

    def test_rotation_mean_matches_complex_sum(self, euclid2):
        rot = rotation_map(euclid2, 1.0)
        orbit = generate_orbit(rot, euclid2.point((1, 0)), 1000)
        trace, _ = mean_sequence(orbit, (100, 500, 1000), k_list=(1,))
        for n, m in zip(trace.schedule, trace.means):
            assert np.hypot(*m.coords) == pytest.approx(
                rotation_mean_magnitude(n), abs=1e-12)
            assert np.hypot(*m.coords) <= 2.0857 / n + 1e-6

    def test_river_halving_means_track_grid_oracle(self, river):
        T = river_product_map(HALVING, HALVING)
        orbit = generate_orbit(T, river.point((2, 2)), 24)
        trace, _ = mean_sequence(orbit, (4, 8, 16), k_list=(1,))
        for n, m in zip(trace.schedule, trace.means):
            prob = FrechetProblem(river, coords=orbit.coords[:n])
            oracle = river_grid_mean(prob.coords, prob.weights, res=1e-4)
            assert river.distance(m, river.point(oracle)) <= 1e-3

    def test_all_means_certified(self, river):
        T = river_product_map(HALVING, HALVING)
        orbit = generate_orbit(T, river.point((2, 2)), 128)
        trace, _ = mean_sequence(orbit, (8, 32, 120), k_list=(1, 8))
        assert trace.worst_certificate_gap() >= -1e-6
        assert trace.worst_distance_slack() >= -1e-6
        for k in (1, 8):
            assert len(trace.shifted_means[k]) == 3

    def test_schedule_validation(self, euclid2):
        orbit = generate_orbit(rotation_map(euclid2, 1.0), euclid2.point((1, 0)), 32)
        with pytest.raises(ValueError):
            mean_sequence(orbit, (8, 4))
        with pytest.raises(ValueError):
            mean_sequence(orbit, (8, 64))
        with pytest.raises(ValueError):
            mean_sequence(orbit, (8, 32), k_list=(2,))  # 2 + 32 > 33
        with pytest.raises(ValueError):
            mean_sequence(orbit, (8, 16), k_list=(0,))

    def test_geometric_schedule_respects_shifts(self):
        assert geometric_schedule(1024, (1, 8)) == (1, 2, 4, 8, 16, 32, 64, 128, 256, 512)
        assert geometric_schedule(10, ()) == (1, 2, 4, 8)

    def test_boundedness_diagnostic_within_start_distance(self, euclid2):
        rot = rotation_map(euclid2, 1.0)
        orbit = generate_orbit(rot, euclid2.point((1, 0)), 64)
        _, diag = mean_sequence(orbit, (4, 16, 56), k_list=(1, 8))
        assert diag.worst_bound_gap() <= 1e-6

    def test_hull_gap_exact_on_flat_and_tree_spaces(self, euclid2, river):
        for space, mapping, start in (
            (euclid2, rotation_map(euclid2, 1.0), (1, 0)),
            (river, river_product_map(HALVING, HALVING), (2, 2)),
        ):
            orbit = generate_orbit(mapping, space.point(start), 32)
            _, diag = mean_sequence(orbit, (4, 16), k_list=(1,))
            assert all(r.hull_gap == 0.0 for r in diag.records)
            assert diag.hull_cert_gap >= -1e-6

    def test_disk_run_with_hull_witness(self, disk):
        rot = rotation_map(disk, 1.0)
        orbit = generate_orbit(rot, disk.point((0.5, 0)), 64)
        trace, diag = mean_sequence(orbit, (4, 16, 56), k_list=(1,), tol=1e-6)
        assert trace.worst_certificate_gap() >= -1e-6
        assert all(r.hull_gap <= 1e-2 for r in diag.records)


class TestProjectionTrace:
    def test_rotation_projects_to_origin_everywhere(self, euclid2):
        rot = rotation_map(euclid2, 1.0)
        orbit = generate_orbit(rot, euclid2.point((1, 0)), 32)
        proj = projection_trace(orbit)
        assert np.allclose(proj.coords, 0.0, atol=1e-12)
        assert np.allclose(proj.dists, 1.0, atol=1e-12)
        assert proj.monotonicity_slack() <= 1e-12

    def test_river_vertical_halving(self, river):
        T = river_product_map(IDENTITY_PL, HALVING)
        orbit = generate_orbit(T, river.point((3, 2)), 8)
        proj = projection_trace(orbit)
        assert np.allclose(proj.coords[:, 0], 3.0)
        assert np.allclose(proj.coords[:, 1], 0.0)
        assert proj.dists[:4] == pytest.approx([2.0, 1.0, 0.5, 0.25])
        assert proj.monotonicity_slack() <= 1e-12

    def test_start_at_fixed_point_gives_zeros(self, euclid2):
        rot = rotation_map(euclid2, 1.0)
        orbit = generate_orbit(rot, euclid2.point((0, 0)), 8)
        proj = projection_trace(orbit)
        assert np.allclose(proj.dists, 0.0)

    def test_unknown_fixed_set_raises(self, euclid2):
        T = custom_map(euclid2, lambda u: 0.5 * u, "halving")
        orbit = generate_orbit(T, euclid2.point((1, 1)), 4)
        with pytest.raises(FixedSetUnknownError):
            projection_trace(orbit)


class TestHalfspaceMembership:
    def test_equal_anchors_hold_with_equality(self, euclid2):
        rot = rotation_map(euclid2, 1.0)
        orbit = generate_orbit(rot, euclid2.point((1, 0)), 32)
        p = euclid2.point((0.3, 0.3))
        rep = halfspace_membership_check(orbit, p, p)
        assert rep.worst_violation == pytest.approx(0.0, abs=1e-12)

    def test_rotation_orbit_closer_to_origin(self, euclid2):
        rot = rotation_map(euclid2, 1.0)
        orbit = generate_orbit(rot, euclid2.point((1, 0)), 100)
        rep = halfspace_membership_check(orbit, euclid2.point((0, 0)),
                                         euclid2.point((2, 0)))
        assert rep.passed

    def test_adversarial_anchor_inside_orbit_circle(self, euclid2):
        rot = rotation_map(euclid2, 1.0)
        orbit = generate_orbit(rot, euclid2.point((1, 0)), 100)
        rep = halfspace_membership_check(orbit, euclid2.point((0, 0)),
                                         euclid2.point((0.5, 0)))
        assert not rep.passed
        assert rep.witness is not None and "index" in rep.witness

    def test_shifted_means_checked_when_supplied(self, euclid2):
        rot = rotation_map(euclid2, 1.0)
        orbit = generate_orbit(rot, euclid2.point((1, 0)), 64)
        trace, _ = mean_sequence(orbit, (8, 32), k_list=(1,))
        rep = halfspace_membership_check(orbit, euclid2.point((0, 0)),
                                         euclid2.point((3, 0)), k0=0,
                                         mean_points=trace.shifted_means[1])
        assert rep.passed
        assert rep.samples_tested == 65 + 2


class TestVerdict:
    def test_identity_converges_immediately(self, euclid2):
        orbit = generate_orbit(identity_map(euclid2), euclid2.point((1, 2)), 4)
        trace, _ = mean_sequence(orbit, (1, 2), k_list=(1,))
        vd = verdict(trace, None)
        assert vd.converged
        assert vd.limit_candidate.coords == pytest.approx((1.0, 2.0))

    def test_rotation_converges_to_origin(self, euclid2):
        rot = rotation_map(euclid2, 1.0)
        orbit = generate_orbit(rot, euclid2.point((1, 0)), 4096)
        trace, _ = mean_sequence(orbit, (512, 2048, 4096), k_list=(1,))
        proj = projection_trace(orbit)
        vd = verdict(trace, proj, tol_verdict=1e-2)
        assert vd.converged
        assert vd.limit_candidate.coords == pytest.approx((0.0, 0.0), abs=1e-12)
        assert vd.agreement == pytest.approx(rotation_mean_magnitude(4096), abs=1e-12)

    def test_short_horizon_is_inconclusive(self, euclid2):
        rot = rotation_map(euclid2, 1.0)
        orbit = generate_orbit(rot, euclid2.point((1, 0)), 10)
        trace, _ = mean_sequence(orbit, (5, 10), k_list=(1,))
        proj = projection_trace(orbit)
        vd = verdict(trace, proj, tol_verdict=1e-2)
        assert not vd.converged
        assert vd.status == "inconclusive"

    def test_converged_limit_nearly_fixed(self, river):
        T = river_product_map(HALVING, HALVING)
        orbit = generate_orbit(T, river.point((2, 2)), 512)
        trace, _ = mean_sequence(orbit, (64, 256, 500), k_list=(1,))
        proj = projection_trace(orbit)
        vd = verdict(trace, proj, tol_verdict=1e-1)
        assert vd.converged
        assert river.distance(vd.limit_candidate,
                              apply(T, vd.limit_candidate)) <= vd.tol_verdict


class TestTrends:
    def test_shift_gaps_decrease_on_river_example(self, river):
        T = river_product_map(HALVING, HALVING)
        orbit = generate_orbit(T, river.point((2, 2)), 264)
        _, diag = mean_sequence(orbit, (32, 64, 128, 256), k_list=(1, 8))
        for k in (1, 8):
            series = diag.shift_gap_series(k)
            assert series[-1] <= series[0]

    def test_residual_trend_largest_vs_smallest(self, river):
        T = river_product_map(HALVING, HALVING)
        orbit = generate_orbit(T, river.point((2, 2)), 264)
        _, diag = mean_sequence(orbit, (32, 64, 128, 256), k_list=(1,))
        res = diag.residuals()
        assert res[-1] <= res[0]
