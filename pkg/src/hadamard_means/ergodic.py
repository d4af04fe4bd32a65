"""Orbit generation, ergodic mean sequences and convergence diagnostics.

For a nonexpansive map T and a start x the engine materializes the orbit
x, Tx, ..., T^N x, computes the Karcher means sigma_n of the first n orbit
points (and shifted means sigma_n^k over indices k..k+n-1) along a schedule,
evaluates the standard diagnostics (residual under T, shift gaps, distance
of orbit points to their fixed-set projections, convex-hull membership and
boundedness), and renders a convergence verdict.

Convergence is judged by a strong surrogate: the limit of the projected
orbit and the last computed mean must agree within tolerance, and the last
mean must be nearly fixed by T.  True Delta-convergence is not finitely
testable, so this surrogate is what reports state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .frechet import FrechetProblem, MeanCertificate, incremental_prox_mean, karcher_mean
from .geometry import MembershipError, Point, Space, ViolationReport
from .mappings import MappingSpec, project_fixed_set, residual
from .spaces import EuclideanSpace, RiverPlane


@dataclass(frozen=True, eq=False)
class OrbitTrace:
    """The finite orbit x, Tx, ..., T^N x with bookkeeping."""

    mapping: MappingSpec
    start: Point
    coords: np.ndarray
    fixed_reference: Point | None = None
    fixed_distances: np.ndarray | None = None

    @property
    def space(self) -> Space:
        return self.mapping.space

    @property
    def horizon(self) -> int:
        return len(self.coords) - 1

    def point(self, i: int) -> Point:
        return self.space.point(self.coords[i])

    def boundedness_slack(self) -> float:
        """Largest one-step increase of d(T^n x, p) for the reference fixed
        point p; nonpositive for a truly nonexpansive map."""
        if self.fixed_distances is None:
            return 0.0
        return float(np.max(np.diff(self.fixed_distances), initial=0.0))


def generate_orbit(mapping: MappingSpec, start: Point, N: int) -> OrbitTrace:
    """Iterate the map N times from start, recording every point."""
    if N < 1:
        raise ValueError("orbit horizon must be >= 1")
    space = mapping.space
    (u,) = space._require(start)
    coords = np.empty((N + 1, space.dim))
    coords[0] = u
    for i in range(N):
        u = np.asarray(mapping.fn(u), dtype=float)
        coords[i + 1] = u
    for i, row in enumerate(coords):
        if not space._contains(row):
            raise MembershipError(
                f"orbit left {space.space_id} at step {i}: {tuple(row)}")
    fixed_ref = None
    fixed_dists = None
    if mapping.fixed_set is not None:
        fixed_ref = project_fixed_set(mapping, start)
        fixed_dists = space._dist_many(fixed_ref.as_array(), coords)
    return OrbitTrace(mapping, start, coords, fixed_ref, fixed_dists)


@dataclass(frozen=True, eq=False)
class MeanTrace:
    """Karcher means (and shifted means) along a schedule, all certified."""

    orbit: OrbitTrace
    schedule: tuple[int, ...]
    means: tuple[Point, ...]
    certificates: tuple[MeanCertificate, ...]
    shifted_means: dict[int, tuple[Point, ...]]
    shifted_certificates: dict[int, tuple[MeanCertificate, ...]]
    frechet_values: tuple[float, ...]

    @property
    def k_list(self) -> tuple[int, ...]:
        return tuple(sorted(self.shifted_means))

    def worst_certificate_gap(self) -> float:
        gaps = [c.worst_gap for c in self.certificates]
        for certs in self.shifted_certificates.values():
            gaps.extend(c.worst_gap for c in certs)
        return min(gaps)

    def worst_distance_slack(self) -> float:
        slacks = [c.worst_distance_slack for c in self.certificates]
        for certs in self.shifted_certificates.values():
            slacks.extend(c.worst_distance_slack for c in certs)
        return min(slacks)


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Per-schedule-entry diagnostics."""

    n: int
    residual: float
    shift_gaps: dict[int, float]
    proj_dist: float | None
    proj_point: Point | None
    hull_gap: float
    bound_gap: float


@dataclass(frozen=True, eq=False)
class DiagnosticsTrace:
    records: tuple[DiagnosticsRecord, ...]
    hull_cert_gap: float

    def residuals(self) -> list[float]:
        return [r.residual for r in self.records]

    def shift_gap_series(self, k: int) -> list[float]:
        return [r.shift_gaps[k] for r in self.records]

    def worst_bound_gap(self) -> float:
        return max(r.bound_gap for r in self.records)


def geometric_schedule(N: int, k_list: Sequence[int] = ()) -> tuple[int, ...]:
    """Powers of two up to the largest n every configured shift can serve."""
    limit = N + 1 - (max(k_list) if k_list else 0)
    limit = min(limit, N)
    out = []
    n = 1
    while n <= limit:
        out.append(n)
        n *= 2
    if not out:
        raise ValueError("horizon too short for the requested shifts")
    return tuple(out)


def _hull_cloud(space: Space, anchors: np.ndarray, rng: np.random.Generator,
                size: int, depth: int = 12) -> np.ndarray:
    """Random iterated geodesic combinations of the anchors: a one-sided
    finite stand-in for the closed convex hull."""
    idx = rng.integers(0, len(anchors), size=size)
    pool = anchors[idx].copy()
    for _ in range(depth):
        picks = rng.integers(0, len(anchors), size=size)
        ts = rng.uniform(0.0, 1.0, size=size)
        for j in range(size):
            pool[j] = space._geo(pool[j], anchors[picks[j]], float(ts[j]))
    return pool


def mean_sequence(orbit: OrbitTrace, schedule: Sequence[int],
                  k_list: Sequence[int] = (1, 8), tol: float = 1e-7,
                  rng_seed: int = 0,
                  hull_probes: int = 64) -> tuple[MeanTrace, DiagnosticsTrace]:
    """Certified means sigma_n and sigma_n^k along the schedule plus diagnostics.

    Every schedule entry n must satisfy 1 <= n <= N, and every configured
    shift k must satisfy k + max(n) <= N + 1.  Solves warm-start from the
    previous mean.
    """
    space = orbit.space
    N = orbit.horizon
    sched = tuple(int(n) for n in schedule)
    if not sched or any(n0 >= n1 for n0, n1 in zip(sched, sched[1:])):
        raise ValueError("schedule must be strictly increasing and nonempty")
    if sched[0] < 1 or sched[-1] > N:
        raise ValueError(f"schedule must lie within [1, {N}]")
    ks = tuple(int(k) for k in k_list)
    if any(k < 1 for k in ks):
        raise ValueError("shifts must be >= 1")
    for k in ks:
        if k + sched[-1] > N + 1:
            raise ValueError(
                f"shift k={k} with n={sched[-1]} needs orbit index "
                f"{k + sched[-1] - 1} > horizon {N}")

    exact_hull = isinstance(space, (EuclideanSpace, RiverPlane))
    rng = np.random.default_rng(rng_seed)

    means: list[Point] = []
    certs: list[MeanCertificate] = []
    fvals: list[float] = []
    shifted: dict[int, list[Point]] = {k: [] for k in ks}
    shifted_certs: dict[int, list[MeanCertificate]] = {k: [] for k in ks}

    # probes of the analytic fixed set for the boundedness diagnostic
    fixed_probe_coords = None
    if orbit.mapping.fixed_set is not None:
        probes = [orbit.fixed_reference]
        from .geometry import sample_in_set
        probes.extend(sample_in_set(space, orbit.mapping.fixed_set, rng, 8))
        fixed_probe_coords = np.array([p.as_array() for p in probes])

    records: list[DiagnosticsRecord] = []
    hull_cert_gap = math.inf
    warm: Point | None = None
    warm_shift: dict[int, Point | None] = {k: None for k in ks}
    for n in sched:
        prob = FrechetProblem(space, coords=orbit.coords[:n])
        seed_n = rng_seed + 7919 * n
        sigma, cert = karcher_mean(prob, tol, x0=warm, cert_seed=seed_n)
        warm = sigma
        means.append(sigma)
        certs.append(cert)
        fvals.append(cert.functional_value)

        gaps: dict[int, float] = {}
        bound_gap = -math.inf
        entry_points = [(0, sigma, prob)]
        for k in ks:
            prob_k = FrechetProblem(space, coords=orbit.coords[k:k + n])
            sig_k, cert_k = karcher_mean(prob_k, tol, x0=warm_shift[k] or sigma,
                                         cert_seed=seed_n + 104729 * k)
            warm_shift[k] = sig_k
            shifted[k].append(sig_k)
            shifted_certs[k].append(cert_k)
            gaps[k] = space.distance(sigma, sig_k)
            entry_points.append((k, sig_k, prob_k))

        if fixed_probe_coords is not None:
            d_start = space._dist_many(orbit.coords[0], fixed_probe_coords)
            for _, pt, _ in entry_points:
                d_mean = space._dist_many(pt.as_array(), fixed_probe_coords)
                bound_gap = max(bound_gap, float(np.max(d_mean - d_start)))
        else:
            bound_gap = 0.0

        # convex-hull diagnostics for the largest shifted problem at this n
        k_h, pt_h, prob_h = entry_points[-1]
        cloud = _hull_cloud(space, prob_h.coords, rng, hull_probes)
        fc = cert.functional_value if k_h == 0 else shifted_certs[k_h][-1].functional_value
        for row in cloud:
            d_anchor = space._dist_many(row, prob_h.coords)
            fy = float(prob_h.weights @ (d_anchor * d_anchor))
            gap = fy - fc - space._dist(pt_h.as_array(), row) ** 2
            hull_cert_gap = min(hull_cert_gap, gap)
        if exact_hull:
            hull_gap = 0.0  # solver output is a geodesic combination of anchors
        else:
            sweeps = max(200, min(3000, 200_000 // max(1, prob_h.n)))
            witness, _ = incremental_prox_mean(prob_h, tol=0.0,
                                               max_sweeps=sweeps, settle=False)
            hull_gap = min(float(np.min(space._dist_many(pt_h.as_array(), cloud))),
                           space._dist(pt_h.as_array(), witness))

        proj_dist = None
        proj_point = None
        if orbit.mapping.fixed_set is not None:
            tn = orbit.point(n)
            proj_point = project_fixed_set(orbit.mapping, tn)
            proj_dist = space.distance(proj_point, tn)

        records.append(DiagnosticsRecord(
            n=n,
            residual=residual(orbit.mapping, sigma),
            shift_gaps=gaps,
            proj_dist=proj_dist,
            proj_point=proj_point,
            hull_gap=hull_gap,
            bound_gap=bound_gap,
        ))

    trace = MeanTrace(orbit, sched, tuple(means), tuple(certs),
                      {k: tuple(v) for k, v in shifted.items()},
                      {k: tuple(v) for k, v in shifted_certs.items()},
                      tuple(fvals))
    return trace, DiagnosticsTrace(tuple(records), hull_cert_gap)


@dataclass(frozen=True, eq=False)
class ProjectionTrace:
    """Projected orbit P T^n x with the distances d(P T^n x, T^n x)."""

    coords: np.ndarray
    dists: np.ndarray
    space: Space

    def final_point(self) -> Point:
        return self.space.point(self.coords[-1])

    def monotonicity_slack(self) -> float:
        """Largest one-step increase; theory says the sequence never rises."""
        return float(np.max(np.diff(self.dists), initial=0.0))


def projection_trace(orbit: OrbitTrace) -> ProjectionTrace:
    """Project every orbit point onto the fixed set.

    The distance sequence is nonincreasing for a nonexpansive map, and the
    projected points converge to the limit the mean sequence should match.
    """
    space = orbit.space
    n = len(orbit.coords)
    P = np.empty_like(orbit.coords)
    d = np.empty(n)
    for i in range(n):
        p = project_fixed_set(orbit.mapping, orbit.point(i))
        P[i] = p.as_array()
        d[i] = space._dist(P[i], orbit.coords[i])
    return ProjectionTrace(P, d, space)


def halfspace_membership_check(orbit: OrbitTrace, p: Point, v: Point,
                               k0: int = 0,
                               mean_points: Sequence[Point] = (),
                               tol: float = 1e-9) -> ViolationReport:
    """Check that the orbit tail (and optional mean points) stay in the
    half-space {z : d(p, z) <= d(z, v)}."""
    space = orbit.space
    pu, vu = space._require(p, v)
    if not 0 <= k0 <= orbit.horizon:
        raise ValueError("k0 must be within the orbit horizon")
    worst = -math.inf
    witness = None
    tested = 0
    for k in range(k0, orbit.horizon + 1):
        z = orbit.coords[k]
        excess = space._dist(pu, z) - space._dist(z, vu)
        tested += 1
        if excess > worst:
            worst = excess
            if excess > tol:
                witness = {"index": k, "point": tuple(float(v) for v in z)}
    for j, mp in enumerate(mean_points):
        (z,) = space._require(mp)
        excess = space._dist(pu, z) - space._dist(z, vu)
        tested += 1
        if excess > worst:
            worst = excess
            if excess > tol:
                witness = {"mean_index": j, "point": tuple(float(v) for v in z)}
    return ViolationReport("halfspace_membership", tested, worst, tol, witness)


@dataclass(frozen=True)
class Verdict:
    """Convergence verdict for one experiment.

    ``agreement`` is the distance between the final mean and the projected
    orbit's limit estimate (or between the last two means when no analytic
    fixed set is available).  ``converged`` requires both the agreement and
    the final mean's residual under the map to sit below tol_verdict.
    """

    limit_candidate: Point
    agreement: float
    status: str
    tol_verdict: float
    final_residual: float

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def verdict(mean_trace: MeanTrace, proj: ProjectionTrace | None,
            tol_verdict: float = 1e-2) -> Verdict:
    """Judge strong convergence of the mean sequence."""
    space = mean_trace.orbit.space
    sigma_last = mean_trace.means[-1]
    final_residual = residual(mean_trace.orbit.mapping, sigma_last)
    if proj is not None:
        limit = proj.final_point()
        agreement = space.distance(sigma_last, limit)
    elif len(mean_trace.means) >= 2:
        limit = sigma_last
        agreement = space.distance(sigma_last, mean_trace.means[-2])
    else:
        limit = sigma_last
        agreement = 0.0
    status = ("converged"
              if agreement <= tol_verdict and final_residual <= tol_verdict
              else "inconclusive")
    return Verdict(limit, agreement, status, tol_verdict, final_residual)
