"""Contraction semigroups realized as ODE flows, with time-averaged means.

A monotone vector field A generates the flow x'(t) = -A(x(t)); its time-t
maps form a 1-parameter semigroup of nonexpansive maps whose common fixed
points are the singularities of A.  The engine integrates the flow with a
classical 4th-order one-step method (on the Poincare disk the stages live in
the tangent space through the exp/log maps, ignoring curvature transport
within a step), computes time-averaged Karcher means by composite-trapezoid
quadrature reusing the weighted mean machinery, and verifies the semigroup
axioms and the mean diagnostics by sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .ergodic import Verdict
from .frechet import FrechetProblem, MeanCertificate, karcher_mean
from .geometry import ConvexSetSpec, Point, Space, ViolationReport, project_convex
from .spaces import EuclideanSpace, PoincareDisk


class FlowInstabilityError(RuntimeError):
    """The integrated trajectory blew up (step size too large for the field)."""


class CoarseGridError(ValueError):
    """The averaging window holds fewer grid nodes than quadrature needs."""


@dataclass(frozen=True, eq=False)
class FieldSpec:
    """A single-valued vector field A with the chart velocity -A."""

    kind: str
    label: str
    space: Space
    operator: Callable[[np.ndarray], np.ndarray]
    fixed_set: ConvexSetSpec
    is_linear: bool

    def velocity(self, u: np.ndarray) -> np.ndarray:
        return -self.operator(u)


def parse_field(space: Space, text: str) -> FieldSpec:
    """Build a field from its description string.

    Accepted: ``skew2d``, ``decay`` or ``decay:<rate>`` (negative rates give
    the expansive negative control), ``grad:quadratic:<row-major entries>``
    for a symmetric positive-semidefinite matrix, ``disk-rotation`` or
    ``disk-rotation:<omega>``.
    """
    s = text.strip()
    origin = None
    if space.dim >= 1 and not isinstance(space, PoincareDisk):
        origin = space.point(tuple(0.0 for _ in range(space.dim)))
    if s == "skew2d":
        if not isinstance(space, EuclideanSpace) or space.dim != 2:
            raise ValueError("skew2d needs euclidean:2")
        J = np.array([[0.0, -1.0], [1.0, 0.0]])
        return FieldSpec("skew2d", "skew2d", space, lambda u: J @ u,
                         ConvexSetSpec.singleton(origin), True)
    if s == "decay" or s.startswith("decay:"):
        if not isinstance(space, EuclideanSpace):
            raise ValueError("decay fields need a Euclidean space")
        rate = 1.0
        if ":" in s:
            try:
                rate = float(s.split(":", 1)[1])
            except ValueError as exc:
                raise ValueError(f"bad decay rate in {text!r}") from exc
        return FieldSpec("decay", f"decay:{rate:g}", space,
                         lambda u, r=rate: r * u,
                         ConvexSetSpec.singleton(origin), True)
    if s.startswith("grad:quadratic:"):
        if not isinstance(space, EuclideanSpace):
            raise ValueError("quadratic gradient fields need a Euclidean space")
        body = s.split("grad:quadratic:", 1)[1]
        try:
            entries = [float(v) for v in body.split(",")]
        except ValueError as exc:
            raise ValueError(f"bad matrix entry in {text!r}") from exc
        d = space.dim
        if len(entries) != d * d:
            raise ValueError(f"need {d * d} matrix entries, got {len(entries)}")
        Q = np.array(entries).reshape(d, d)
        if not np.allclose(Q, Q.T, atol=1e-12):
            raise ValueError("quadratic field matrix must be symmetric")
        evals, evecs = np.linalg.eigh(Q)
        if np.any(evals < -1e-10):
            raise ValueError("quadratic field matrix must be positive semidefinite")
        null = evecs[:, np.abs(evals) <= 1e-10].T
        fixed = (ConvexSetSpec.singleton(origin) if len(null) == 0
                 else ConvexSetSpec.subspace(null))
        return FieldSpec("grad_quadratic", s, space, lambda u: Q @ u, fixed, True)
    if s == "disk-rotation" or s.startswith("disk-rotation:"):
        if not isinstance(space, PoincareDisk):
            raise ValueError("disk-rotation needs the Poincare disk")
        omega = 1.0
        if ":" in s:
            try:
                omega = float(s.split(":", 1)[1])
            except ValueError as exc:
                raise ValueError(f"bad rotation rate in {text!r}") from exc

        def op(u: np.ndarray, w=omega) -> np.ndarray:
            return np.array([-w * u[1], w * u[0]])  # i * omega * z

        return FieldSpec("disk_rotation", f"disk-rotation:{omega:g}", space, op,
                         ConvexSetSpec.singleton(space.point((0.0, 0.0))), True)
    raise ValueError(f"unknown field {text!r}")


def check_field_monotone(field: FieldSpec, rng_seed: int = 0,
                         n_samples: int = 2000,
                         tol: float = 1e-9) -> ViolationReport:
    """Sampled monotonicity of the field.

    Euclidean form <A(x)-A(y), x-y> >= 0; on the disk the analog
    <A(x), log_x y> + <A(y), log_y x> <= 0 with fields read in the
    orthonormal frame.
    """
    space = field.space
    rng = np.random.default_rng(rng_seed)
    X = space._sample_coords(rng, n_samples)
    Y = space._sample_coords(rng, n_samples)
    worst = -math.inf
    witness = None
    disk = isinstance(space, PoincareDisk)
    for i in range(n_samples):
        x, y = X[i], Y[i]
        if disk:
            lam_x = 2.0 / (1.0 - float(x @ x))
            lam_y = 2.0 / (1.0 - float(y @ y))
            lx = space._log_many(x, y[None, :])[0]
            ly = space._log_many(y, x[None, :])[0]
            v = float(lam_x * field.operator(x) @ lx + lam_y * field.operator(y) @ ly)
        else:
            v = -float((field.operator(x) - field.operator(y)) @ (x - y))
        if v > worst:
            worst = v
            if v > tol:
                witness = {"x": tuple(float(v) for v in x), "y": tuple(float(v) for v in y)}
    return ViolationReport("field_monotone", n_samples, worst, tol, witness)


@dataclass(frozen=True, eq=False)
class SemigroupSpec:
    """A field together with the integration step and scheme marker."""

    space: Space
    field: FieldSpec
    h: float = 1e-2
    integrator: str = "rk4"

    def __post_init__(self):
        if self.h <= 0.0:
            raise ValueError("step size must be positive")
        if self.integrator != "rk4":
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if self.field.space.space_id != self.space.space_id:
            raise ValueError("field and semigroup spaces differ")


@dataclass(frozen=True, eq=False)
class CurveTrace:
    """A sampled trajectory t -> S(t)x on a uniform grid (plus an optional
    final partial step when the horizon is not a step multiple)."""

    spec: SemigroupSpec
    start: Point
    times: np.ndarray
    coords: np.ndarray
    n_uniform: int  # index of the last node on the uniform grid

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def end_point(self) -> Point:
        return self.spec.space.point(self.coords[-1])

    def node_index(self, t: float) -> int:
        """Index of the uniform-grid node at time t (must be grid aligned)."""
        h = self.spec.h
        i = int(round(t / h))
        if i < 0 or i > self.n_uniform or abs(i * h - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"time {t} is not on the uniform grid (h={h})")
        return i


_GROWTH_LIMIT = 1e8


def _metric_speed(space: Space, field: FieldSpec, u: np.ndarray) -> float:
    v = float(np.linalg.norm(field.velocity(u)))
    if isinstance(space, PoincareDisk):
        v *= 2.0 / (1.0 - float(u @ u))
    return v


def _rk4_step_euclid(vel, u, h):
    k1 = vel(u)
    k2 = vel(u + 0.5 * h * k1)
    k3 = vel(u + 0.5 * h * k2)
    k4 = vel(u + h * k3)
    return u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _rk4_step_disk(space: PoincareDisk, vel, u, h):
    # stage velocities read in the orthonormal frame of the stage point and
    # parallel-transported back to the base frame (a gyration rotation)
    zu = space._c(u)

    def stage(v: complex) -> tuple[complex, complex]:
        z = space._exp_c(zu, v)
        p = space._re(z)
        w = vel(p)
        k = (2.0 / (1.0 - float(p @ p))) * complex(w[0], w[1])
        # transport from z back to zu along the connecting geodesic
        return z, k * (1.0 - zu * z.conjugate()) / (1.0 - zu.conjugate() * z)

    w1 = vel(u)
    k1 = (2.0 / (1.0 - float(u @ u))) * complex(w1[0], w1[1])
    _, k2 = stage(0.5 * h * k1)
    _, k3 = stage(0.5 * h * k2)
    _, k4 = stage(h * k3)
    z_next = space._exp_c(zu, (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
    return space._re(z_next)


def flow(spec: SemigroupSpec, start: Point, T: float) -> CurveTrace:
    """Integrate x' = -A(x) from start over [0, T]."""
    if T <= 0.0:
        raise ValueError("flow horizon must be positive")
    space = spec.space
    (u,) = space._require(start)
    h = spec.h
    n_full = int(math.floor(T / h + 1e-9))
    rem = T - n_full * h
    if rem <= 1e-12 * max(1.0, T):
        rem = 0.0
    times = [i * h for i in range(n_full + 1)]
    if rem:
        times.append(T)
    disk = isinstance(space, PoincareDisk)
    vel = spec.field.velocity
    coords = np.empty((len(times), space.dim))
    coords[0] = u
    x = u.copy()
    for i in range(1, len(times)):
        step = times[i] - times[i - 1]
        x = (_rk4_step_disk(space, vel, x, step) if disk
             else _rk4_step_euclid(vel, x, step))
        if not np.all(np.isfinite(x)) or float(np.max(np.abs(x))) > _GROWTH_LIMIT:
            raise FlowInstabilityError(
                f"trajectory blew up at t={times[i]:g} (step {h:g})")
        coords[i] = x
    return CurveTrace(spec, start, np.asarray(times), coords, n_full)


def evolve(spec: SemigroupSpec, x: Point, t: float) -> Point:
    """The semigroup map S(t) applied to one point (t = 0 is the identity)."""
    if t < 0.0:
        raise ValueError("semigroup time must be nonnegative")
    if t == 0.0:
        return x
    return flow(spec, x, t).end_point()


def continuous_mean(curve: CurveTrace, T_eval: float, s: float = 0.0,
                    tol: float = 1e-7, cert_probes: int = 256,
                    cert_seed: int = 0) -> tuple[Point, MeanCertificate]:
    """Karcher mean of the window t in [s, s + T_eval] of the trajectory.

    Realized as a weighted mean problem with composite-trapezoid weights on
    the grid nodes of the window (renormalized to sum to 1), so it reuses the
    certified mean solver.  Window ends must be grid aligned.
    """
    if T_eval <= 0.0:
        raise ValueError("averaging horizon must be positive")
    if s < 0.0:
        raise ValueError("window shift must be nonnegative")
    i0 = curve.node_index(s)
    i1 = curve.node_index(s + T_eval)
    count = i1 - i0 + 1
    if count < 8:
        raise CoarseGridError(
            f"averaging window holds {count} nodes; need at least 8")
    w = np.full(count, curve.spec.h)
    w[0] *= 0.5
    w[-1] *= 0.5
    w /= w.sum()
    problem = FrechetProblem(curve.spec.space,
                             coords=curve.coords[i0:i1 + 1], weights=w)
    return karcher_mean(problem, tol, cert_probes=cert_probes, cert_seed=cert_seed)


@dataclass(frozen=True, eq=False)
class SemigroupDiagnostics:
    """Mean trajectory diagnostics over growing horizons."""

    T_list: tuple[float, ...]
    s_list: tuple[float, ...]
    r: float
    means: tuple[Point, ...]
    certificates: tuple[MeanCertificate, ...]
    shifted_means: dict[float, tuple[Point, ...]]
    shifted_certificates: dict[float, tuple[MeanCertificate, ...]]
    residuals_r: tuple[float, ...]
    shift_gaps: dict[float, tuple[float, ...]]
    proj_dists: tuple[float, ...]

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


def semigroup_diagnostics(spec: SemigroupSpec, curve: CurveTrace,
                          T_list: Sequence[float],
                          s_list: Sequence[float] = (1.0,), r: float = 1.0,
                          tol: float = 1e-7,
                          rng_seed: int = 0) -> SemigroupDiagnostics:
    """Means over growing windows with displacement and shift-gap records.

    Per horizon T: the mean of [0, T], its displacement under S(r), the gap
    to each shifted mean over [s, s + T], and the distance from the curve
    point at time T to its fixed-set projection.
    """
    space = spec.space
    Ts = tuple(float(T) for T in T_list)
    if not Ts or any(t0 >= t1 for t0, t1 in zip(Ts, Ts[1:])):
        raise ValueError("T_list must be strictly increasing and nonempty")
    ss = tuple(float(v) for v in s_list)
    for s in ss:
        if s + Ts[-1] > curve.horizon + 1e-9:
            raise ValueError(f"shift s={s} with T={Ts[-1]} exceeds the horizon")
    means, certs, residuals, proj_dists = [], [], [], []
    shifted: dict[float, list[Point]] = {s: [] for s in ss}
    shifted_certs: dict[float, list[MeanCertificate]] = {s: [] for s in ss}
    gaps: dict[float, list[float]] = {s: [] for s in ss}
    for j, T in enumerate(Ts):
        seed = rng_seed + 1009 * (j + 1)
        sigma, cert = continuous_mean(curve, T, 0.0, tol=tol, cert_seed=seed)
        means.append(sigma)
        certs.append(cert)
        residuals.append(space.distance(sigma, evolve(spec, sigma, r)))
        for s in ss:
            sig_s, cert_s = continuous_mean(curve, T, s, tol=tol,
                                            cert_seed=seed + 31)
            shifted[s].append(sig_s)
            shifted_certs[s].append(cert_s)
            gaps[s].append(space.distance(sigma, sig_s))
        node = curve.node_index(T) if T <= spec.h * curve.n_uniform + 1e-12 else len(curve.coords) - 1
        cpt = space.point(curve.coords[node])
        ppt = project_convex(space, spec.field.fixed_set, cpt)
        proj_dists.append(space.distance(cpt, ppt))
    return SemigroupDiagnostics(
        Ts, ss, float(r), tuple(means), tuple(certs),
        {s: tuple(v) for s, v in shifted.items()},
        {s: tuple(v) for s, v in shifted_certs.items()},
        tuple(residuals), {s: tuple(v) for s, v in gaps.items()},
        tuple(proj_dists))


def check_semigroup_axioms(spec: SemigroupSpec, rng_seed: int = 0,
                           n_samples: int = 40, t_max: float = 2.0,
                           slack_coeff: float = 1.0,
                           tol: float = 1e-9) -> ViolationReport:
    """Sample the four semigroup axioms on grid-aligned times.

    (i) S(0) is the identity, (ii) S(t+s) = S(t) S(s), (iii) trajectories are
    time continuous (one-step displacement bounded by local speed), and
    (iv) each S(t) is nonexpansive up to the logged discretization slack
    (1 + slack_coeff * h^2).
    """
    space = spec.space
    rng = np.random.default_rng(rng_seed)
    K = max(1, int(round(t_max / spec.h)))
    worst = -math.inf
    witness = None
    tested = 0
    for _ in range(n_samples):
        x = space._sample_coords(rng, 1)[0]
        y = space._sample_coords(rng, 1)[0]
        nt = int(rng.integers(1, K + 1))
        ns = int(rng.integers(1, K + 1))
        h = spec.h
        px = space.point(x)
        curve = flow(spec, px, (nt + ns) * h)

        def note(v, axiom, extra=None):
            nonlocal worst, witness
            if v > worst:
                worst = v
                if v > tol:
                    witness = {"axiom": axiom, "x": tuple(float(v) for v in x),
                               "y": tuple(float(v) for v in y),
                               "t": nt * h, "s": ns * h, **(extra or {})}

        # (i) identity at time zero
        note(space.distance(evolve(spec, px, 0.0), px), "identity")
        # (ii) composition on the grid
        mid = space.point(curve.coords[curve.node_index(ns * h)])
        two_leg = flow(spec, mid, nt * h).end_point().as_array()
        note(space._dist(curve.coords[curve.node_index((nt + ns) * h)], two_leg),
             "composition")
        # (iii) continuity: one step moves at most local metric speed times step
        i = curve.node_index(nt * h)
        gap = space._dist(curve.coords[i], curve.coords[i - 1])
        speed = max(_metric_speed(space, spec.field, curve.coords[i]),
                    _metric_speed(space, spec.field, curve.coords[i - 1]))
        note(gap - 1.5 * speed * h - 1e-9, "continuity")
        # (iv) nonexpansiveness with discretization slack
        ex = flow(spec, px, nt * h).end_point().as_array()
        ey = flow(spec, space.point(y), nt * h).end_point().as_array()
        d0 = space._dist(x, y)
        note(space._dist(ex, ey) - d0 * (1.0 + slack_coeff * h * h),
             "nonexpansive")
        tested += 4
    return ViolationReport("semigroup_axioms", tested, worst, tol, witness)


def final_state_distance(spec: SemigroupSpec, curve: CurveTrace) -> float:
    """Distance from the trajectory endpoint to its fixed-set projection."""
    end = curve.end_point()
    p = project_convex(spec.space, spec.field.fixed_set, end)
    return spec.space.distance(end, p)


def semigroup_verdict(spec: SemigroupSpec, curve: CurveTrace,
                      diag: SemigroupDiagnostics,
                      tol_verdict: float = 1e-2) -> Verdict:
    """Convergence verdict for the mean trajectory.

    The limit candidate is the fixed-set projection of the trajectory
    endpoint; agreement is its distance to the mean at the largest horizon.
    """
    space = spec.space
    limit = project_convex(space, spec.field.fixed_set, curve.end_point())
    sigma_last = diag.means[-1]
    agreement = space.distance(sigma_last, limit)
    final_residual = diag.residuals_r[-1]
    status = ("converged"
              if agreement <= tol_verdict and final_residual <= tol_verdict
              else "inconclusive")
    return Verdict(limit, agreement, status, tol_verdict, final_residual)
