"""Weighted Frechet functionals and their unique minimizers (Karcher means).

The mean of anchors a_1..a_n with weights w_i is the minimizer of
F(x) = sum_i w_i d(a_i, x)^2.  On a Hadamard space F is strongly convex, so
the minimizer exists and is unique.  Solvers: closed form on Euclidean space,
an exact piecewise-quadratic minimization on the river plane, a damped
tangent-space fixed-point iteration on the Poincare disk, and a generic
incremental proximal sweep that only uses geodesic interpolation and hence
works in any shipped space.

Every solve is paired with a probe certificate built from the variance lower
bound F(y) - F(mean) >= d(mean, y)^2 and the companion first-moment bound
d(mean, y) <= sum_i w_i d(a_i, y).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import Point, Space, TOL_CERTIFICATE
from .spaces import EuclideanSpace, PoincareDisk, RiverPlane


class SolverError(RuntimeError):
    """The mean solver did not converge within its iteration budget."""


class CertificateError(RuntimeError):
    """A computed mean failed its optimality certificate after retry."""


class FrechetProblem:
    """Anchors, weights and the owning space of one mean computation.

    Weights must be nonnegative and sum to 1 (uniform when omitted).  Engines
    that already hold coordinate arrays can pass ``coords`` directly.
    """

    __slots__ = ("space", "_coords", "_weights")

    def __init__(self, space: Space, anchors: Sequence[Point] | None = None,
                 weights=None, *, coords: np.ndarray | None = None):
        self.space = space
        if coords is not None:
            C = np.asarray(coords, dtype=float)
            if C.ndim != 2 or C.shape[1] != space.dim:
                raise ValueError("coords must have shape (n, dim)")
        else:
            if anchors is None or len(anchors) == 0:
                raise ValueError("a mean problem needs at least one anchor")
            rows = []
            for p in anchors:
                (u,) = space._require(p)
                rows.append(u)
            C = np.array(rows, dtype=float)
        if len(C) == 0:
            raise ValueError("a mean problem needs at least one anchor")
        if weights is None:
            w = np.full(len(C), 1.0 / len(C))
        else:
            w = np.asarray(weights, dtype=float)
            if w.shape != (len(C),):
                raise ValueError("weights length must match anchors")
            if np.any(w < -1e-15):
                raise ValueError("weights must be nonnegative")
            if abs(float(w.sum()) - 1.0) > 1e-9:
                raise ValueError("weights must sum to 1")
        self._coords = C
        self._weights = w

    @property
    def n(self) -> int:
        return len(self._coords)

    @property
    def coords(self) -> np.ndarray:
        return self._coords

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    @property
    def anchors(self) -> tuple[Point, ...]:
        return tuple(self.space.point(row) for row in self._coords)


@dataclass(frozen=True)
class MeanCertificate:
    """Probe record for a candidate mean.

    worst_gap is min over probes y of F(y) - F(candidate) - d(candidate, y)^2
    (nonnegative at the true minimizer up to arithmetic noise).
    worst_distance_slack is min over probes of
    sum_i w_i d(a_i, y) - d(candidate, y), also nonnegative at the optimum.
    """

    candidate: Point
    functional_value: float
    worst_gap: float
    probes: int
    worst_distance_slack: float

    @property
    def passed(self) -> bool:
        return (self.worst_gap >= -TOL_CERTIFICATE
                and self.worst_distance_slack >= -TOL_CERTIFICATE)


def frechet_value(problem: FrechetProblem, x: Point) -> float:
    """Weighted sum of squared distances from the anchors to x."""
    (u,) = problem.space._require(x)
    return _value_coords(problem, u)


def _value_coords(problem: FrechetProblem, u: np.ndarray) -> float:
    d = problem.space._dist_many(u, problem.coords)
    return float(problem.weights @ (d * d))


def certify_mean(problem: FrechetProblem, candidate: Point,
                 n_probes: int = 256, rng_seed: int = 0,
                 extra_probes: np.ndarray | None = None) -> MeanCertificate:
    """Probe the variance and first-moment bounds at random points and anchors.

    Anchor probes are stride-sampled down to at most 256 for very large
    problems to keep the check affordable.
    """
    if n_probes < 1:
        raise ValueError("n_probes must be >= 1")
    space = problem.space
    (c,) = space._require(candidate)
    rng = np.random.default_rng(rng_seed)
    probes = [space._sample_coords(rng, n_probes)]
    stride = max(1, int(math.ceil(problem.n / 256)))
    probes.append(problem.coords[::stride])
    if extra_probes is not None and len(extra_probes):
        probes.append(np.asarray(extra_probes, dtype=float))
    P = np.vstack(probes)

    fc = _value_coords(problem, c)
    d_c = space._dist_many(c, P)
    worst_gap = math.inf
    worst_slack = math.inf
    for j in range(len(P)):
        d_anchor = space._dist_many(P[j], problem.coords)
        fy = float(problem.weights @ (d_anchor * d_anchor))
        first = float(problem.weights @ d_anchor)
        gap = fy - fc - d_c[j] * d_c[j]
        slack = first - d_c[j]
        if gap < worst_gap:
            worst_gap = gap
        if slack < worst_slack:
            worst_slack = slack
    return MeanCertificate(candidate, fc, worst_gap, len(P), worst_slack)


def mean_distance_slack(problem: FrechetProblem, candidate: Point, y: Point) -> float:
    """Slack of the first-moment bound at y: sum w_i d(a_i, y) - d(candidate, y)."""
    space = problem.space
    c, u = space._require(candidate, y)
    d_anchor = space._dist_many(u, problem.coords)
    return float(problem.weights @ d_anchor) - space._dist(c, u)


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------

def incremental_prox_mean(problem: FrechetProblem, tol: float = 1e-7,
                          x0: np.ndarray | None = None,
                          max_sweeps: int = 10_000,
                          lam0: float = 1.0,
                          settle: bool = True) -> tuple[np.ndarray, int]:
    """Incremental proximal sweeps over the anchors, in index order.

    The proximal step of w * d(a, .)^2 with step lam moves the iterate along
    the geodesic toward a by the fraction 2*lam*w / (1 + 2*lam*w); the step
    schedule is lam_j = lam0 / j.  Starting from an anchor, every iterate is
    a geodesic combination of anchors, so the final iterate doubles as a
    constructive convex-hull witness.  Stops when a full sweep moves less
    than tol.
    """
    space = problem.space
    C, w = problem.coords, problem.weights
    x = C[0].copy() if x0 is None else np.asarray(x0, dtype=float).copy()
    for j in range(1, max_sweeps + 1):
        lam = lam0 / j
        sweep_start = x
        for i in range(len(C)):
            frac = 2.0 * lam * w[i] / (1.0 + 2.0 * lam * w[i])
            if frac <= 0.0:
                continue
            x = space._geo(x, C[i], frac)
        moved = space._dist(sweep_start, x)
        if moved < tol:
            return x, j
    if not settle:
        return x, max_sweeps
    raise SolverError(
        f"incremental proximal solver did not settle in {max_sweeps} sweeps "
        f"(last sweep moved {moved:.3e}, tol {tol:.1e})")


def _river_dist_matrix(C: np.ndarray, A: np.ndarray) -> np.ndarray:
    dx = C[:, 0][:, None] - A[None, :, 0]
    same = dx == 0.0
    cross = np.abs(C[:, 1])[:, None] + np.abs(A[:, 1])[None, :] + np.abs(dx)
    return np.where(same, np.abs(C[:, 1][:, None] - A[None, :, 1]), cross)


def _river_minimizer(coords: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Exact minimizer on the river plane.

    The minimizer lies on the convex hull of the anchors: the spine between
    the extreme feet plus the vertical legs through anchor abscissas.  On
    each spine interval and each leg the functional is a single quadratic,
    so the global minimum is the best of finitely many clamped vertices.
    """
    x, y = coords[:, 0], coords[:, 1]
    ux = np.unique(x)
    if ux.size == 1:
        return np.array([ux[0], float(w @ y)])

    ay = np.abs(y)
    order = np.argsort(x, kind="stable")
    xs, ays, ws = x[order], ay[order], w[order]
    wcl = ws * (ays - xs)   # left-of-interval term (c + s)^2
    wcr = ws * (ays + xs)   # right-of-interval term (c - s)^2
    p_wcl = np.concatenate([[0.0], np.cumsum(wcl)])
    p_wcr = np.concatenate([[0.0], np.cumsum(wcr)])
    total_wcr = p_wcr[-1]

    cands = [np.array([x0, 0.0]) for x0 in ux]
    for j in range(ux.size - 1):
        lcount = int(np.searchsorted(xs, ux[j], side="right"))
        sl = p_wcl[lcount]
        sr = total_wcr - p_wcr[lcount]
        s = min(max(sr - sl, ux[j]), ux[j + 1])
        cands.append(np.array([s, 0.0]))

    for x0 in ux:
        same = x == x0
        wy_same = float(w[same] @ y[same])
        k_other = float(w[~same] @ (ay[~same] + np.abs(x[~same] - x0)))
        ytop = max(float(np.max(y[same])), 0.0)
        ybot = min(float(np.min(y[same])), 0.0)
        if ytop > 0.0:
            cands.append(np.array([x0, min(max(wy_same - k_other, 0.0), ytop)]))
        if ybot < 0.0:
            cands.append(np.array([x0, min(max(wy_same + k_other, ybot), 0.0)]))

    C = np.vstack(cands + [coords])
    M = _river_dist_matrix(C, coords)
    values = (M * M) @ w
    return C[int(np.argmin(values))].copy()


def _disk_minimizer(problem: FrechetProblem, tol: float,
                    x0: np.ndarray | None) -> np.ndarray | None:
    """Damped tangent-space fixed-point iteration x <- exp_x(sum w log_x a_i).

    Returns None on stall so the caller can fall back to the generic solver.
    """
    space: PoincareDisk = problem.space  # type: ignore[assignment]
    C, w = problem.coords, problem.weights
    x = C[0].copy() if x0 is None else np.asarray(x0, dtype=float).copy()
    f = _value_coords(problem, x)
    for _ in range(300):
        g = w @ space._log_many(x, C)
        gn = float(np.hypot(g[0], g[1]))
        if gn < tol:
            return x
        eta = 1.0
        while eta > 1e-6:
            z = space._exp_c(space._c(x), complex(eta * g[0], eta * g[1]))
            if abs(z) <= space.rmax:
                cand = space._re(z)
                fc = _value_coords(problem, cand)
                if fc < f:
                    x, f = cand, fc
                    break
            eta *= 0.5
        else:
            # no strict decrease left; strong convexity still bounds the
            # location error by 2 * gn, so a tiny gradient means converged
            return x if gn <= max(tol, 1e-8) else None
    return None


def karcher_mean(problem: FrechetProblem, tol: float = 1e-7, *,
                 x0: Point | None = None, cert_probes: int = 256,
                 cert_seed: int = 0,
                 max_sweeps: int = 10_000) -> tuple[Point, MeanCertificate]:
    """Solve for the weighted Karcher mean and certify it.

    Dispatch: closed-form weighted average on Euclidean space, exact
    piecewise-quadratic minimization on the river plane, damped fixed-point
    iteration on the disk, incremental proximal sweeps elsewhere (and as the
    disk fallback).  Initialization is the first anchor unless a warm start
    is given.  A failed certificate triggers one retry at tol/10 before
    raising.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    space = problem.space
    start = None if x0 is None else space._require(x0)[0]

    def solve(current_tol: float) -> np.ndarray:
        if isinstance(space, EuclideanSpace):
            return problem.weights @ problem.coords
        if isinstance(space, RiverPlane):
            return _river_minimizer(problem.coords, problem.weights)
        if isinstance(space, PoincareDisk):
            u = _disk_minimizer(problem, current_tol, start)
            if u is not None:
                return u
        u, _ = incremental_prox_mean(problem, current_tol, x0=start,
                                     max_sweeps=max_sweeps)
        return u

    u = solve(tol)
    point = space.point(u)
    cert = certify_mean(problem, point, n_probes=cert_probes, rng_seed=cert_seed)
    if not cert.passed:
        u = solve(tol / 10.0)
        point = space.point(u)
        cert = certify_mean(problem, point, n_probes=cert_probes, rng_seed=cert_seed)
        if not cert.passed:
            raise CertificateError(
                f"mean certificate failed after retry: gap {cert.worst_gap:.3e}, "
                f"distance slack {cert.worst_distance_slack:.3e}")
    return point, cert
