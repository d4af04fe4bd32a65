"""Geodesic-space interface and nonpositive-curvature predicates.

Everything else in the package works over Hadamard spaces: complete geodesic
metric spaces in which the squared distance to any point is 1-strongly convex
along geodesics.  This module fixes the space interface, the quasi-inner
product of point quadruples, sampled checkers for each defining inequality,
metric projection onto convex sets, and a finite-window estimator for
asymptotic centers of bounded sequences.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

# Tolerance ladder: algebraic identities, geodesic/projection contracts,
# iterative-solver certificates.
TOL_IDENTITY = 1e-10
TOL_GEOMETRY = 1e-9
TOL_CERTIFICATE = 1e-6

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class SpaceMismatchError(ValueError):
    """Points from different spaces were mixed in one operation."""


class MembershipError(ValueError):
    """Coordinates violate the owning space's membership predicate."""


class UnsupportedSetError(ValueError):
    """The requested convex set has no projector in this space."""


@dataclass(frozen=True)
class Point:
    """A point of a concrete space: coordinate tuple tagged with the owner id."""

    coords: tuple[float, ...]
    space_id: str

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)

    def __repr__(self) -> str:
        inner = ", ".join(f"{c:.12g}" for c in self.coords)
        return f"Point(({inner}), {self.space_id!r})"


class Space(ABC):
    """A metric space with distance, geodesic and sampling oracles.

    Subclasses provide the raw coordinate-level operations; the public
    methods validate membership and space tags and deal in ``Point``.
    """

    space_id: str
    dim: int

    # -- point handling ----------------------------------------------------

    def point(self, coords: Iterable[float]) -> Point:
        c = tuple(float(v) for v in coords)
        if len(c) != self.dim:
            raise MembershipError(
                f"{self.space_id} expects {self.dim} coordinates, got {len(c)}"
            )
        u = np.asarray(c, dtype=float)
        if not np.all(np.isfinite(u)) or not self._contains(u):
            raise MembershipError(f"coordinates {c} are not in {self.space_id}")
        return Point(c, self.space_id)

    def _require(self, *points: Point) -> list[np.ndarray]:
        out = []
        for p in points:
            if p.space_id != self.space_id:
                raise SpaceMismatchError(
                    f"point of {p.space_id} used in {self.space_id}"
                )
            out.append(p.as_array())
        return out

    # -- public operations -------------------------------------------------

    def distance(self, a: Point, b: Point) -> float:
        """Metric distance; symmetric, zero only for equal points."""
        u, v = self._require(a, b)
        return float(self._dist(u, v))

    def geodesic_point(self, a: Point, b: Point, t: float) -> Point:
        """Point at parameter t on the unique geodesic from a to b.

        Satisfies d(result, a) = t * d(a, b) and d(result, b) = (1-t) * d(a, b).
        """
        if not 0.0 <= t <= 1.0:
            raise ValueError(f"geodesic parameter must be in [0, 1], got {t}")
        u, v = self._require(a, b)
        return self.point(self._geo(u, v, float(t)))

    def sample(self, rng: np.random.Generator) -> Point:
        return self.point(self._sample_coords(rng, 1)[0])

    def sample_batch(self, rng: np.random.Generator, n: int) -> list[Point]:
        return [self.point(row) for row in self._sample_coords(rng, n)]

    # -- coordinate-level oracles (plumbing) --------------------------------

    @abstractmethod
    def _contains(self, u: np.ndarray) -> bool: ...

    @abstractmethod
    def _dist(self, u: np.ndarray, v: np.ndarray) -> float: ...

    @abstractmethod
    def _geo(self, u: np.ndarray, v: np.ndarray, t: float) -> np.ndarray: ...

    @abstractmethod
    def _sample_coords(self, rng: np.random.Generator, n: int) -> np.ndarray: ...

    def _dist_many(self, u: np.ndarray, V: np.ndarray) -> np.ndarray:
        # default row loop; concrete spaces override with vector code
        return np.array([self._dist(u, row) for row in V])

    # -- projection hooks (overridden where a closed form exists) -----------

    def _project_segment(self, u: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        t = _golden_min(lambda s: self._dist(u, self._geo(a, b, s)))
        return self._geo(a, b, t)

    def _project_axis(self, u: np.ndarray) -> np.ndarray:
        raise UnsupportedSetError(f"{self.space_id} has no axis projector")

    def _project_halfspace(self, u: np.ndarray, p: np.ndarray, v: np.ndarray) -> np.ndarray:
        raise UnsupportedSetError(f"{self.space_id} has no half-space projector")

    def _project_river_box(self, u: np.ndarray, params: tuple[float, ...]) -> np.ndarray:
        raise UnsupportedSetError(f"{self.space_id} has no river-box projector")

    def _project_subspace(self, u: np.ndarray, basis: np.ndarray) -> np.ndarray:
        raise UnsupportedSetError(f"{self.space_id} has no subspace projector")

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.space_id}>"


def _tup(u) -> tuple[float, ...]:
    return tuple(float(v) for v in u)


def _golden_min(f: Callable[[float], float], lo: float = 0.0, hi: float = 1.0,
                tol: float = 1e-12, max_iter: int = 200) -> float:
    """Golden-section minimizer of a unimodal function on [lo, hi]."""
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


# ---------------------------------------------------------------------------
# quasi-inner product
# ---------------------------------------------------------------------------

def quasi_inner(space: Space, a: Point, b: Point, c: Point, d: Point) -> float:
    """Quasi-inner product of the quadruple (a, b; c, d).

    Defined as (d(a,d)^2 + d(b,c)^2 - d(a,c)^2 - d(b,d)^2) / 2; in a Hilbert
    space this equals the inner product of b - a with d - c.
    """
    ua, ub, uc, ud = space._require(a, b, c, d)
    return _quasi_inner_coords(space, ua, ub, uc, ud)


def _quasi_inner_coords(space, ua, ub, uc, ud) -> float:
    dad = space._dist(ua, ud)
    dbc = space._dist(ub, uc)
    dac = space._dist(ua, uc)
    dbd = space._dist(ub, ud)
    return 0.5 * (dad * dad + dbc * dbc - dac * dac - dbd * dbd)


# ---------------------------------------------------------------------------
# sampled checkers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ViolationReport:
    """Aggregated result of a sampled inequality check.

    worst_violation <= 0 means no violation was found beyond tolerance; a
    positive value comes with the offending sample in ``witness``.
    """

    check: str
    samples_tested: int
    worst_violation: float
    tol: float
    witness: dict | None = None

    @property
    def passed(self) -> bool:
        return self.worst_violation <= self.tol

    def summary(self) -> str:
        verdict = "ok" if self.passed else "VIOLATED"
        return (f"{self.check}: {verdict} worst={self.worst_violation:.3e} "
                f"over {self.samples_tested} samples (tol {self.tol:.1e})")


def check_cat0_sample(space: Space, rng_seed: int = 0, n_samples: int = 10_000,
                      tol: float = TOL_GEOMETRY) -> ViolationReport:
    """Sample the strong-convexity (CAT(0)) inequality of squared distance.

    For random x0, x1, y and t the test is
    d(y, x_t)^2 <= (1-t) d(y,x0)^2 + t d(y,x1)^2 - t(1-t) d(x0,x1)^2.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(rng_seed)
    A = space._sample_coords(rng, n_samples)
    B = space._sample_coords(rng, n_samples)
    Y = space._sample_coords(rng, n_samples)
    ts = rng.uniform(0.0, 1.0, n_samples)
    worst = -math.inf
    witness = None
    for i in range(n_samples):
        a, b, y, t = A[i], B[i], Y[i], float(ts[i])
        m = space._geo(a, b, t)
        dym = space._dist(y, m)
        dya = space._dist(y, a)
        dyb = space._dist(y, b)
        dab = space._dist(a, b)
        v = dym * dym - ((1 - t) * dya * dya + t * dyb * dyb - t * (1 - t) * dab * dab)
        if v > worst:
            worst = v
            if v > tol:
                witness = {"x0": _tup(a), "x1": _tup(b), "y": _tup(y), "t": t}
    return ViolationReport("cat0", n_samples, worst, tol, witness)


def check_cauchy_schwarz_sample(space: Space, rng_seed: int = 0,
                                n_samples: int = 10_000,
                                tol: float = TOL_GEOMETRY) -> ViolationReport:
    """Sample the Cauchy-Schwarz-type bound <ab, cd> <= d(a,b) d(c,d)."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(rng_seed)
    A = space._sample_coords(rng, n_samples)
    B = space._sample_coords(rng, n_samples)
    C = space._sample_coords(rng, n_samples)
    D = space._sample_coords(rng, n_samples)
    worst = -math.inf
    witness = None
    for i in range(n_samples):
        a, b, c, d = A[i], B[i], C[i], D[i]
        q = _quasi_inner_coords(space, a, b, c, d)
        v = q - space._dist(a, b) * space._dist(c, d)
        if v > worst:
            worst = v
            if v > tol:
                witness = {"a": _tup(a), "b": _tup(b), "c": _tup(c), "d": _tup(d)}
    return ViolationReport("cauchy_schwarz", n_samples, worst, tol, witness)


def check_quasi_inner_identities(space: Space, rng_seed: int = 0,
                                 n_samples: int = 10_000,
                                 tol: float = TOL_IDENTITY) -> ViolationReport:
    """Sample the algebraic identities of the quasi-inner product.

    Checks symmetry in the two pairs, sign flip under reversing a pair, and
    additivity when splitting the first pair at an intermediate point.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(rng_seed)
    A = space._sample_coords(rng, n_samples)
    B = space._sample_coords(rng, n_samples)
    C = space._sample_coords(rng, n_samples)
    D = space._sample_coords(rng, n_samples)
    E = space._sample_coords(rng, n_samples)
    worst = -math.inf
    witness = None
    for i in range(n_samples):
        a, b, c, d, e = A[i], B[i], C[i], D[i], E[i]
        q = _quasi_inner_coords(space, a, b, c, d)
        r1 = abs(q - _quasi_inner_coords(space, c, d, a, b))
        r2 = abs(q + _quasi_inner_coords(space, a, b, d, c))
        r3 = abs(q - _quasi_inner_coords(space, a, e, c, d)
                 - _quasi_inner_coords(space, e, b, c, d))
        v = max(r1, r2, r3)
        if v > worst:
            worst = v
            if v > tol:
                witness = {"a": _tup(a), "b": _tup(b), "c": _tup(c),
                           "d": _tup(d), "e": _tup(e)}
    return ViolationReport("quasi_inner_identities", n_samples, worst, tol, witness)


def check_four_point_sample(space: Space, rng_seed: int = 0,
                            n_samples: int = 10_000, tol: float = TOL_GEOMETRY,
                            t_grid: int = 17) -> ViolationReport:
    """Sample the four-point comparison condition (the Q4-bar property).

    Draws quadruples (x, y, p, q) with d(p,x) <= d(x,q) and d(p,y) <= d(y,q),
    then requires d(p,m) <= d(m,q) for every m on a t-grid of the segment
    [x, y].  Kept admissible quadruples count toward ``n_samples``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if t_grid < 2:
        raise ValueError("t_grid must be >= 2")
    rng = np.random.default_rng(rng_seed)
    ts = np.linspace(0.0, 1.0, t_grid)
    worst = -math.inf
    witness = None
    accepted = 0
    draws = 0
    max_draws = 64 * n_samples
    while accepted < n_samples and draws < max_draws:
        chunk = min(4096, n_samples - accepted + 512)
        X = space._sample_coords(rng, chunk)
        Y = space._sample_coords(rng, chunk)
        P = space._sample_coords(rng, chunk)
        Q = space._sample_coords(rng, chunk)
        draws += chunk
        for j in range(chunk):
            if accepted >= n_samples:
                break
            x, y, p, q = X[j], Y[j], P[j], Q[j]
            if not (space._dist(p, x) <= space._dist(x, q)
                    and space._dist(p, y) <= space._dist(y, q)):
                p, q = q, p  # the swapped labelling may be admissible
                if not (space._dist(p, x) <= space._dist(x, q)
                        and space._dist(p, y) <= space._dist(y, q)):
                    continue
            accepted += 1
            for t in ts:
                m = space._geo(x, y, float(t))
                v = space._dist(p, m) - space._dist(m, q)
                if v > worst:
                    worst = v
                    if v > tol:
                        witness = {"x": _tup(x), "y": _tup(y), "p": _tup(p),
                                   "q": _tup(q), "t": float(t)}
    return ViolationReport("four_point", accepted, worst, tol, witness)


# ---------------------------------------------------------------------------
# convex sets and metric projection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvexSetSpec:
    """Description of a closed convex set with a computable projector.

    Kinds: ``singleton`` (one point), ``segment`` (geodesic segment between
    two points), ``halfspace`` ({z : d(p,z) <= d(z,v)} for the two stored
    points), ``axis`` (the first-coordinate axis), and ``river_box`` (a
    product box [xmin,xmax] x [ymin,ymax], convex in the river plane when it
    is a single leg or straddles the spine).
    """

    kind: str
    points: tuple[Point, ...] = ()
    params: tuple[float, ...] = ()

    @classmethod
    def singleton(cls, p: Point) -> "ConvexSetSpec":
        return cls("singleton", (p,))

    @classmethod
    def segment(cls, a: Point, b: Point) -> "ConvexSetSpec":
        if a.space_id != b.space_id:
            raise SpaceMismatchError("segment endpoints from different spaces")
        return cls("segment", (a, b))

    @classmethod
    def halfspace(cls, p: Point, v: Point) -> "ConvexSetSpec":
        if p.space_id != v.space_id:
            raise SpaceMismatchError("half-space anchors from different spaces")
        return cls("halfspace", (p, v))

    @classmethod
    def x_axis(cls) -> "ConvexSetSpec":
        return cls("axis")

    @classmethod
    def river_box(cls, xmin: float, xmax: float, ymin: float, ymax: float) -> "ConvexSetSpec":
        if xmin > xmax or ymin > ymax:
            raise ValueError("empty river box")
        if xmin != xmax and not (ymin <= 0.0 <= ymax):
            raise ValueError("river box with several abscissas must touch the spine")
        return cls("river_box", (), (xmin, xmax, ymin, ymax))

    @classmethod
    def subspace(cls, basis: np.ndarray) -> "ConvexSetSpec":
        """Linear subspace spanned by the given rows (orthonormalized here)."""
        B = np.atleast_2d(np.asarray(basis, dtype=float))
        q, _ = np.linalg.qr(B.T)
        q = q[:, : B.shape[0]]
        return cls("subspace", (), tuple(float(v) for v in q.T.ravel()) + (float(B.shape[0]),))

    def subspace_basis(self, dim: int) -> np.ndarray:
        k = int(self.params[-1])
        return np.asarray(self.params[:-1], dtype=float).reshape(k, dim)


def project_convex(space: Space, spec: ConvexSetSpec, x: Point) -> Point:
    """Nearest-point projection of x onto the described convex set."""
    (u,) = space._require(x)
    if spec.kind == "singleton":
        (p,) = space._require(spec.points[0])
        return space.point(p)
    if spec.kind == "segment":
        a, b = space._require(*spec.points)
        return space.point(space._project_segment(u, a, b))
    if spec.kind == "halfspace":
        p, v = space._require(*spec.points)
        if space._dist(p, u) <= space._dist(u, v):
            return space.point(u)
        return space.point(space._project_halfspace(u, p, v))
    if spec.kind == "axis":
        return space.point(space._project_axis(u))
    if spec.kind == "river_box":
        return space.point(space._project_river_box(u, spec.params))
    if spec.kind == "subspace":
        return space.point(space._project_subspace(u, spec.subspace_basis(space.dim)))
    raise UnsupportedSetError(f"unknown convex set kind {spec.kind!r}")


def set_contains(space: Space, spec: ConvexSetSpec, x: Point,
                 tol: float = TOL_GEOMETRY) -> bool:
    """Membership test for the described convex set, up to tolerance."""
    (u,) = space._require(x)
    if spec.kind == "singleton":
        (p,) = space._require(spec.points[0])
        return space._dist(u, p) <= tol
    if spec.kind == "segment":
        a, b = space._require(*spec.points)
        return space._dist(a, u) + space._dist(u, b) <= space._dist(a, b) + tol
    if spec.kind == "halfspace":
        p, v = space._require(*spec.points)
        return space._dist(p, u) <= space._dist(u, v) + tol
    if spec.kind == "axis":
        return float(np.max(np.abs(u[1:]))) <= tol if len(u) > 1 else True
    if spec.kind == "river_box":
        xmin, xmax, ymin, ymax = spec.params
        return (xmin - tol <= u[0] <= xmax + tol) and (ymin - tol <= u[1] <= ymax + tol)
    if spec.kind == "subspace":
        B = spec.subspace_basis(space.dim)
        return float(np.linalg.norm(u - B.T @ (B @ u))) <= tol
    raise UnsupportedSetError(f"unknown convex set kind {spec.kind!r}")


def sample_in_set(space: Space, spec: ConvexSetSpec, rng: np.random.Generator,
                  n: int) -> list[Point]:
    """Points of the set, obtained by projecting random samples into it."""
    return [project_convex(space, spec, space.point(row))
            for row in space._sample_coords(rng, n)]


# ---------------------------------------------------------------------------
# asymptotic center (finite-window estimator)
# ---------------------------------------------------------------------------

def estimate_asymptotic_center(space: Space, window: Sequence[Point],
                               tol: float = TOL_GEOMETRY) -> tuple[Point, float]:
    """Approximate minimizer of c -> max_i d(c, w_i) over a finite window.

    Two phases: seed at the window's Karcher mean, then shrink-step geodesic
    descent pulling toward window points or toward the mean of the currently
    farthest points.  The window stands in for the tail of a sequence, so the
    returned center and radius are estimates, not exact asymptotic data.
    """
    if len(window) == 0:
        raise ValueError("window must be nonempty")
    from .frechet import FrechetProblem, karcher_mean  # local to avoid a cycle

    W = np.array([space._require(p)[0] for p in window])
    if len(window) == 1:
        return window[0], 0.0

    def radius(c: np.ndarray) -> float:
        return float(np.max(space._dist_many(c, W)))

    seed, _ = karcher_mean(FrechetProblem(space, anchors=tuple(window)), tol=1e-8)
    c = seed.as_array()
    f = radius(c)
    step = max(f, tol)
    rounds = 0
    while step > tol and rounds < 10_000:
        rounds += 1
        dists = space._dist_many(c, W)
        active = W[dists >= f - step]
        targets = [row for row in W]
        if len(active) > 1:
            ctr, _ = karcher_mean(
                FrechetProblem(space, coords=active,
                               weights=np.full(len(active), 1.0 / len(active))),
                tol=1e-8)
            targets.append(ctr.as_array())
        best_c, best_f = None, f
        for tgt in targets:
            dd = space._dist(c, tgt)
            if dd < 1e-15:
                continue
            cand = space._geo(c, tgt, min(1.0, step / dd))
            fc = radius(cand)
            if fc < best_f - 1e-15:
                best_c, best_f = cand, fc
        if best_c is None:
            step *= 0.5
        else:
            c, f = best_c, best_f
    return space.point(c), f
