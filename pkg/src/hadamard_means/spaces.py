"""Concrete Hadamard model spaces with closed-form distance and geodesics.

Three shipped spaces: Euclidean R^n, the river-metric plane (a metric tree
where travel between different abscissas is routed through the x-axis), and
the Poincare disk with curvature -1.  A deliberately inconsistent circle
space (chord distance, arc interpolation) is included as a negative control
for the curvature checkers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import MembershipError, Point, Space

SAMPLE_BOX = 5.0  # half-width of the river sampling box


class EuclideanSpace(Space):
    """R^n with the l2 metric; geodesics are straight segments."""

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        self.dim = int(dim)
        self.space_id = f"euclidean:{self.dim}"

    def _contains(self, u):
        return bool(np.all(np.isfinite(u)))

    def _dist(self, u, v):
        return float(np.linalg.norm(u - v))

    def _dist_many(self, u, V):
        return np.linalg.norm(V - u, axis=1)

    def _geo(self, u, v, t):
        return (1.0 - t) * u + t * v

    def _sample_coords(self, rng, n):
        return rng.standard_normal((n, self.dim))

    # closed-form projections
    def _project_segment(self, u, a, b):
        ab = b - a
        denom = float(ab @ ab)
        if denom == 0.0:
            return a.copy()
        t = float(np.clip((u - a) @ ab / denom, 0.0, 1.0))
        return a + t * ab

    def _project_axis(self, u):
        out = np.zeros_like(u)
        out[0] = u[0]
        return out

    def _project_halfspace(self, u, p, v):
        n = v - p
        nn = float(n @ n)
        if nn == 0.0:
            return u.copy()
        c = 0.5 * (float(v @ v) - float(p @ p))
        g = 2.0 * float(u @ n) - 2.0 * c
        if g <= 0.0:
            return u.copy()
        return u - (g / (2.0 * nn)) * n

    def _project_subspace(self, u, basis):
        return basis.T @ (basis @ u)


@dataclass(frozen=True)
class RiverPath:
    """Piecewise-linear tree path: breakpoints plus cumulative arclength."""

    breakpoints: tuple[tuple[float, float], ...]
    cumulative: tuple[float, ...]

    @property
    def length(self) -> float:
        return self.cumulative[-1]

    def point_at(self, arclength: float) -> tuple[float, float]:
        """Point at the given arclength; breakpoint ties go to the earlier segment."""
        s = min(max(arclength, 0.0), self.length)
        pts, cum = self.breakpoints, self.cumulative
        for i in range(len(pts) - 1):
            if s <= cum[i + 1]:
                seg = cum[i + 1] - cum[i]
                f = 0.0 if seg == 0.0 else (s - cum[i]) / seg
                x0, y0 = pts[i]
                x1, y1 = pts[i + 1]
                return (x0 + f * (x1 - x0), y0 + f * (y1 - y0))
        return pts[-1]


class RiverPlane(Space):
    """R^2 with the river metric, a metric tree.

    Distance is |y - y'| on a common vertical line and |y| + |y'| + |x - x'|
    otherwise: all travel between different abscissas runs along the x-axis
    (the spine).
    """

    dim = 2
    space_id = "river"

    def _contains(self, u):
        return bool(np.all(np.isfinite(u)))

    def _dist(self, u, v):
        if u[0] == v[0]:
            return abs(float(u[1] - v[1]))
        return abs(float(u[1])) + abs(float(v[1])) + abs(float(u[0] - v[0]))

    def _dist_many(self, u, V):
        dx = V[:, 0] - u[0]
        same = dx == 0.0
        return np.where(same,
                        np.abs(V[:, 1] - u[1]),
                        np.abs(u[1]) + np.abs(V[:, 1]) + np.abs(dx))

    def canonical_path(self, a: Point, b: Point) -> RiverPath:
        """The unique tree path from a to b with degenerate legs dropped."""
        u, v = self._require(a, b)
        return self._path(u, v)

    def _path(self, u, v) -> RiverPath:
        ux, uy = float(u[0]), float(u[1])
        vx, vy = float(v[0]), float(v[1])
        if ux == vx:
            pts = [(ux, uy), (vx, vy)]
        else:
            pts = [(ux, uy), (ux, 0.0), (vx, 0.0), (vx, vy)]
        # drop zero-length segments
        dedup = [pts[0]]
        for p in pts[1:]:
            if p != dedup[-1]:
                dedup.append(p)
        cum = [0.0]
        for (x0, y0), (x1, y1) in zip(dedup, dedup[1:]):
            cum.append(cum[-1] + abs(x1 - x0) + abs(y1 - y0))
        return RiverPath(tuple(dedup), tuple(cum))

    def _geo(self, u, v, t):
        path = self._path(u, v)
        return np.asarray(path.point_at(t * path.length), dtype=float)

    def _sample_coords(self, rng, n):
        return rng.uniform(-SAMPLE_BOX, SAMPLE_BOX, (n, 2))

    def _project_axis(self, u):
        # the nearest spine point is the foot of the vertical leg
        return np.array([u[0], 0.0])

    def _project_river_box(self, u, params):
        xmin, xmax, ymin, ymax = params
        x, y = float(u[0]), float(u[1])
        if xmin <= x <= xmax:
            return np.array([x, min(max(y, ymin), ymax)])
        xc = min(max(x, xmin), xmax)
        return np.array([xc, min(max(0.0, ymin), ymax)])


class PoincareDisk(Space):
    """The open unit disk with the curvature -1 hyperbolic metric.

    Normalization: d(0, z) = 2 artanh |z|.  Points are kept inside
    |z| <= 1 - boundary_margin; excursions raise instead of clamping so that
    nonexpansiveness checks are never silently corrupted.
    """

    dim = 2

    def __init__(self, boundary_margin: float = 0.05):
        if not 0.0 < boundary_margin < 1.0:
            raise ValueError("boundary margin must be in (0, 1)")
        self.boundary_margin = float(boundary_margin)
        self.rmax = 1.0 - self.boundary_margin
        self.space_id = f"disk:{boundary_margin:g}"

    # complex-coordinate helpers
    @staticmethod
    def _c(u) -> complex:
        return complex(u[0], u[1])

    @staticmethod
    def _re(z: complex) -> np.ndarray:
        return np.array([z.real, z.imag])

    def _contains(self, u):
        return bool(np.all(np.isfinite(u))) and math.hypot(u[0], u[1]) <= self.rmax + 1e-12

    def _dist(self, u, v):
        zu, zv = self._c(u), self._c(v)
        w = (zv - zu) / (1.0 - zu.conjugate() * zv)
        return 2.0 * math.atanh(abs(w))

    def _dist_many(self, u, V):
        zu = self._c(u)
        Z = V[:, 0] + 1j * V[:, 1]
        W = (Z - zu) / (1.0 - np.conj(zu) * Z)
        return 2.0 * np.arctanh(np.abs(W))

    def _log_c(self, base: complex, target: complex) -> complex:
        w = (target - base) / (1.0 - base.conjugate() * target)
        aw = abs(w)
        if aw == 0.0:
            return 0j
        return 2.0 * math.atanh(aw) * (w / aw)

    def _exp_c(self, base: complex, vec: complex) -> complex:
        av = abs(vec)
        if av == 0.0:
            return base
        u = math.tanh(0.5 * av) * (vec / av)
        return (base + u) / (1.0 + base.conjugate() * u)

    def log_map(self, base: Point, target: Point) -> np.ndarray:
        """Tangent vector at base pointing to target, with |v| = d(base, target)."""
        u, v = self._require(base, target)
        return self._re(self._log_c(self._c(u), self._c(v)))

    def exp_map(self, base: Point, vec) -> Point:
        """Geodesic endpoint reached from base along vec, d(base, result) = |vec|.

        Raises MembershipError if the endpoint leaves the margin region.
        """
        (u,) = self._require(base)
        v = np.asarray(vec, dtype=float)
        z = self._exp_c(self._c(u), complex(v[0], v[1]))
        if abs(z) > self.rmax + 1e-12:
            raise MembershipError(
                f"exp map leaves the allowed region |z| <= {self.rmax:g}")
        return self.point(self._re(z))

    def _log_many(self, u, V) -> np.ndarray:
        zu = self._c(u)
        Z = V[:, 0] + 1j * V[:, 1]
        W = (Z - zu) / (1.0 - np.conj(zu) * Z)
        aw = np.abs(W)
        scale = np.zeros_like(aw)
        nz = aw > 0.0
        scale[nz] = 2.0 * np.arctanh(aw[nz]) / aw[nz]
        L = scale * W
        return np.column_stack([L.real, L.imag])

    def _geo(self, u, v, t):
        zu, zv = self._c(u), self._c(v)
        vec = self._log_c(zu, zv)
        z = self._exp_c(zu, t * vec)
        return self._re(z)

    def _sample_coords(self, rng, n):
        r = rng.uniform(0.0, self.rmax, n)
        th = rng.uniform(0.0, 2.0 * math.pi, n)
        return np.column_stack([r * np.cos(th), r * np.sin(th)])

    def _project_axis(self, u):
        # the real diameter is a geodesic; search along its arclength chart
        big = 2.0 * math.atanh(self.rmax)

        def at(s):
            return np.array([math.tanh(0.5 * s), 0.0])

        from .geometry import _golden_min
        s = _golden_min(lambda s: self._dist(u, at(s)), -big, big, tol=1e-13)
        return at(s)


class CircleChordArcSpace(Space):
    """Negative control: unit circle with chord distance but arc interpolation.

    The distance oracle is the Euclidean secant while the "geodesic" oracle
    walks the shorter arc, so the space is not a geodesic metric space and
    fails the CAT(0) inequality on many samples.  Shipped only so the
    checkers have something to flag.
    """

    dim = 2
    space_id = "circle"

    def _contains(self, u):
        return abs(math.hypot(u[0], u[1]) - 1.0) <= 1e-9

    def _dist(self, u, v):
        return float(np.linalg.norm(u - v))

    def _dist_many(self, u, V):
        return np.linalg.norm(V - u, axis=1)

    def _geo(self, u, v, t):
        thu = math.atan2(u[1], u[0])
        thv = math.atan2(v[1], v[0])
        delta = math.remainder(thv - thu, 2.0 * math.pi)
        if abs(abs(delta) - math.pi) < 1e-15:
            delta = math.pi  # antipodal tie resolves counterclockwise
        th = thu + t * delta
        return np.array([math.cos(th), math.sin(th)])

    def _sample_coords(self, rng, n):
        th = rng.uniform(0.0, 2.0 * math.pi, n)
        return np.column_stack([np.cos(th), np.sin(th)])


def parse_space(text: str) -> Space:
    """Build a space from its selection string.

    Accepted: ``euclidean:<dim>``, ``river``, ``disk``, ``disk:<margin>``,
    and ``circle`` (the negative control).
    """
    s = text.strip()
    if s.startswith("euclidean:"):
        try:
            dim = int(s.split(":", 1)[1])
        except ValueError as exc:
            raise ValueError(f"bad euclidean dimension in {text!r}") from exc
        if not 1 <= dim <= 64:
            raise ValueError(f"euclidean dimension out of range in {text!r}")
        return EuclideanSpace(dim)
    if s == "river":
        return RiverPlane()
    if s == "disk":
        return PoincareDisk()
    if s.startswith("disk:"):
        try:
            margin = float(s.split(":", 1)[1])
        except ValueError as exc:
            raise ValueError(f"bad disk margin in {text!r}") from exc
        return PoincareDisk(margin)
    if s == "circle":
        return CircleChordArcSpace()
    raise ValueError(f"unknown space {text!r}")
