"""Catalog of nonexpansive self-maps with known fixed-point structure.

Shipped kinds: rotations about the origin (plane or disk), coordinatewise
products on the river plane built from 1-D piecewise-linear maps, metric
projections onto convex sets, compositions, and custom callables.
Nonexpansiveness is verified by sampling, never assumed: expansive controls
are constructible on purpose and get flagged with a witness.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import (
    ConvexSetSpec,
    Point,
    Space,
    ViolationReport,
    project_convex,
)
from .spaces import EuclideanSpace, PoincareDisk, RiverPlane


class FixedSetUnknownError(ValueError):
    """The operation needs an analytic fixed set but none was supplied."""


@dataclass(frozen=True)
class PiecewiseLinear:
    """A 1-D piecewise-linear map given by breakpoint nodes.

    Nodes are (x, f(x)) pairs with strictly increasing x; evaluation
    extrapolates with the end slopes.  Injectivity on the line is equivalent
    to strictly monotone node values together with the induced nonzero end
    slopes.
    """

    nodes: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.nodes) < 2:
            raise ValueError("a piecewise-linear map needs at least two nodes")
        xs = [x for x, _ in self.nodes]
        if any(x1 <= x0 for x0, x1 in zip(xs, xs[1:])):
            raise ValueError("node abscissas must be strictly increasing")

    def __call__(self, s: float) -> float:
        xs = [x for x, _ in self.nodes]
        ys = [y for _, y in self.nodes]
        if s <= xs[0]:
            slope = (ys[1] - ys[0]) / (xs[1] - xs[0])
            return ys[0] + slope * (s - xs[0])
        if s >= xs[-1]:
            slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
            return ys[-1] + slope * (s - xs[-1])
        for i in range(len(xs) - 1):
            if s <= xs[i + 1]:
                slope = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
                return ys[i] + slope * (s - xs[i])
        return ys[-1]

    @property
    def slopes(self) -> tuple[float, ...]:
        return tuple((y1 - y0) / (x1 - x0)
                     for (x0, y0), (x1, y1) in zip(self.nodes, self.nodes[1:]))

    @property
    def injective(self) -> bool:
        ys = [y for _, y in self.nodes]
        inc = all(y1 > y0 for y0, y1 in zip(ys, ys[1:]))
        dec = all(y1 < y0 for y0, y1 in zip(ys, ys[1:]))
        return inc or dec

    def fixed_interval(self) -> tuple[float, float] | None:
        """The fixed set as an interval (fixed sets of nonexpansive 1-D maps
        are intervals); None when empty.  Bounds may be infinite when an end
        slope is exactly 1 with zero offset."""
        pieces: list[tuple[float, float]] = []
        xs = [x for x, _ in self.nodes]
        ys = [y for _, y in self.nodes]
        segments = []
        first_slope = (ys[1] - ys[0]) / (xs[1] - xs[0])
        segments.append((-math.inf, xs[0], first_slope, ys[0] - first_slope * xs[0]))
        for i in range(len(xs) - 1):
            slope = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
            segments.append((xs[i], xs[i + 1], slope, ys[i] - slope * xs[i]))
        last_slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
        segments.append((xs[-1], math.inf, last_slope, ys[-1] - last_slope * xs[-1]))
        for lo, hi, slope, intercept in segments:
            if slope == 1.0:
                if abs(intercept) <= 1e-15:
                    pieces.append((lo, hi))
                continue
            s = intercept / (1.0 - slope)
            if lo - 1e-12 <= s <= hi + 1e-12:
                pieces.append((s, s))
        if not pieces:
            return None
        return (min(p[0] for p in pieces), max(p[1] for p in pieces))

    def describe(self) -> str:
        inner = ",".join(f"({x:g},{y:g})" for x, y in self.nodes)
        return f"pl[{inner}]"

    @classmethod
    def parse(cls, text: str) -> "PiecewiseLinear":
        m = re.fullmatch(r"pl\[(.*)\]", text.strip())
        if not m:
            raise ValueError(f"expected pl[(x,y),(x,y),...], got {text!r}")
        pairs = re.findall(r"\(\s*([^,()]+)\s*,\s*([^,()]+)\s*\)", m.group(1))
        if not pairs:
            raise ValueError(f"no nodes found in {text!r}")
        try:
            nodes = tuple((float(a), float(b)) for a, b in pairs)
        except ValueError as exc:
            raise ValueError(f"bad node number in {text!r}") from exc
        return cls(nodes)


@dataclass(frozen=True, eq=False)
class MappingSpec:
    """A self-map of a space plus an optional analytic fixed set."""

    space: Space
    kind: str
    label: str
    fn: Callable[[np.ndarray], np.ndarray]
    fixed_set: ConvexSetSpec | None = None


def apply(mapping: MappingSpec, x: Point) -> Point:
    """Evaluate the map; the result is validated against the space."""
    (u,) = mapping.space._require(x)
    return mapping.space.point(mapping.fn(u))


def residual(mapping: MappingSpec, x: Point) -> float:
    """Displacement d(x, Tx); zero exactly at fixed points."""
    return mapping.space.distance(x, apply(mapping, x))


def check_nonexpansive(mapping: MappingSpec, rng_seed: int = 0,
                       n_pairs: int = 10_000,
                       tol: float = 1e-9) -> ViolationReport:
    """Sample d(Tx, Ty) - d(x, y) over random pairs."""
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    space = mapping.space
    rng = np.random.default_rng(rng_seed)
    X = space._sample_coords(rng, n_pairs)
    Y = space._sample_coords(rng, n_pairs)
    worst = -math.inf
    witness = None
    for i in range(n_pairs):
        x, y = X[i], Y[i]
        v = space._dist(mapping.fn(x), mapping.fn(y)) - space._dist(x, y)
        if v > worst:
            worst = v
            if v > tol:
                witness = {"x": tuple(float(v) for v in x), "y": tuple(float(v) for v in y)}
    return ViolationReport("nonexpansive", n_pairs, worst, tol, witness)


def project_fixed_set(mapping: MappingSpec, x: Point) -> Point:
    """Metric projection onto the map's fixed set (must be analytic)."""
    if mapping.fixed_set is None:
        raise FixedSetUnknownError(
            f"mapping {mapping.label!r} has no analytic fixed set")
    return project_convex(mapping.space, mapping.fixed_set, x)


# ---------------------------------------------------------------------------
# factories
# ---------------------------------------------------------------------------

def rotation_map(space: Space, theta: float) -> MappingSpec:
    """Rotation about the origin; an isometry whose fixed set is {0}.

    A full-turn angle makes the map the identity, whose fixed set is the
    whole space; no analytic description is attached in that case.
    """
    if not isinstance(space, (EuclideanSpace, PoincareDisk)) or space.dim != 2:
        raise ValueError("rotation maps need a 2-D Euclidean space or the disk")
    c, s = math.cos(theta), math.sin(theta)
    R = np.array([[c, -s], [s, c]])

    def fn(u: np.ndarray) -> np.ndarray:
        return R @ u

    fixed = None
    if abs(s) > 1e-15 or abs(1.0 - c) > 1e-15:
        fixed = ConvexSetSpec.singleton(space.point((0.0, 0.0)))
    return MappingSpec(space, "rotation", f"rotation:theta={theta:g}", fn, fixed)


def river_product_map(f: PiecewiseLinear, g: PiecewiseLinear,
                      space: RiverPlane | None = None) -> MappingSpec:
    """Coordinatewise map (x, y) -> (f(x), g(y)) on the river plane.

    Requires f injective and g(0) = 0; with both 1-D maps nonexpansive the
    product is nonexpansive for the river metric.  The fixed set is the
    product of the two fixed intervals whenever that product is nonempty.
    """
    space = space or RiverPlane()
    if not f.injective:
        raise ValueError("the abscissa map must be injective "
                         "(strictly monotone node values)")
    if abs(g(0.0)) > 1e-12:
        raise ValueError("the ordinate map must fix 0")

    def fn(u: np.ndarray) -> np.ndarray:
        return np.array([f(float(u[0])), g(float(u[1]))])

    fixed: ConvexSetSpec | None = None
    fi, gi = f.fixed_interval(), g.fixed_interval()
    if fi is not None and gi is not None:
        fixed = ConvexSetSpec.river_box(fi[0], fi[1], gi[0], gi[1])
    label = f"river_product:f={f.describe()};g={g.describe()}"
    return MappingSpec(space, "river_product", label, fn, fixed)


def projection_map(space: Space, set_spec: ConvexSetSpec,
                   label: str | None = None) -> MappingSpec:
    """Metric projection onto a convex set, as a (firmly) nonexpansive map."""

    def fn(u: np.ndarray) -> np.ndarray:
        return project_convex(space, set_spec, space.point(u)).as_array()

    return MappingSpec(space, "convex_projection",
                       label or f"proj:{set_spec.kind}", fn, set_spec)


def compose_maps(*maps: MappingSpec,
                 fixed_set: ConvexSetSpec | None = None) -> MappingSpec:
    """Composition applied left to right; fixed set only if supplied."""
    if not maps:
        raise ValueError("need at least one map")
    space = maps[0].space
    for m in maps:
        if m.space.space_id != space.space_id:
            raise ValueError("composed maps must share one space")

    def fn(u: np.ndarray) -> np.ndarray:
        for m in maps:
            u = m.fn(u)
        return u

    label = "compose(" + "|".join(m.label for m in maps) + ")"
    return MappingSpec(space, "composition", label, fn, fixed_set)


def custom_map(space: Space, fn: Callable[[np.ndarray], np.ndarray],
               label: str, fixed_set: ConvexSetSpec | None = None) -> MappingSpec:
    return MappingSpec(space, "custom", label, fn, fixed_set)


def identity_map(space: Space) -> MappingSpec:
    return MappingSpec(space, "custom", "identity", lambda u: u.copy(), None)


def parse_mapping(space: Space, text: str) -> MappingSpec:
    """Build a mapping from its description string.

    Accepted: ``rotation:theta=<v>``, ``river_product:f=pl[...];g=pl[...]``,
    ``proj:x-axis``.
    """
    s = text.strip()
    if s.startswith("rotation:"):
        body = s.split(":", 1)[1]
        m = re.fullmatch(r"theta=([^;]+)", body.strip())
        if not m:
            raise ValueError(f"rotation needs theta=<value>, got {text!r}")
        try:
            theta = float(m.group(1))
        except ValueError as exc:
            raise ValueError(f"bad rotation angle in {text!r}") from exc
        return rotation_map(space, theta)
    if s.startswith("river_product:"):
        if not isinstance(space, RiverPlane):
            raise ValueError("river_product maps live on the river plane")
        body = s.split(":", 1)[1]
        parts = dict()
        for item in body.split(";"):
            if "=" not in item:
                raise ValueError(f"bad river_product component {item!r}")
            key, val = item.split("=", 1)
            parts[key.strip()] = val.strip()
        if set(parts) != {"f", "g"}:
            raise ValueError(f"river_product needs f=... and g=..., got {text!r}")
        return river_product_map(PiecewiseLinear.parse(parts["f"]),
                                 PiecewiseLinear.parse(parts["g"]), space)
    if s == "proj:x-axis":
        return projection_map(space, ConvexSetSpec.x_axis(), label="proj:x-axis")
    raise ValueError(f"unknown mapping {text!r}")
