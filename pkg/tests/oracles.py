"""Independent brute-force oracles used to cross-check the solvers.

Everything here is written from scratch against the defining formulas (the
disk even uses the arccosh distance form instead of the package's artanh
route) so that agreement with the library is a genuine two-path check.
"""

from __future__ import annotations

import numpy as np


def euclid_dist_many(u, V):
    return np.linalg.norm(V - u, axis=1)


def river_dist_many(u, V):
    dx = V[:, 0] - u[0]
    same = dx == 0.0
    return np.where(same, np.abs(V[:, 1] - u[1]),
                    np.abs(u[1]) + np.abs(V[:, 1]) + np.abs(dx))


def disk_dist_many(u, V):
    nu = u[0] ** 2 + u[1] ** 2
    nv = V[:, 0] ** 2 + V[:, 1] ** 2
    duv = np.sum((V - u) ** 2, axis=1)
    arg = 1.0 + 2.0 * duv / ((1.0 - nu) * (1.0 - nv))
    return np.arccosh(np.maximum(arg, 1.0))


def _weighted_value(dist_many, cands, anchors, w):
    out = np.empty(len(cands))
    for i, c in enumerate(cands):
        d = dist_many(c, anchors)
        out[i] = float(w @ (d * d))
    return out


def euclid_grid_mean(anchors: np.ndarray, w: np.ndarray,
                     grid: int = 41, zooms: int = 9) -> np.ndarray:
    """Zooming grid search over a box around the anchors."""
    lo = anchors.min(axis=0) - 0.5
    hi = anchors.max(axis=0) + 0.5
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    best = center
    for _ in range(zooms):
        xs = np.linspace(center[0] - half[0], center[0] + half[0], grid)
        ys = np.linspace(center[1] - half[1], center[1] + half[1], grid)
        cands = np.array([(x, y) for x in xs for y in ys])
        vals = _weighted_value(euclid_dist_many, cands, anchors, w)
        best = cands[int(np.argmin(vals))]
        center = best
        half = half * (2.5 / (grid - 1))  # keep the minimizer inside the next box
    return best


def disk_grid_mean(anchors: np.ndarray, w: np.ndarray,
                   grid: int = 41, zooms: int = 9, rmax: float = 0.949) -> np.ndarray:
    lo = anchors.min(axis=0) - 0.05
    hi = anchors.max(axis=0) + 0.05
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    best = center
    for _ in range(zooms):
        xs = np.linspace(center[0] - half[0], center[0] + half[0], grid)
        ys = np.linspace(center[1] - half[1], center[1] + half[1], grid)
        cands = np.array([(x, y) for x in xs for y in ys])
        keep = np.hypot(cands[:, 0], cands[:, 1]) <= rmax
        cands = cands[keep]
        vals = _weighted_value(disk_dist_many, cands, anchors, w)
        best = cands[int(np.argmin(vals))]
        center = best
        half = half * (2.5 / (grid - 1))
    return best


def river_grid_mean(anchors: np.ndarray, w: np.ndarray,
                    res: float = 2e-4) -> np.ndarray:
    """Brute-force search over the hull tree: spine interval plus legs."""
    xs = anchors[:, 0]
    ys = anchors[:, 1]
    cands = [anchors]
    if np.unique(xs).size > 1:
        lo, hi = float(xs.min()), float(xs.max())
        n = max(2, int(np.ceil((hi - lo) / res)) + 1)
        spine = np.column_stack([np.linspace(lo, hi, n), np.zeros(n)])
        cands.append(spine)
    for x0, y0 in zip(xs, ys):
        top = max(y0, 0.0)
        bot = min(y0, 0.0)
        if top == bot:
            continue
        n = max(2, int(np.ceil((top - bot) / res)) + 1)
        leg = np.column_stack([np.full(n, x0), np.linspace(bot, top, n)])
        cands.append(leg)
    C = np.vstack(cands)
    vals = _weighted_value(river_dist_many, C, anchors, w)
    return C[int(np.argmin(vals))]


def trapezoid(values: np.ndarray, h: float) -> float:
    """Composite trapezoid sum with uniform step."""
    return float(h * (0.5 * values[0] + values[1:-1].sum() + 0.5 * values[-1]))
