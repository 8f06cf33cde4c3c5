"""Minimal paths by offset-corrected descent through stencil facets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .grid import DistanceField, MetricGrid
from .stencil import GridStencils

__all__ = ["Path", "direction_at", "extract_path", "path_metric_length", "PathError"]


class PathError(RuntimeError):
    """Raised when the descent cannot proceed (unreached start, non-decreasing step)."""


@dataclass
class Path:
    nodes: list
    offsets: list  # physical vectors, offsets[0] = 0
    coords: list  # physical coordinates of the nodes
    values: list = field(default_factory=list)

    @property
    def points(self) -> np.ndarray:
        return np.array([c + u for c, u in zip(self.coords, self.offsets)])

    def max_offset(self) -> float:
        return max((float(np.linalg.norm(u)) for u in self.offsets), default=0.0)

    def __len__(self) -> int:
        return len(self.nodes)


def _stencils(field: DistanceField, stencils):
    st = stencils if stencils is not None else field.stencils
    if st is None:
        raise ValueError("no stencils attached to the field; pass them explicitly")
    return st


def direction_at(field: DistanceField, z: int, stencils: GridStencils | None = None,
                 metric: MetricGrid | None = None, backend: str | None = None):
    """(v, facet nodes, weights) from the unfiltered argmin facet at node z.

    ``v = sum_i w_i (z_i - z)`` in physical coordinates.
    """
    st = _stencils(field, stencils)
    z = int(z)
    if field.is_seed(z):
        raise ValueError(f"node {z} is a seed; no descent direction there")
    if not math.isfinite(field.values[z]):
        raise ValueError(f"node {z} is unreached")
    val, s, verts, w = _backend.get(backend).hopf_lax_argmin(st, field.values, z)
    if s < 0:
        raise PathError(f"no admissible facet at node {z}")
    offs = st.vertex_offsets(z)[list(verts)] * np.asarray(st.spacing)
    v = np.zeros(st.dim)
    for wi, o in zip(w, offs):
        v += wi * o
    strides = np.array([int(np.prod(st.dims[k + 1:])) for k in range(st.dim)], np.int64)
    nodes = tuple(int(z + st.vertex_offsets(z)[i] @ strides) for i in verts)
    return v, nodes, tuple(w)


def extract_path(field: DistanceField, metric: MetricGrid, start, stencils: GridStencils | None = None,
                 backend: str | None = None) -> Path:
    """Descend from ``start`` (node index, multi-index or physical point) to a seed."""
    st = _stencils(field, stencils)
    if isinstance(start, (tuple, list, np.ndarray)) and np.asarray(start).dtype.kind == "f":
        x = metric.nearest_node(start)
    else:
        x = metric.flat_index(start)
    vals = field.values
    if not math.isfinite(vals[x]):
        raise PathError(f"start node {x} is unreached")
    u = np.zeros(metric.dim)
    path = Path([x], [u.copy()], [metric.coords(x)], [float(vals[x])])
    for _ in range(metric.size):
        if field.is_seed(x):
            return path
        v, nodes, _w = direction_at(field, x, st, metric, backend)
        vv = float(v @ v)
        if not vv > 0.0:
            raise PathError(f"zero descent direction at node {x}")
        p = metric.coords(x) + u
        best = None
        for zj in nodes:
            cz = metric.coords(zj)
            lam = max(0.0, float((cz - p) @ v) / vv)
            res = p + lam * v - cz
            r = float(res @ res)
            if best is None or r < best[0]:
                best = (r, zj, res, cz)
        _, xn, un, cz = best
        if not vals[xn] < vals[x]:
            raise PathError(f"values not strictly decreasing at node {x}: {vals[xn]} >= {vals[x]}")
        x, u = xn, un
        path.nodes.append(x)
        path.offsets.append(u.copy())
        path.coords.append(cz)
        path.values.append(float(vals[x]))
    raise PathError("descent did not reach a seed within N steps")


def path_metric_length(path, metric: MetricGrid, metric_fn=None, subdivisions: int = 1) -> float:
    """Sum of segment lengths, each by the midpoint rule.

    The tensor is interpolated multilinearly from the grid unless
    ``metric_fn(point) -> SpdTensor`` is given; ``subdivisions`` splits each
    segment into equal parts before applying the rule.
    """
    pts = path.points if isinstance(path, Path) else np.asarray(path, dtype=float)
    if len(pts) == 0:
        raise ValueError("empty path")
    evaluate = metric_fn if metric_fn is not None else metric.interpolate
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        step = (b - a) / subdivisions
        for k in range(subdivisions):
            mid = a + (k + 0.5) * step
            M = evaluate(mid).matrix()
            total += math.sqrt(max(float(step @ M @ step), 0.0))
    return total
