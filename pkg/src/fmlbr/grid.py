"""Cartesian grids carrying a tensor per node, and distance fields on them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .tensor import SpdTensor, packed_size

__all__ = ["MetricGrid", "DistanceField", "SolveStats"]


class MetricGrid:
    """Box grid with ``dims[i]`` nodes on ``[lo_i, hi_i]`` and packed tensors per node.

    ``tensors`` has shape ``(*dims, P)`` with P the packed size, C order, so
    the flat node index of ``(i, j, k)`` is ``np.ravel_multi_index``.
    """

    def __init__(self, dims, bounds, tensors, check: bool = True):
        dims = tuple(int(n) for n in dims)
        d = len(dims)
        if d not in (2, 3):
            raise ValueError(f"grids have 2 or 3 axes, got {d}")
        if any(n < 2 for n in dims):
            raise ValueError(f"need at least 2 nodes per axis, got {dims}")
        bounds = tuple((float(a), float(b)) for a, b in bounds)
        if len(bounds) != d or any(not b > a for a, b in bounds):
            raise ValueError(f"bad bounds {bounds} for dims {dims}")
        tensors = np.ascontiguousarray(tensors, dtype=np.float64)
        P = packed_size(d)
        if tensors.shape == (P,):
            tensors = np.broadcast_to(tensors, dims + (P,)).copy()
        if tensors.shape != dims + (P,):
            raise ValueError(f"tensor array shape {tensors.shape}, expected {dims + (P,)}")
        self.dims = dims
        self.bounds = bounds
        self.tensors = tensors
        self.spacing = tuple((b - a) / (n - 1) for (a, b), n in zip(bounds, dims))
        if check:
            _check_spd(tensors.reshape(-1, P), d)

    @classmethod
    def constant(cls, M: SpdTensor, dims, bounds) -> "MetricGrid":
        return cls(dims, bounds, np.asarray(M.entries))

    @property
    def dim(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))

    def flat_tensors(self) -> np.ndarray:
        return self.tensors.reshape(self.size, -1)

    def tensor(self, node) -> SpdTensor:
        idx = self.multi_index(node)
        return SpdTensor(self.dim, tuple(self.tensors[idx]))

    def scaled_tensors(self) -> np.ndarray:
        """(N, P) tensors rescaled by the spacing so they act on integer offsets."""
        d = self.dim
        h = self.spacing
        scale = np.array([h[i] * h[j] for i in range(d) for j in range(i, d)])
        return np.ascontiguousarray(self.flat_tensors() * scale)

    def multi_index(self, node) -> tuple:
        if np.ndim(node) == 0:
            return tuple(int(i) for i in np.unravel_index(int(node), self.dims))
        return tuple(int(i) for i in node)

    def flat_index(self, idx) -> int:
        if np.ndim(idx) == 0:
            return int(idx)
        return int(np.ravel_multi_index(tuple(int(i) for i in idx), self.dims))

    def coords(self, node) -> np.ndarray:
        idx = self.multi_index(node)
        return np.array([a + i * h for (a, _), i, h in zip(self.bounds, idx, self.spacing)])

    def axes(self) -> list:
        return [np.linspace(a, b, n) for (a, b), n in zip(self.bounds, self.dims)]

    def nearest_node(self, point) -> int:
        p = np.asarray(point, dtype=float)
        if p.shape != (self.dim,):
            raise ValueError(f"point of dimension {p.shape} on a {self.dim}D grid")
        idx = []
        for x, (a, b), h, n in zip(p, self.bounds, self.spacing, self.dims):
            if not (a - 1e-12 * (b - a) <= x <= b + 1e-12 * (b - a)):
                raise ValueError(f"point {tuple(p)} outside the domain {self.bounds}")
            idx.append(min(n - 1, max(0, int(round((x - a) / h)))))
        return self.flat_index(idx)

    def containing_cell(self, point) -> tuple:
        """Corner nodes of the grid cell containing ``point`` (one node if it lies on one)."""
        p = np.asarray(point, dtype=float)
        per_axis = []
        for x, (a, b), h, n in zip(p, self.bounds, self.spacing, self.dims):
            if not (a <= x <= b):
                raise ValueError(f"point {tuple(p)} outside the domain {self.bounds}")
            s = (x - a) / h
            r = round(s)
            if abs(s - r) <= 1e-9:
                per_axis.append([int(min(n - 1, max(0, r)))])
            else:
                lo = min(n - 2, int(math.floor(s)))
                per_axis.append([lo, lo + 1])
        nodes = np.stack(np.meshgrid(*per_axis, indexing="ij"), -1).reshape(-1, self.dim)
        return tuple(self.flat_index(i) for i in nodes)

    def interpolate(self, point) -> SpdTensor:
        """Tensor at a physical point, entries interpolated multilinearly (stays SPD)."""
        p = np.asarray(point, dtype=float)
        idx = []
        wts = []
        for x, (a, b), h, n in zip(p, self.bounds, self.spacing, self.dims):
            s = min(max((x - a) / h, 0.0), n - 1.0)
            i = min(int(math.floor(s)), n - 2)
            idx.append((i, i + 1))
            wts.append((1.0 - (s - i), s - i))
        acc = np.zeros(self.tensors.shape[-1])
        for corner in np.ndindex(*(2,) * self.dim):
            w = 1.0
            for k, c in enumerate(corner):
                w *= wts[k][c]
            if w != 0.0:
                acc += w * self.tensors[tuple(idx[k][c] for k, c in enumerate(corner))]
        return SpdTensor(self.dim, tuple(acc))

    def same_domain(self, other: "MetricGrid", rtol: float = 1e-12) -> bool:
        if self.dim != other.dim:
            return False
        return all(
            abs(a - c) <= rtol * max(1.0, abs(a)) and abs(b - e) <= rtol * max(1.0, abs(b))
            for (a, b), (c, e) in zip(self.bounds, other.bounds)
        )


def _check_spd(t: np.ndarray, d: int) -> None:
    if not np.all(np.isfinite(t)):
        raise ValueError("tensor entries must be finite")
    if d == 2:
        a, b, c = t.T
        scale = np.maximum(np.abs(a), np.abs(c))
        ok = (a > 1e-12 * scale) & (a * c - b * b > 1e-12 * scale**2)
    else:
        a11, a12, a13, a22, a23, a33 = t.T
        scale = np.maximum.reduce([np.abs(a11), np.abs(a22), np.abs(a33)])
        m2 = a11 * a22 - a12 * a12
        m3 = (a11 * (a22 * a33 - a23 * a23) - a12 * (a12 * a33 - a23 * a13)
              + a13 * (a12 * a23 - a22 * a13))
        ok = (a11 > 1e-12 * scale) & (m2 > 1e-12 * scale**2) & (m3 > 1e-12 * scale**3)
    if not np.all(ok):
        bad = int(np.flatnonzero(~ok)[0])
        raise ValueError(f"tensor at node {bad} is not positive definite")


@dataclass
class SolveStats:
    solver: str = ""
    accepted_order: np.ndarray | None = None
    pushes: int = 0
    pops: int = 0
    updates: int = 0
    unreached: int = 0
    empty_stencils: int = 0
    time_preprocess: float = 0.0
    time_solve: float = 0.0

    @property
    def time_total(self) -> float:
        return self.time_preprocess + self.time_solve


@dataclass
class DistanceField:
    """Values per node (flat, C order) with the seed set and solver statistics."""

    values: np.ndarray
    dims: tuple
    seeds: dict
    stats: SolveStats = field(default_factory=SolveStats)
    stencils: object = None

    def grid_values(self) -> np.ndarray:
        return self.values.reshape(self.dims)

    def is_seed(self, node: int) -> bool:
        return int(node) in self.seeds

    def finite_max(self) -> float:
        v = self.values[np.isfinite(self.values)]
        return float(v.max()) if v.size else 0.0
