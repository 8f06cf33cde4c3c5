"""Eikonal solvers on a MetricGrid: FM-LBR, fixed-stencil fast marching and AGSI."""

from __future__ import annotations

import math
import time

import numpy as np

from . import _backend
from .grid import DistanceField, MetricGrid, SolveStats
from .stencil import GridStencils, build_grid_stencils
from .tensor import norm

__all__ = [
    "solve_fmlbr",
    "solve_fixed_stencil",
    "solve_agsi",
    "fixed_point_residual",
    "residuals",
    "point_seeds",
    "normalize_seeds",
    "AGSI_TOL",
]

AGSI_TOL = 1e-8
FIXED_STENCILS = {"fm4": 2, "fm8": 2, "fm6": 3, "fm26": 3}


def normalize_seeds(metric: MetricGrid, seeds) -> dict:
    """{flat node: value} from (node, value) pairs; nodes may be flat or multi-indices."""
    out = {}
    for node, value in seeds:
        x = metric.flat_index(node)
        if not 0 <= x < metric.size:
            raise ValueError(f"seed node {node} outside the grid")
        value = float(value)
        if not (math.isfinite(value) and value >= 0.0):
            raise ValueError(f"seed values must be finite and nonnegative, got {value}")
        out[x] = min(value, out.get(x, math.inf))
    if not out:
        raise ValueError("empty seed set")
    return out


def point_seeds(metric: MetricGrid, point, value: float = 0.0) -> list:
    """Seeds for a physical source point.

    A point on a node seeds that node; otherwise the corners of the
    containing cell are seeded with ``value + ||corner - point||`` measured
    with the corner's tensor.
    """
    corners = metric.containing_cell(point)
    p = np.asarray(point, dtype=float)
    if len(corners) == 1:
        return [(corners[0], float(value))]
    out = []
    for c in corners:
        M = metric.tensor(c)
        out.append((c, float(value) + norm(M, tuple(metric.coords(c) - p))))
    return out


def _march(metric, st: GridStencils, seeds, label, t_pre, debug, backend):
    seeds = normalize_seeds(metric, seeds)
    core = _backend.get(backend)
    nodes = sorted(seeds)
    t0 = time.perf_counter()
    values, order, pushes, pops, updates = core.fast_march(st, nodes, [seeds[x] for x in nodes], debug)
    t1 = time.perf_counter()
    stats = SolveStats(
        solver=label,
        accepted_order=order,
        pushes=int(pushes),
        pops=int(pops),
        updates=int(updates),
        unreached=int(np.count_nonzero(~np.isfinite(values))),
        empty_stencils=int(np.count_nonzero(st.smask == 0)),
        time_preprocess=t_pre,
        time_solve=t1 - t0,
    )
    if debug:
        acc = values[order]
        if np.any(np.diff(acc) < 0):
            raise AssertionError("accepted values are not nondecreasing")
    return DistanceField(values, tuple(metric.dims), seeds, stats, st)


def solve_fmlbr(metric: MetricGrid, seeds, debug: bool = False, stencils: GridStencils | None = None,
                backend: str | None = None) -> DistanceField:
    """Single-pass FM-LBR. Timings include the stencil construction."""
    t0 = time.perf_counter()
    st = stencils if stencils is not None else build_grid_stencils(metric, "fmlbr", backend)
    t_pre = time.perf_counter() - t0 if stencils is None else 0.0
    return _march(metric, st, seeds, "fmlbr", t_pre, debug, backend)


def solve_fixed_stencil(metric: MetricGrid, kind: str, seeds, debug: bool = False,
                        backend: str | None = None) -> DistanceField:
    """Fast marching with a fixed stencil: fm4 / fm8 in 2D, fm6 / fm26 in 3D."""
    kind = kind.lower()
    if kind not in FIXED_STENCILS:
        raise ValueError(f"unknown fixed stencil {kind!r}; choose from {sorted(FIXED_STENCILS)}")
    if FIXED_STENCILS[kind] != metric.dim:
        raise ValueError(f"{kind} is a {FIXED_STENCILS[kind]}D stencil but the grid is {metric.dim}D")
    t0 = time.perf_counter()
    st = build_grid_stencils(metric, kind, backend)
    return _march(metric, st, seeds, kind, time.perf_counter() - t0, debug, backend)


def solve_agsi(metric: MetricGrid, seeds, tol: float = AGSI_TOL, stencil: str | None = None,
               max_updates: int | None = None, backend: str | None = None) -> DistanceField:
    """Adaptive Gauss-Seidel iteration driven by a priority queue on current values.

    The default stencil is the trivial triangulation of the grid (``tri2``:
    six triangles from splitting cells along (1, 1); ``kuhn3``: the 24
    Freudenthal tetrahedra). Any fixed stencil name is accepted.
    """
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    if stencil is None:
        stencil = "tri2" if metric.dim == 2 else "kuhn3"
    seeds = normalize_seeds(metric, seeds)
    core = _backend.get(backend)
    t0 = time.perf_counter()
    st = build_grid_stencils(metric, stencil, backend)
    t1 = time.perf_counter()
    cap = int(max_updates) if max_updates is not None else 1000 * metric.size
    nodes = sorted(seeds)
    values, pushes, pops, updates = core.agsi(st, nodes, [seeds[x] for x in nodes], float(tol), cap)
    t2 = time.perf_counter()
    stats = SolveStats(
        solver="agsi",
        pushes=int(pushes),
        pops=int(pops),
        updates=int(updates),
        unreached=int(np.count_nonzero(~np.isfinite(values))),
        empty_stencils=int(np.count_nonzero(st.smask == 0)),
        time_preprocess=t1 - t0,
        time_solve=t2 - t1,
    )
    return DistanceField(values, tuple(metric.dims), seeds, stats, st)


def residuals(field: DistanceField, stencils: GridStencils | None = None, backend: str | None = None) -> np.ndarray:
    """|Lambda(d, z) - d(z)| per node; 0 at seeds and at unreached nodes."""
    st = stencils if stencils is not None else field.stencils
    if st is None:
        raise ValueError("no stencils attached to the field; pass them explicitly")
    lam = _backend.get(backend).hopf_lax_all(st, field.values)
    v = field.values
    ok = np.isfinite(v)
    ok[list(field.seeds)] = False
    out = np.zeros_like(v)
    out[ok] = np.abs(lam[ok] - v[ok])
    return out


def fixed_point_residual(field: DistanceField, stencils: GridStencils | None = None,
                         metric: MetricGrid | None = None, backend: str | None = None) -> float:
    """max |Lambda(d, z) - d(z)| over non-seed nodes with finite value.

    ``stencils`` defaults to the ones the field was solved with; when only
    ``metric`` is given the FM-LBR stencils of that metric are used.
    """
    st = stencils if stencils is not None else field.stencils
    if st is None:
        if metric is None:
            raise ValueError("need stencils or a metric")
        st = build_grid_stencils(metric, "fmlbr", backend)
    r = residuals(field, st, backend)
    return float(r.max()) if r.size else 0.0
