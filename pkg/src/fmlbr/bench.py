"""Error norms against refined references, benchmark runs and result tables."""

from __future__ import annotations

import csv
import io as _io
import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .cases import CaseSpec, get_case, sample_metric
from .grid import DistanceField, MetricGrid
from .solver import AGSI_TOL, normalize_seeds, point_seeds, solve_agsi, solve_fixed_stencil, solve_fmlbr

__all__ = ["BenchResult", "Reference", "error_norms", "case_seeds", "solve_case", "reference_solution",
           "run_case", "CSV_HEADER", "results_csv", "format_table", "SOLVERS"]

CSV_HEADER = ["case", "solver", "nx", "ny", "nz", "time_s", "linf", "l1", "unreached"]
SOLVERS = ("fmlbr", "fm4", "fm8", "fm6", "fm26", "agsi")


@dataclass
class BenchResult:
    case: str
    solver: str
    dims: tuple
    time_s: float
    linf: float
    l1: float
    unreached: int
    pushes: int = 0
    pops: int = 0
    updates: int = 0

    def row(self) -> list:
        nz = self.dims[2] if len(self.dims) > 2 else 1
        return [self.case, self.solver, self.dims[0], self.dims[1], nz, f"{self.time_s:.6f}",
                repr(self.linf), repr(self.l1), self.unreached]


@dataclass
class Reference:
    field: DistanceField
    metric: MetricGrid
    solver: str


def error_norms(field: DistanceField, metric: MetricGrid, reference: Reference | DistanceField,
                ref_metric: MetricGrid | None = None) -> tuple:
    """(L-inf, mean L1) of ``field - reference`` at the field's nodes.

    The reference is interpolated multilinearly. Nodes where either the field
    or the interpolated reference is not finite are left out.
    """
    if isinstance(reference, Reference):
        ref_field, ref_metric = reference.field, reference.metric
    else:
        ref_field = reference
    if ref_metric is None:
        raise ValueError("need the reference grid")
    if not metric.same_domain(ref_metric):
        raise ValueError(f"domain mismatch: {metric.bounds} vs {ref_metric.bounds}")
    if any(r < n for r, n in zip(ref_metric.dims, metric.dims)):
        raise ValueError("the reference grid is coarser than the field grid")
    d = field.values
    if ref_metric.dims == metric.dims:
        ref = ref_field.values
    else:
        interp = RegularGridInterpolator(ref_metric.axes(), ref_field.grid_values(), method="linear",
                                         bounds_error=False, fill_value=None)
        pts = np.stack(np.meshgrid(*metric.axes(), indexing="ij"), -1).reshape(-1, metric.dim)
        # clamp against roundoff at the domain edge
        for k, (a, b) in enumerate(ref_metric.bounds):
            np.clip(pts[:, k], a, b, out=pts[:, k])
        with np.errstate(invalid="ignore"):
            ref = interp(pts)
    ok = np.isfinite(d) & np.isfinite(ref)
    if not ok.any():
        return math.inf, math.inf
    err = np.abs(d[ok] - ref[ok])
    return float(err.max()), float(err.mean())


def case_seeds(spec: CaseSpec, metric: MetricGrid, seed_node=None) -> list:
    """Seeds for a case: an explicit node gets value 0, else the case's source point."""
    if seed_node is not None:
        return [(metric.flat_index(seed_node), 0.0)]
    return point_seeds(metric, spec.source)


def solve_case(metric: MetricGrid, solver: str, seeds, tol: float = AGSI_TOL, agsi_stencil=None,
               backend=None) -> DistanceField:
    solver = solver.lower()
    if solver == "fmlbr":
        return solve_fmlbr(metric, seeds, backend=backend)
    if solver == "agsi":
        return solve_agsi(metric, seeds, tol=tol, stencil=agsi_stencil, backend=backend)
    if solver in ("fm4", "fm8", "fm6", "fm26"):
        return solve_fixed_stencil(metric, solver, seeds, backend=backend)
    raise ValueError(f"unknown solver {solver!r}; choose from {SOLVERS}")


def reference_solution(spec: CaseSpec, ref_dims, solver: str = "fmlbr", seed_node=None, tol: float = AGSI_TOL,
                       backend=None) -> Reference:
    metric = sample_metric(spec, ref_dims)
    if seed_node is not None:
        raise ValueError("explicit seed nodes are not transferable to the reference grid; use the source point")
    field = solve_case(metric, solver, case_seeds(spec, metric), tol=tol, backend=backend)
    return Reference(field, metric, solver)


def run_case(case, solvers=("fmlbr", "fm8", "agsi"), dims=None, ref_dims=None, seed_node=None,
             reference: Reference | str = "fmlbr", tol: float = AGSI_TOL, theta=None, agsi_stencil=None,
             backend=None) -> list:
    """Solve a case with each solver and measure errors against a refined reference.

    ``reference`` is a solver id for the reference run (default FM-LBR at 4x
    the resolution) or a precomputed :class:`Reference`. Times cover stencil
    construction plus the solve, not the metric sampling.
    """
    spec = case if isinstance(case, CaseSpec) else get_case(case, theta=theta)
    dims = tuple(int(n) for n in (dims if dims is not None else spec.dims))
    if isinstance(reference, str):
        if ref_dims is None:
            ref_dims = tuple(4 * n for n in dims)
        reference = reference_solution(spec, ref_dims, reference, tol=tol, backend=backend)
    metric = sample_metric(spec, dims)
    seeds = case_seeds(spec, metric, seed_node)
    normalize_seeds(metric, seeds)
    out = []
    for s in solvers:
        t0 = time.perf_counter()
        f = solve_case(metric, s, seeds, tol=tol, agsi_stencil=agsi_stencil, backend=backend)
        elapsed = time.perf_counter() - t0
        linf, l1 = error_norms(f, metric, reference)
        st = f.stats
        out.append(BenchResult(spec.name, s, dims, elapsed, linf, l1, st.unreached, st.pushes, st.pops,
                               st.updates))
    return out


def results_csv(results, header: bool = True) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(CSV_HEADER)
    for r in results:
        w.writerow(r.row())
    return buf.getvalue()


def format_table(results) -> str:
    """Plain text table; errors are shown multiplied by 100."""
    lines = [f"{'case':<16} {'solver':<6} {'dims':<14} {'time_s':>9} {'linf*100':>9} {'l1*100':>9} {'unreached':>9}"]
    for r in results:
        dims = "x".join(str(n) for n in r.dims)
        lines.append(f"{r.case:<16} {r.solver:<6} {dims:<14} {r.time_s:9.3f} {100 * r.linf:9.3f} "
                     f"{100 * r.l1:9.3f} {r.unreached:9d}")
    return "\n".join(lines)
