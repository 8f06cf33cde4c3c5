"""Fast marching with lattice-basis-reduced stencils for anisotropic eikonal equations."""

from ._backend import active_name as backend_name
from ._backend import available as available_backends
from ._backend import set_backend
from .bench import BenchResult, error_norms, run_case
from .cases import CaseSpec, case_metric, get_case, sample_metric
from .geodesic import Path, PathError, direction_at, extract_path, path_metric_length
from .grid import DistanceField, MetricGrid, SolveStats
from .hopflax import FacetSolution, facet_solve, stencil_update
from .io import read_field, render_levels, write_field
from .lbr import LatticeBasis, ReductionError, oracle_reduced_norms, reduce_basis
from .solver import fixed_point_residual, point_seeds, solve_agsi, solve_fixed_stencil, solve_fmlbr
from .stencil import (GridStencils, MeshReport, StencilMesh, build_grid_stencils, build_reduced_mesh,
                      classical_mesh, mesh_anisotropy_bound, validate_mesh)
from .tensor import SpdTensor, anisotropy_ratio, norm

__version__ = "0.1.0"

__all__ = [
    "SpdTensor", "norm", "anisotropy_ratio",
    "LatticeBasis", "ReductionError", "reduce_basis", "oracle_reduced_norms",
    "StencilMesh", "MeshReport", "GridStencils", "build_reduced_mesh", "classical_mesh", "validate_mesh",
    "mesh_anisotropy_bound", "build_grid_stencils",
    "FacetSolution", "facet_solve", "stencil_update",
    "MetricGrid", "DistanceField", "SolveStats",
    "solve_fmlbr", "solve_fixed_stencil", "solve_agsi", "fixed_point_residual", "point_seeds",
    "Path", "PathError", "direction_at", "extract_path", "path_metric_length",
    "CaseSpec", "get_case", "case_metric", "sample_metric",
    "BenchResult", "error_norms", "run_case", "read_field", "write_field", "render_levels",
    "set_backend", "backend_name", "available_backends",
]
