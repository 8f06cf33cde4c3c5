"""Command line entry point: ``fmlbr {solve,geodesic,bench,reduce,validate-stencil}``."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import _backend
from .bench import SOLVERS, case_seeds, format_table, reference_solution, results_csv, run_case, solve_case
from .cases import CASES, get_case, sample_metric
from .geodesic import PathError, extract_path, path_metric_length
from .io import write_field, write_path_csv, write_pgm
from .lbr import reduce_basis
from .solver import AGSI_TOL
from .stencil import FIXED_KINDS, build_reduced_mesh, classical_mesh, mesh_anisotropy_bound, validate_mesh
from .tensor import SpdTensor, anisotropy_ratio, packed_size


def _floats(text: str) -> list:
    try:
        return [float(t) for t in text.replace(";", ",").split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None


def _ints(text: str) -> list:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from None


def _tensor(vals) -> SpdTensor:
    for d in (2, 3):
        if len(vals) == packed_size(d):
            return SpdTensor(d, tuple(vals))
        if len(vals) == d * d:
            return SpdTensor.from_matrix(np.array(vals).reshape(d, d))
    raise argparse.ArgumentTypeError("a tensor is 3 or 6 packed upper-triangle entries, or 4 or 9 matrix entries")


def _case_options(p, solver_default="fmlbr", multi=False):
    p.add_argument("--case", required=True, choices=sorted(CASES) + ["constant"])
    p.add_argument("--theta", type=float, default=None, help="rotation angle (surface-rotated)")
    p.add_argument("--tensor", type=_floats, default=None, help="tensor for --case constant")
    p.add_argument("--n", type=int, default=None, help="nodes per axis")
    p.add_argument("--dims", type=_ints, default=None, help="nodes per axis, comma separated")
    if multi:
        p.add_argument("--solver", action="append", choices=SOLVERS, default=None,
                       help="repeat for several solvers (default fmlbr, fm8 or fm6, agsi)")
    else:
        p.add_argument("--solver", choices=SOLVERS, default=solver_default)
    p.add_argument("--tol", type=float, default=AGSI_TOL, help="AGSI stopping tolerance")
    p.add_argument("--seed-node", type=_ints, default=None, help="grid multi-index of a single zero seed")


def _spec_and_dims(args):
    tensor = _tensor(args.tensor) if args.tensor is not None else None
    spec = get_case(args.case, theta=args.theta, tensor=tensor)
    if args.dims is not None:
        dims = tuple(args.dims)
    elif args.n is not None:
        dims = (args.n,) * spec.dim
    else:
        dims = spec.dims
    if len(dims) != spec.dim:
        raise SystemExit(f"error: {spec.name} needs {spec.dim} grid dimensions, got {len(dims)}")
    return spec, dims


def _solve(args):
    spec, dims = _spec_and_dims(args)
    metric = sample_metric(spec, dims)
    seeds = case_seeds(spec, metric, args.seed_node)
    field = solve_case(metric, args.solver, seeds, tol=args.tol)
    return spec, metric, field


def cmd_solve(args) -> int:
    spec, metric, field = _solve(args)
    st = field.stats
    print(f"case={spec.name} solver={args.solver} dims={'x'.join(map(str, metric.dims))} "
          f"time_s={st.time_total:.4f} max={field.finite_max():.6g} unreached={st.unreached}")
    if args.out:
        write_field(args.out, field.grid_values(), metric.bounds)
    if args.pgm:
        if metric.dim != 2:
            raise SystemExit("error: level images are 2D only")
        write_pgm(args.pgm, field.grid_values(), args.band)
    return 0


def cmd_geodesic(args) -> int:
    spec, metric, field = _solve(args)
    start = args.start if args.start is not None else spec.start
    if start is None:
        raise SystemExit(f"error: {spec.name} has no default start point; pass --start")
    try:
        path = extract_path(field, metric, np.asarray(start, dtype=float))
    except PathError as e:
        raise SystemExit(f"error: {e}") from None
    length = path_metric_length(path, metric)
    print(f"points={len(path)} d(start)={path.values[0]:.6g} length={length:.6g} "
          f"max_offset={path.max_offset():.3g}", file=sys.stderr)
    if args.out:
        write_path_csv(args.out, path.points)
    else:
        pts = path.points
        print(",".join(["x", "y", "z"][: pts.shape[1]]))
        for p in pts:
            print(",".join(repr(float(c)) for c in p))
    return 0


def cmd_bench(args) -> int:
    spec, dims = _spec_and_dims(args)
    solvers = args.solver or (["fmlbr", "fm8", "agsi"] if spec.dim == 2 else ["fmlbr", "fm6", "agsi"])
    if args.ref_n is not None:
        ref_dims = tuple(args.ref_n * n // dims[0] for n in dims) if spec.dim == 3 else (args.ref_n,) * 2
    else:
        ref_dims = tuple(4 * n for n in dims)
    ref = reference_solution(spec, ref_dims, args.ref_solver, tol=args.tol)
    results = run_case(spec, solvers, dims, seed_node=args.seed_node, reference=ref, tol=args.tol)
    text = results_csv(results)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    print(f"reference: {args.ref_solver} at {'x'.join(map(str, ref_dims))}", file=sys.stderr)
    print(format_table(results), file=sys.stderr)
    return 0


def cmd_reduce(args) -> int:
    M = _tensor(args.tensor)
    basis = reduce_basis(M)
    names = ["u1", "u2", "u3"][: M.dim]
    print("index," + ",".join(names) + ",norm")
    for i, (u, nrm) in enumerate(zip(basis.vectors, basis.norms(M))):
        print(f"{i}," + ",".join(str(c) for c in u) + f",{nrm!r}")
    print(f"# kappa={anisotropy_ratio(M):.6g} iterations={basis.iterations}", file=sys.stderr)
    return 0


def cmd_validate(args) -> int:
    if args.stencil:
        T = classical_mesh(args.stencil)
        M = SpdTensor.identity(T.dim) if args.tensor is None else _tensor(args.tensor)
    else:
        if args.tensor is None:
            raise SystemExit("error: pass --tensor or --stencil")
        M = _tensor(args.tensor)
        T = build_reduced_mesh(M)
    report = validate_mesh(M, T, n_directions=args.directions)
    gamma, kappa = mesh_anisotropy_bound(T)
    print(f"simplices={len(T)} vertices={len(T.vertices)}")
    print(report)
    print(f"anisotropy_bound={kappa!r} (min cosine {gamma:.6g})")
    return 0 if report.ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fmlbr", description=__doc__)
    ap.add_argument("--backend", choices=["cython", "python"], default=None, help="kernel backend")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a case and optionally write the field")
    _case_options(p)
    p.add_argument("--out", help="EIKFIELD output path")
    p.add_argument("--pgm", help="level-line image (2D)")
    p.add_argument("--band", type=float, default=None, help="level spacing for --pgm")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("geodesic", help="minimal path to the source as CSV")
    _case_options(p)
    p.add_argument("--start", type=_floats, default=None, help="physical start point")
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(func=cmd_geodesic)

    p = sub.add_parser("bench", help="errors against a refined reference, as CSV")
    _case_options(p, multi=True)
    p.add_argument("--ref-n", type=int, default=None, help="reference nodes along the first axis (default 4x)")
    p.add_argument("--ref-solver", choices=["fmlbr", "agsi"], default="fmlbr")
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("reduce", help="reduced basis of a tensor")
    p.add_argument("--tensor", type=_floats, required=True, help="packed upper triangle or full matrix")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("validate-stencil", help="check the mesh axioms")
    p.add_argument("--tensor", type=_floats, default=None)
    p.add_argument("--stencil", choices=sorted(FIXED_KINDS), default=None, help="a fixed stencil instead")
    p.add_argument("--directions", type=int, default=1000)
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.backend:
        _backend.set_backend(args.backend)
    try:
        return args.func(args)
    except (ValueError, argparse.ArgumentTypeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
