"""Time the compiled and pure-Python kernels on the same problems and check they agree.

    python3 benchmarks/compare_backends.py [--sizes 65,129] [--case seismic]
"""

import argparse
import time

import numpy as np

from fmlbr import _backend
from fmlbr.bench import case_seeds
from fmlbr.cases import get_case, sample_metric
from fmlbr.solver import solve_agsi, solve_fixed_stencil, solve_fmlbr


def _time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--case", default="seismic")
    ap.add_argument("--sizes", default="65,129")
    ap.add_argument("--repeat", type=int, default=1)
    args = ap.parse_args()
    if "cython" not in _backend.available():
        raise SystemExit("the compiled core is not built; run pip install -e . first")
    spec = get_case(args.case)
    runs = {
        "fmlbr": lambda m, s, b: solve_fmlbr(m, s, backend=b),
        "fm8": lambda m, s, b: solve_fixed_stencil(m, "fm8" if m.dim == 2 else "fm26", s, backend=b),
        "agsi": lambda m, s, b: solve_agsi(m, s, backend=b),
    }
    print(f"{'solver':<6} {'dims':<10} {'python_s':>10} {'cython_s':>10} {'speedup':>8}  identical")
    for n in (int(t) for t in args.sizes.split(",")):
        dims = (n,) * spec.dim
        metric = sample_metric(spec, dims)
        seeds = case_seeds(spec, metric)
        for name, run in runs.items():
            tp, fp = _time(lambda: run(metric, seeds, "python"), args.repeat)
            tc, fc = _time(lambda: run(metric, seeds, "cython"), args.repeat)
            same = np.array_equal(fp.values, fc.values)
            print(f"{name:<6} {'x'.join(map(str, dims)):<10} {tp:10.3f} {tc:10.4f} {tp / tc:8.1f}  {same}")


if __name__ == "__main__":
    main()
