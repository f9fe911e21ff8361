"""Benchmark the compiled kernels against the NumPy fallback.

Usage:
    python3 benchmarks/bench_kernels.py [--sizes 512,1024,2048,4096] [--csv out.csv]

Each row times one kernel at one grid size for both backends and reports the
speedup of the compiled path.  The Chen-defect scan is cubic and only run at
the sizes the library itself would scan exhaustively.
"""

import argparse
import sys
import time

import numpy as np

from roughpaths.kernels import _ref

try:
    from roughpaths.kernels import _fast
except ImportError:
    _fast = None


def make_inputs(rng, n, d=2, p=3):
    times = np.linspace(0.0, 1.0, n + 1)
    x = np.ascontiguousarray(rng.standard_normal((n + 1, d)).cumsum(axis=0) * 0.1)
    xx0 = np.ascontiguousarray(rng.standard_normal((n + 1, d, d)).cumsum(axis=0) * 0.01)
    xx0[0] = 0.0
    y = np.ascontiguousarray(rng.standard_normal((n + 1, p)))
    yp = np.ascontiguousarray(rng.standard_normal((n + 1, p, d)))
    return times, x, xx0, y, yp


def cases(n, data):
    times, x, xx0, y, yp = data
    yield "pair_holder_max", lambda impl: impl.pair_holder_max(times, y, 0.45)
    yield "level2_pair_max", lambda impl: impl.level2_pair_max(times, x, xx0, 0.9)
    yield "remainder_pair_max", lambda impl: impl.remainder_pair_max(times, y, yp, x, 0.9)
    if n <= 256:
        yield "chen_defect_max_rp", lambda impl: impl.chen_defect_max_rp(x, xx0)


def time_call(fn, repeats=3):
    best = float("inf")
    value = None
    for _ in range(repeats):
        start = time.perf_counter()
        value = fn()
        best = min(best, time.perf_counter() - start)
    return best, value


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="256,512,1024,2048,4096")
    parser.add_argument("--csv", help="also write the table to this CSV file")
    args = parser.parse_args(argv)
    if _fast is None:
        print("compiled kernels not available; build with `python3 setup.py build_ext --inplace`")
        return 1
    sizes = [int(s) for s in args.sizes.split(",")]
    rng = np.random.default_rng(0)
    rows = []
    print("%-22s %6s %12s %12s %9s" % ("kernel", "n", "numpy [s]", "compiled [s]", "speedup"))
    for n in sizes:
        data = make_inputs(rng, n)
        for name, call in cases(n, data):
            t_ref, v_ref = time_call(lambda: call(_ref))
            t_fast, v_fast = time_call(lambda: call(_fast))
            assert np.isclose(v_ref, v_fast, rtol=1e-12), (name, n, v_ref, v_fast)
            speedup = t_ref / t_fast if t_fast > 0 else float("inf")
            rows.append((name, n, t_ref, t_fast, speedup))
            print("%-22s %6d %12.5f %12.5f %8.1fx" % (name, n, t_ref, t_fast, speedup))
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("kernel,n,numpy_seconds,compiled_seconds,speedup\n")
            for name, n, t_ref, t_fast, speedup in rows:
                fh.write("%s,%d,%.17g,%.17g,%.17g\n" % (name, n, t_ref, t_fast, speedup))
    return 0


if __name__ == "__main__":
    sys.exit(main())
