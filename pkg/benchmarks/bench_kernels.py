"""Compiled versus numpy zonal recurrence kernel.

Times ``fill_coefficients`` on raising graphs of growing size and checks
that both backends agree.  Usage::

    python benchmarks/bench_kernels.py [--cases 40:3,100:3,30:30] [--repeat 3]
"""

import argparse
import time

import numpy as np

from ewishart import _recurrence_py, kernels, zonal


def best_time(fn, args, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - start)
    return best, out


def parse_cases(text):
    cases = []
    for item in text.split(","):
        k, p = item.split(":")
        cases.append((int(k), int(p)))
    return cases


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--cases", default="20:20,30:30,60:3,100:3,140:3,100:4",
                        help="comma list of degree:max_length")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    if kernels.BACKEND != "cython":
        print("compiled kernel not available; only the numpy fallback is timed")
    print(f"{'degree':>6} {'length':>6} {'partitions':>10} {'numpy [s]':>10} {'cython [s]':>10} {'speedup':>8} {'max diff':>9}")
    for k, p in parse_cases(args.cases):
        graph = zonal.raising_graph(k, p)
        n = graph[3].shape[0]
        t_py, ref = best_time(_recurrence_py.fill_coefficients, graph, args.repeat)
        if kernels.BACKEND == "cython":
            t_c, fast = best_time(kernels.fill_coefficients, graph, args.repeat)
            diff = float(np.max(np.abs(fast - ref) / np.maximum(np.abs(ref), 1e-300)))
            print(f"{k:6d} {p:6d} {n:10d} {t_py:10.4f} {t_c:10.4f} {t_py / t_c:8.1f} {diff:9.1e}")
        else:
            print(f"{k:6d} {p:6d} {n:10d} {t_py:10.4f} {'-':>10} {'-':>8} {'-':>9}")


if __name__ == "__main__":
    main()
