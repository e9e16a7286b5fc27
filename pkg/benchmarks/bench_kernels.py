"""Compare the compiled and numpy kernels.

Usage::

    python benchmarks/bench_kernels.py [--repeat 20] [--grids 102x350 203x700 405x1400]

Prints the median wall time per call for the tridiagonal solve and the full
forward march on each grid, plus the maximum difference between backends.
"""

import argparse
import timeit

import numpy as np

from hpcond import _kernels
from hpcond.forward import default_pde, solve


def _median_time(fn, repeat):
    return float(np.median(timeit.repeat(fn, number=1, repeat=repeat)))


def bench_thomas(sizes, repeat, rng):
    print("thomas (tridiagonal solve)")
    print(f"{'n':>8} {'numba ms':>10} {'numpy ms':>10} {'max |dx|':>10}")
    for n in sizes:
        lower, upper = rng.uniform(-1, 0, n), rng.uniform(-1, 0, n)
        diag = 2.5 + rng.uniform(0, 1, n)
        rhs = rng.standard_normal(n)
        _kernels.thomas_numba(lower, diag, upper, rhs)  # compile
        a = _median_time(lambda: _kernels.thomas_numba(lower, diag, upper, rhs), repeat)
        b = _median_time(lambda: _kernels.thomas_numpy(lower, diag, upper, rhs), repeat)
        diff = np.max(np.abs(_kernels.thomas_numba(lower, diag, upper, rhs)[0] - _kernels.thomas_numpy(lower, diag, upper, rhs)[0]))
        print(f"{n:>8} {a * 1e3:>10.3f} {b * 1e3:>10.3f} {diff:>10.2g}")


def bench_march(grids, repeat):
    k = lambda t: np.arctan(t / 30.0) + 0.45
    print("forward march (full solve)")
    print(f"{'grid':>10} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8} {'max |dT|':>10}")
    for nr, nt in grids:
        cfg = default_pde(Nr=nr, Nt=nt)
        solve(k, cfg, backend="numba")  # compile
        a = _median_time(lambda: solve(k, cfg, backend="numba"), repeat)
        b = _median_time(lambda: solve(k, cfg, backend="numpy"), max(3, repeat // 4))
        diff = np.max(np.abs(solve(k, cfg, backend="numba").values - solve(k, cfg, backend="numpy").values))
        print(f"{f'{nr}x{nt}':>10} {a * 1e3:>10.3f} {b * 1e3:>10.3f} {b / a:>8.1f} {diff:>10.2g}")


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=20)
    p.add_argument("--grids", nargs="+", default=["22x50", "102x350", "203x700", "405x1400"])
    p.add_argument("--sizes", nargs="+", type=int, default=[22, 102, 1000, 10000])
    args = p.parse_args(argv)
    if not _kernels.HAS_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    grids = [tuple(int(v) for v in g.lower().split("x")) for g in args.grids]
    bench_thomas(args.sizes, args.repeat, np.random.default_rng(0))
    print()
    bench_march(grids, args.repeat)


if __name__ == "__main__":
    main()
