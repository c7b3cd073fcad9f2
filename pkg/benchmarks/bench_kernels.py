"""Compiled vs numpy kernels for the pole search.

Usage::

    python3 benchmarks/bench_kernels.py [--n 2000 4000] [--repeat 5]

Reports the best-of-``repeat`` wall time for the bracket bisection alone
and for a full ``find_poles`` call with each backend swapped in.
"""
import argparse
import contextlib
import timeit

import numpy as np

from qst_channel import ModelParams, find_poles, kernels
from qst_channel import _kernels_py
from qst_channel.spectral import parity_weights

try:
    from qst_channel import _kernels as _compiled
except ImportError:
    _compiled = None


@contextlib.contextmanager
def backend(module):
    saved = kernels.bisect_roots, kernels.parity_eval
    kernels.bisect_roots, kernels.parity_eval = module.bisect_roots, module.parity_eval
    try:
        yield
    finally:
        kernels.bisect_roots, kernels.parity_eval = saved


def brackets(params):
    pw = parity_weights(params)
    keep = pw.plus > 0
    e, w = pw.energies[keep], pw.plus[keep]
    pad = 1.0 + abs(params.impurity_energy) + w.sum()
    lo = np.concatenate([[e[0] - pad], e])
    hi = np.concatenate([e, [e[-1] + pad]])
    return lo, hi, e, w


def best(stmt, repeat):
    return min(timeit.repeat(stmt, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[500, 2000, 4000])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    backends = [("python", _kernels_py)]
    if _compiled is not None:
        backends.insert(0, ("cython", _compiled))
    else:
        print("compiled extension not available; timing the numpy fallback only")

    print(f"{'N':>6} {'kernel':<12} " + " ".join(f"{name:>10}" for name, _ in backends)
          + "   speedup")
    for n in args.n:
        params = ModelParams(n, n // 4 + 1, 0.1, 0.3)
        lo, hi, e, w = brackets(params)
        rows = {"bisect": [], "find_poles": []}
        for _, module in backends:
            rows["bisect"].append(best(
                lambda: module.bisect_roots(lo, hi, params.impurity_energy, e, w),
                args.repeat))
            with backend(module):
                rows["find_poles"].append(best(lambda: find_poles(params), args.repeat))
        for kernel, times in rows.items():
            cells = " ".join(f"{t * 1e3:>8.2f}ms" for t in times)
            ratio = f"{times[-1] / times[0]:>8.1f}x" if len(times) > 1 else ""
            print(f"{n:>6} {kernel:<12} {cells} {ratio}")


if __name__ == "__main__":
    main()
