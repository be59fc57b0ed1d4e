"""Time the compiled lattice reductions against the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``.
"""
import argparse
import sys
import timeit

import numpy as np

from gaborprop import _kernels_py

try:
    from gaborprop import _kernels as _compiled
except ImportError:
    _compiled = None


def cases(rng):
    x = np.arange(-64.0, 64.0 + 1e-9, 0.25)
    xi = np.arange(-64.0, 64.0 + 1e-9, 1 / 16)
    mag = rng.random((x.size, xi.size))
    yield ("cone_shell_reduce p=inf", "cone_shell_reduce",
           (x, xi, mag, 64, 1.0, 64.0, 0, 6, np.inf, 0.0, 0.25 / 16))
    yield ("cone_shell_reduce p=2", "cone_shell_reduce",
           (x, xi, mag, 64, 1.0, 64.0, 0, 6, 2.0, 0.0, 0.25 / 16))
    labels = rng.integers(-1, 400, size=2_000_000)
    yield ("binned_max_sum 2e6", "binned_max_sum", (labels, rng.random(labels.size), 400))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _compiled is None:
        print("compiled extension not built; only the numpy backend is timed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':28s} {'numpy [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for label, name, call_args in cases(rng):
        def best(mod):
            fn = getattr(mod, name)
            return 1e3 * min(timeit.repeat(lambda: fn(*call_args), number=1, repeat=args.repeat))
        t_py = best(_kernels_py)
        if _compiled is None:
            print(f"{label:28s} {t_py:12.2f} {'-':>12s} {'-':>8s}")
            continue
        t_cy = best(_compiled)
        print(f"{label:28s} {t_py:12.2f} {t_cy:12.2f} {t_py / t_cy:8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
