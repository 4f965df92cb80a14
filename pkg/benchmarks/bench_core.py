"""Compiled kernels against the numpy fallback.

Times ``tail_sqrt_sums`` at every observation (the work behind one least
concave majorant) and the upper hull, and reports the largest relative
difference between the two implementations.

    python benchmarks/bench_core.py [--sizes 1000,10000,100000] [--repeat 3]
"""

import argparse
import time

import numpy as np

from wicksell import _pycore

try:
    from wicksell import _core
except ImportError:  # pragma: no cover
    _core = None


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="1000,10000,100000")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--fallback-limit", type=int, default=30_000, help="skip the O(n^2) fallback above this size")
    args = ap.parse_args(argv)
    if _core is None:
        raise SystemExit("compiled extension not built; run pip install -e . first")

    rng = np.random.default_rng(0)
    print(f"{'kernel':<16}{'n':>9}{'compiled s':>13}{'fallback s':>13}{'speedup':>10}{'max rel diff':>14}")
    for n in (int(v) for v in args.sizes.split(",")):
        z = np.sort(rng.uniform(size=n) * rng.uniform(size=n) ** 2)
        tc, a = best_of(lambda: _core.tail_sqrt_sums(z, z), args.repeat)
        if n <= args.fallback_limit:
            tp, b = best_of(lambda: _pycore.tail_sqrt_sums(z, z), 1)
            diff = float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))
            print(f"{'tail_sqrt_sums':<16}{n:>9}{tc:>13.4f}{tp:>13.4f}{tp / tc:>10.1f}{diff:>14.2e}")
        else:
            print(f"{'tail_sqrt_sums':<16}{n:>9}{tc:>13.4f}{'skipped':>13}{'':>10}{'':>14}")

        x = np.concatenate([[0.0], z])
        y = np.concatenate([[0.0], np.sqrt(z) + 0.01 * rng.normal(size=n)])
        tc, a = best_of(lambda: _core.upper_hull(x, y), args.repeat)
        tp, b = best_of(lambda: _pycore.upper_hull(x, y), 1)
        same = "identical" if np.array_equal(a, b) else "DIFFERENT"
        print(f"{'upper_hull':<16}{n:>9}{tc:>13.4f}{tp:>13.4f}{tp / tc:>10.1f}{same:>14}")


if __name__ == "__main__":
    main()
