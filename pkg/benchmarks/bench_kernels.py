"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel and problem size with the best-of-N wall time
for each backend and the speedup. Without a built extension only the
fallback column is filled.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from lowdim import _fallback

try:
    from lowdim import _kernels as compiled
except ImportError:
    compiled = None


def _best(fn, repeat: int) -> float:
    number = max(1, int(0.2 / max(timeit.timeit(fn, number=1), 1e-6)))
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def cases(rng: np.random.Generator):
    for n, d in ((500, 1), (2000, 4), (2000, 128)):
        a, b = rng.normal(size=(n, d)), rng.normal(size=(n, d)) + 0.1
        yield f"directed_hausdorff n={n} d={d}", lambda m, a=a, b=b: m.directed_hausdorff(a, b)
    for B, C, H, k, s, p in ((32, 3, 32, 5, 2, 2), (32, 16, 16, 3, 1, 1)):
        x = rng.normal(size=(B, C, H, H))
        Ho = (H + 2 * p - k) // s + 1
        cols = rng.normal(size=(B * Ho * Ho, C * k * k))
        yield (f"im2col B={B} C={C} H={H} k={k}",
               lambda m, x=x, k=k, s=s, p=p: m.im2col(x, k, s, p))
        yield (f"col2im B={B} C={C} H={H} k={k}",
               lambda m, cols=cols, B=B, C=C, H=H, k=k, s=s, p=p: m.col2im(cols, B, C, H, H, k, s, p))


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':<40} {'python ms':>10} {'cython ms':>10} {'speedup':>8}")
    for name, call in cases(rng):
        t_py = _best(lambda: call(_fallback), args.repeat) * 1e3
        if compiled is None:
            print(f"{name:<40} {t_py:10.3f} {'-':>10} {'-':>8}")
            continue
        t_c = _best(lambda: call(compiled), args.repeat) * 1e3
        print(f"{name:<40} {t_py:10.3f} {t_c:10.3f} {t_py / t_c:8.2f}")


if __name__ == "__main__":
    main()
