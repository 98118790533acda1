"""Time the compiled kernels against their numpy fallbacks.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Both implementations are imported directly, so the comparison does not
depend on ``ZZB_PURE_PYTHON``. Results are checked for agreement before
timing.
"""

import argparse
import timeit

import numpy as np

from zzbound import _kernels_py

try:
    from zzbound import _kernels as compiled
except ImportError:  # pragma: no cover
    compiled = None


def map_error_case(n, M, seed=0):
    rng = np.random.default_rng(seed)
    q = np.ascontiguousarray(rng.uniform(0.0, 1.0, size=(n, M)))
    q[rng.uniform(size=q.shape) < 0.1] = 0.0
    return (q, 0.7, 0.5)


def posterior_case(ny, nx, seed=0):
    rng = np.random.default_rng(seed)
    x = np.sort(rng.normal(size=nx) * 3)
    logw = -0.5 * x**2
    y = np.linspace(-6, 6, ny)
    lo = np.searchsorted(x, y - 4.0).astype(np.int64)
    hi = np.searchsorted(x, y + 4.0).astype(np.int64)
    return (y, x, logw, lo, hi, 0.3)


def bench(name, args, repeat):
    fast = getattr(compiled, name)
    slow = getattr(_kernels_py, name)
    a, b = fast(*args), slow(*args)
    for u, v in zip(np.atleast_2d(a), np.atleast_2d(b)):
        np.testing.assert_allclose(u, v, rtol=1e-10, atol=1e-14)
    t_fast = min(timeit.repeat(lambda: fast(*args), number=1, repeat=repeat))
    t_slow = min(timeit.repeat(lambda: slow(*args), number=1, repeat=repeat))
    return t_fast, t_slow


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if compiled is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    cases = [
        ("weighted_map_error", "n=4096, M=2", map_error_case(4096, 2)),
        ("weighted_map_error", "n=4096, M=4", map_error_case(4096, 4)),
        ("weighted_map_error", "n=65536, M=3", map_error_case(65536, 3)),
        ("posterior_moments", "ny=256, nx=2048", posterior_case(256, 2048)),
        ("posterior_moments", "ny=1024, nx=8192", posterior_case(1024, 8192)),
    ]
    print(f"{'kernel':<20} {'case':<18} {'cython [ms]':>12} {'numpy [ms]':>12} {'speedup':>8}")
    for name, label, case in cases:
        t_fast, t_slow = bench(name, case, args.repeat)
        print(f"{name:<20} {label:<18} {1e3 * t_fast:12.3f} {1e3 * t_slow:12.3f} {t_slow / t_fast:8.1f}")


if __name__ == "__main__":
    main()
