"""Benchmark of the compiled kernels against the numpy reference backend.

Run:  python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from geoflow import _kernels_py

try:
    from geoflow import _kernels

    HAVE_CYTHON = True
except ImportError:
    _kernels = None
    HAVE_CYTHON = False


def timeit(fn, *args, repeat=5, number=10):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(number):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / number)
    return best


def bench_arakawa(backend, ny, nx):
    rng = np.random.default_rng(0)
    psi = rng.normal(size=(ny + 1, nx))
    psi[0] = 0.0
    psi[-1] = 1.0
    w = rng.normal(size=(ny + 1, nx))
    return timeit(backend.arakawa_channel, psi, w, 0.05, 0.04)


def bench_thomas(backend, nsys, n):
    rng = np.random.default_rng(1)
    lower = rng.normal(size=(nsys, n))
    upper = rng.normal(size=(nsys, n))
    diag = 4.0 + rng.random(size=(nsys, n))
    rhs = rng.normal(size=(nsys, n))
    fac = backend.thomas_factor(lower, diag, upper)
    return timeit(backend.thomas_solve, fac, rhs)


def bench_rigid(backend, nsteps):
    return timeit(
        backend.rigid_rk4_controlled,
        [1e-3, 1.0, 0.0], 0.8, 0.0, 3.1, 2.1, 1.0, 1e-3, nsteps, 1000,
        repeat=3, number=1,
    )


def main():
    rows = []
    cases = [
        ("arakawa 64x32", lambda b: bench_arakawa(b, 32, 64)),
        ("arakawa 128x64", lambda b: bench_arakawa(b, 64, 128)),
        ("arakawa 256x128", lambda b: bench_arakawa(b, 128, 256)),
        ("thomas 128 x n63", lambda b: bench_thomas(b, 128, 63)),
        ("rigid rk4 1e5 steps", lambda b: bench_rigid(b, 100_000)),
    ]
    for name, fn in cases:
        t_py = fn(_kernels_py)
        if HAVE_CYTHON:
            t_cy = fn(_kernels)
            rows.append((name, t_py, t_cy, t_py / t_cy))
        else:
            rows.append((name, t_py, None, None))

    print(f"{'kernel':<22} {'python':>12} {'cython':>12} {'speedup':>9}")
    for name, t_py, t_cy, sp in rows:
        if t_cy is None:
            print(f"{name:<22} {t_py * 1e3:>10.3f}ms {'n/a':>12} {'n/a':>9}")
        else:
            print(f"{name:<22} {t_py * 1e3:>10.3f}ms {t_cy * 1e3:>10.3f}ms {sp:>8.1f}x")
    if not HAVE_CYTHON:
        print("compiled backend not available; showing the numpy reference only")


if __name__ == "__main__":
    main()
