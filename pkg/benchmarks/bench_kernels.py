"""Compare the compiled factorization kernels against the pure NumPy fallback.

Run directly:  python3 benchmarks/bench_kernels.py [--sizes 64 128 256 512]

Both backends are imported explicitly, so this works regardless of which
one the package selected at import time.
"""

import argparse
import importlib
import time

import numpy as np

from h2slice.dense import pivot_tolerance


def _load_backends():
    fallback = importlib.import_module("h2slice._core.fallback")
    try:
        compiled = importlib.import_module("h2slice._core._kernels")
    except ImportError:
        compiled = None
    return compiled, fallback


def _sym(rng, n):
    A = rng.standard_normal((n, n))
    return np.ascontiguousarray((A + A.T) / 2)


def _bench_factor(mod, A0, reps):
    tol = pivot_tolerance(A0)
    best = float("inf")
    counts = None
    for _ in range(reps):
        A = A0.copy()
        ipiv = np.zeros(A.shape[0], dtype=np.int64)
        t0 = time.perf_counter()
        status = mod.bk_factor(A, ipiv, tol)
        dt = time.perf_counter() - t0
        assert status == 0
        best = min(best, dt)
        counts = mod.bk_inertia(A, ipiv, 0.0)
    return best, tuple(counts)


def _bench_inertia(mod, A0, reps):
    tol = pivot_tolerance(A0)
    A = A0.copy()
    ipiv = np.zeros(A.shape[0], dtype=np.int64)
    assert mod.bk_factor(A, ipiv, tol) == 0
    best = float("inf")
    counts = None
    for _ in range(reps):
        t0 = time.perf_counter()
        counts = mod.bk_inertia(A, ipiv, 0.0)
        best = min(best, time.perf_counter() - t0)
    return best, tuple(counts)


def _bench_jacobi(mod, A0, reps):
    best = float("inf")
    w = None
    for _ in range(reps):
        A = A0.copy()
        t0 = time.perf_counter()
        w, sweeps, off = mod.jacobi_eigvals(A, 1e-12, 30)
        best = min(best, time.perf_counter() - t0)
    return best, np.sort(np.asarray(w))


BENCHES = [
    ("bk_factor", _bench_factor),
    ("bk_inertia", _bench_inertia),
    ("jacobi_eigvals", _bench_jacobi),
]


def bench(sizes, reps):
    compiled, fallback = _load_backends()
    if compiled is None:
        print("compiled backend not built; timing fallback only")
    rng = np.random.default_rng(42)
    rows = []
    for n in sizes:
        A0 = _sym(rng, n)
        for name, fn in BENCHES:
            if name == "jacobi_eigvals" and n > 256:
                continue
            r = max(1, reps // 2) if name == "jacobi_eigvals" else reps
            tf, rf = fn(fallback, A0, r)
            if compiled is None:
                rows.append((name, n, float("nan"), tf, float("nan")))
                continue
            tc, rc = fn(compiled, A0, r)
            if name == "jacobi_eigvals":
                assert np.allclose(rc, rf, atol=1e-9 * n), f"jacobi mismatch at n={n}"
            else:
                assert rc == rf, f"backend disagreement in {name} at n={n}: {rc} vs {rf}"
            rows.append((name, n, tc, tf, tf / tc))

    print(f"{'kernel':<16s} {'n':>6s} {'compiled_ms':>12s} {'fallback_ms':>12s} {'speedup':>8s}")
    for name, n, tc, tf, sp in rows:
        print(f"{name:<16s} {n:>6d} {tc * 1e3:>12.3f} {tf * 1e3:>12.3f} {sp:>8.2f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256, 512])
    ap.add_argument("--reps", type=int, default=5)
    args = ap.parse_args()
    bench(args.sizes, args.reps)


if __name__ == "__main__":
    main()
