"""Time the numba and numpy kernel backends on the hot paths.

Run with ``python3 benchmarks/bench_kernels.py [--n 200] [--reps 3]``. Each
kernel is warmed up once (this triggers numba compilation) before timing, and
results from both backends are checked for agreement.
"""

import argparse
import time

import numpy as np

from coseg._backend import HAS_NUMBA, load_kernels


def _time(fn, reps):
    fn()
    best = np.inf
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=200, help="series length")
    ap.add_argument("--p", type=int, default=5, help="passive columns")
    ap.add_argument("--perms", type=int, default=499, help="permutation replicates")
    ap.add_argument("--reps", type=int, default=3)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    Z = rng.standard_normal((args.n, args.p))
    Z[args.n // 2:] += 1.0
    perms = np.array([rng.permutation(args.n) for _ in range(args.perms)], dtype=np.int64)
    starts = np.array([0], dtype=np.int64)
    stops = np.array([args.n], dtype=np.int64)
    Xf = rng.standard_normal((args.n, 11))
    yf = rng.integers(0, 3, args.n).astype(np.int64)
    idx = np.arange(args.n, dtype=np.int64)
    feats = np.arange(4, dtype=np.int64)

    backends = ["numpy"] + (["numba"] if HAS_NUMBA else [])
    results = {}
    print(f"n={args.n} p={args.p} permutations={args.perms}")
    print(f"{'kernel':<24}" + "".join(f"{b:>12}" for b in backends))
    rows = {}
    for name in backends:
        k = load_kernels(name)
        D = k.alpha_distances(Z, 1.0)
        results[name] = (
            k.split_scan(D, 30, False),
            k.permutation_max_stats(D, starts, stops, perms[:20], 30, False),
        )
        rows.setdefault("alpha_distances", []).append(_time(lambda: k.alpha_distances(Z, 1.0), args.reps))
        rows.setdefault("split_scan", []).append(_time(lambda: k.split_scan(D, 30, False), args.reps))
        rows.setdefault(f"permutations x{args.perms}", []).append(_time(
            lambda: k.permutation_max_stats(D, starts, stops, perms, 30, False), 1))
        rows.setdefault("gini_best_split", []).append(_time(
            lambda: k.gini_best_split(Xf, yf, idx, feats, 3, 2), args.reps))
    for kernel, times in rows.items():
        print(f"{kernel:<24}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times))
    if len(backends) == 2:
        (s1, p1), (s2, p2) = results["numpy"], results["numba"]
        assert s1[:2] == s2[:2] and abs(s1[2] - s2[2]) < 1e-9, "split_scan disagrees"
        assert np.allclose(p1, p2, rtol=1e-12, atol=1e-9), "permutation stats disagree"
        print("backends agree")


if __name__ == "__main__":
    main()
