"""Time the NMF kernels under the numba and numpy backends.

    python3 benchmarks/bench_kernels.py [--repeats 5] [--iters 2000]

Numba compile time is excluded by a warm-up call. Run with
RANKWITNESS_DISABLE_NUMBA=1 to time the numpy path alone.
"""
import argparse
import statistics
import time

import numpy as np

from rankwitness import _accel, _kernels
from rankwitness.nnrank import nmf_upper_bound

SHAPES = [(3, 3, 2), (5, 5, 3), (8, 8, 4), (16, 16, 6)]


def problem(n, m, r, seed=0):
    rng = np.random.default_rng(seed)
    M = rng.random((n, r)) @ rng.random((r, m))
    M /= M.sum()
    W, H = rng.random((n, r)), rng.random((r, m))
    s = np.sqrt(M.sum() / (W @ H).sum())
    return M, W * s, H * s


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times), statistics.median(times)


def bench(backend, repeats, iters):
    rows = []
    with _accel.use_backend(backend):
        for n, m, r in SHAPES:
            M, W, H = problem(n, m, r)
            _kernels.mu_iterations(M, W.copy(), H.copy(), 2)  # compile
            _kernels.hals_iterations(M, W.copy(), H.copy(), 2)
            mu = best_of(lambda: _kernels.mu_iterations(M, W.copy(), H.copy(), iters), repeats)
            hals = best_of(lambda: _kernels.hals_iterations(M, W.copy(), H.copy(), iters), repeats)
            full = best_of(lambda: nmf_upper_bound(M, r, restarts=8, max_iters=iters), repeats)
            rows.append(((n, m, r), mu[0], hals[0], full[0]))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--iters", type=int, default=2000)
    args = ap.parse_args()
    backends = ["numpy"] + (["numba"] if _accel.HAVE_NUMBA else [])
    results = {b: bench(b, args.repeats, args.iters) for b in backends}
    print(f"{'shape (n,m,r)':>14} {'backend':>8} {'MU':>10} {'HALS':>10} {'nmf x8':>10}")
    for i, (shape, *_) in enumerate(results["numpy"]):
        for b in backends:
            _, mu, hals, full = results[b][i]
            print(f"{str(shape):>14} {b:>8} {mu * 1e3:9.2f}ms {hals * 1e3:9.2f}ms {full * 1e3:9.2f}ms")
        if "numba" in results:
            num, jit = results["numpy"][i], results["numba"][i]
            print(f"{'':>14} {'speedup':>8} {num[1] / jit[1]:9.1f}x  {num[2] / jit[2]:9.1f}x  {num[3] / jit[3]:9.1f}x")
    if "numba" not in results:
        print("numba unavailable or disabled: numpy timings only")


if __name__ == "__main__":
    main()
