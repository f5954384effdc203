"""Time every kernel under the numba and numpy backends.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Numba functions are called once before timing so compilation is excluded.
Each row reports the best of ``--repeat`` runs and checks that both
backends return the same result.
"""

import argparse
import time

import numpy as np
from scipy import signal

from pseudobench import kernels


def _cases(rng):
    rate = 250.0
    sos = signal.butter(4, (8.0, 30.0), btype="bandpass", fs=rate, output="sos")
    x = rng.standard_normal((8, int(600 * rate)))

    n = 200_000
    starts = np.cumsum(rng.integers(100, 2000, size=n // 50))
    starts = np.concatenate([[0], starts])
    total = int(starts[-1]) + 1000
    w, s = 500, 250
    onsets = np.arange(0, total - w + 1, s)

    ranks2 = np.arange(2, 2 * 22 + 1, 2, dtype=np.int64)
    target = int(ranks2.sum() * 0.7)

    wins = rng.standard_normal((2000, 8, 500))
    rows = rng.standard_normal((4000, 500))
    return [
        ("sosfilt 8ch x 10min", "sosfilt", (sos, x)),
        (f"window_events {len(onsets)} windows", "window_events", (onsets, w, starts, total)),
        ("wilcoxon_count_ge n=22", "wilcoxon_count_ge", (ranks2, target)),
        ("scatter 2000 x 8 x 500", "scatter", (wins,)),
        ("autocorr 4000 x 500 lag 6", "autocorr", (rows, 6)),
    ]


def _best(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times), out


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=1e-9, atol=1e-12)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    backends = [("numpy", kernels.numpy_backend)]
    if kernels.numba_backend is not None:
        backends.insert(0, ("numba", kernels.numba_backend))
    cases = _cases(np.random.default_rng(args.seed))

    print(f"{'kernel':<34}" + "".join(f"{name:>12}" for name, _ in backends) + f"{'speedup':>10}  match")
    for label, fname, fargs in cases:
        results = []
        for _, mod in backends:
            fn = getattr(mod, fname)
            fn(*fargs)  # warm-up (JIT compile for numba)
            results.append(_best(fn, fargs, args.repeat))
        line = f"{label:<34}" + "".join(f"{t * 1e3:>10.2f}ms" for t, _ in results)
        if len(results) == 2:
            line += f"{results[1][0] / results[0][0]:>9.2f}x  {_same(results[0][1], results[1][1])}"
        print(line)


if __name__ == "__main__":
    main()
