"""Compare the compiled and numpy moving-average backends.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from decomploss import kernels

SHAPES = [(32, 96, 7), (32, 336, 7), (256, 96, 21), (1, 17420, 7)]
KERNELS = [5, 25, 49]


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])
    if len(backends) == 1:
        print("compiled extension not built; timing the numpy backend only")
    rng = np.random.default_rng(0)
    print(f"{'shape':>16} {'k':>3} " + " ".join(f"{b + ' ms':>11}" for b in backends) + "  speedup  identical")
    for shape in SHAPES:
        x = rng.normal(size=shape)
        for k in KERNELS:
            times, outs = [], []
            for b in backends:
                outs.append(kernels.moving_average_3d(x, k, backend=b))
                n = max(1, int(0.2 / max(1e-6, timeit.timeit(lambda: kernels.moving_average_3d(x, k, backend=b), number=1))))
                best = min(timeit.repeat(lambda: kernels.moving_average_3d(x, k, backend=b), number=n, repeat=args.repeat))
                times.append(1e3 * best / n)
            same = all(np.array_equal(outs[0], o) for o in outs[1:])
            speed = f"{times[0] / times[-1]:7.2f}x" if len(times) > 1 else "      -"
            print(f"{str(shape):>16} {k:>3} " + " ".join(f"{t:11.3f}" for t in times) + f"  {speed}  {same}")


if __name__ == "__main__":
    main()
