"""Compare the compiled and numpy image-source kernels.

Usage::

    python benchmarks/bench_kernels.py [--orders 2 4 6 8] [--repeats 20]

Prints the median time per impulse response for each backend and the
largest absolute difference between their outputs.
"""

import argparse
import statistics
import time

import numpy as np

from roomcurve import _pykernels

try:
    from roomcurve import _ckernels
except ImportError:
    _ckernels = None


def _case(order):
    src = np.array([1.1, 2.3, 1.0])
    mic = np.array([1.1, 2.3, 1.05])
    dims = np.array([4.5, 3.7, 2.6])
    beta = np.array([0.9, 0.85, 0.8, 0.92, 0.7, 0.75])
    return src, mic, dims, beta, order, 16000.0, 343.0, 8


def _median_time(fn, args, repeats):
    fn(*args)  # warm caches
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--orders", type=int, nargs="+", default=[2, 4, 6, 8])
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args(argv)

    print(f"{'order':>5} {'images':>7} {'python ms':>10} {'cython ms':>10} {'speedup':>8} {'max |diff|':>11}")
    for order in args.orders:
        case = _case(order)
        n_images = len(_pykernels._image_table(order))
        t_py = _median_time(_pykernels.image_source_rir, case, args.repeats)
        if _ckernels is None:
            print(f"{order:>5} {n_images:>7} {t_py * 1e3:>10.3f} {'n/a':>10} {'n/a':>8} {'n/a':>11}")
            continue
        t_cy = _median_time(_ckernels.image_source_rir, case, args.repeats)
        diff = np.max(np.abs(_pykernels.image_source_rir(*case) - _ckernels.image_source_rir(*case)))
        print(f"{order:>5} {n_images:>7} {t_py * 1e3:>10.3f} {t_cy * 1e3:>10.3f} {t_py / t_cy:>7.1f}x {diff:>11.2e}")
    if _ckernels is None:
        print("compiled extension not built; only the numpy kernel was timed")


if __name__ == "__main__":
    main()
