"""Time the compiled kernels against the NumPy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is run on the same inputs with both backends; outputs are
checked for agreement before timings are reported.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from bigd._backend import compiled, fallback
from bigd.gradients import integral_stack
from bigd.imageio import patch_grid
from bigd.sampling import sample_pattern


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(rng):
    # dense extraction: one 200x200 image at the default settings
    img = rng.integers(0, 256, (200, 200)).astype(np.float64)
    stack = integral_stack(img)
    grid = patch_grid(img.shape, 15, 2)
    pattern = sample_pattern(15, (1, 2, 3, 4), 4, 0)
    yield "dense_bigd 200x200 step 2", lambda k: k.dense_bigd(stack.tables, grid.rows, grid.cols, pattern.pairs)

    # hard assignment: one image's descriptors against K=128 centres
    X = rng.standard_normal((8649, 80))
    C = rng.standard_normal((128, 80))
    yield "nearest_center 8649x80, K=128", lambda k: k.nearest_center(X, C)

    # SVM: 200 images, VLAD length, 4 classes, 100 passes
    n, d, c = 200, 10240, 4
    Xs = rng.standard_normal((n, d)) / np.sqrt(d)
    Y = np.where(rng.integers(0, c, n)[None, :] == np.arange(c)[:, None], 1.0, -1.0)
    order = np.concatenate([rng.permutation(n) for _ in range(100)]).astype(np.int64)
    yield "svm_sgd n=200 d=10240 C=4", lambda k: k.svm_sgd(Xs, Y, 1.0 / (c * n), order, len(order) // 2, 1.0)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if compiled is None:
        print("compiled kernels not built; only the fallback can be timed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':34s} {'numpy [s]':>10s} {'cython [s]':>11s} {'speedup':>8s}")
    for name, run in cases(rng):
        t_py, out_py = best_of(lambda: run(fallback), args.repeat)
        if compiled is None:
            print(f"{name:34s} {t_py:10.4f} {'-':>11s} {'-':>8s}")
            continue
        t_c, out_c = best_of(lambda: run(compiled), args.repeat)
        if not np.allclose(out_py, out_c, rtol=1e-9, atol=1e-9):
            raise SystemExit(f"{name}: backends disagree")
        print(f"{name:34s} {t_py:10.4f} {t_c:11.4f} {t_py / t_c:7.1f}x")


if __name__ == "__main__":
    main()
