"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py`` (the lines are repeated in the
terminal summary) or directly with ``python3 tests/test_acceptance.py``.
"""
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import naive_channels, naive_descriptor  # noqa: E402

from bigd import cli  # noqa: E402
from bigd.codebook import Codebook, GmmModel, gmm_fit, kmeans_fit, log_likelihood  # noqa: E402
from bigd.config import RunConfig  # noqa: E402
from bigd.descriptor import extract_dense, patch_descriptor  # noqa: E402
from bigd.encoding import fisher_gradients, fv_encode, vlad_encode  # noqa: E402
from bigd.gradients import block_mean, integral_stack, sobel  # noqa: E402
from bigd.harness import Dataset, evaluate, extract_all, make_splits, parse_protocol, scan_dataset  # noqa: E402
from bigd.sampling import block_extent, block_inside, draw_coordinates, sample_pattern  # noqa: E402
from bigd.synthetic import write_corpus  # noqa: E402

RESULTS = []


def record(number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} [{number:2d}] {title}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


# 1 ---------------------------------------------------------------------------
def test_01_integral_image_oracle():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        img = rng.integers(0, 256, (32, 32)).astype(np.float64)
        stack = integral_stack(img)
        maps = sobel(img).stack()
        for _ in range(200):
            s = int(rng.integers(1, 6))
            r, c = rng.integers(0, 33 - s, 2)
            for ch in range(5):
                got = block_mean(stack, ch, (r, c), s)
                want = maps[ch, r:r + s, c:c + s].mean()
                err = abs(got - want) / max(abs(want), 1e-300) if want != 0 else abs(got)
                worst = max(worst, err)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 5.0
    record(1, "integral-image oracle", ok,
           f"max rel err {worst:.1e} (<= 1e-9) over 50 images x 200 queries x 5 channels, {elapsed:.2f} s (< 5 s)")


# 2 ---------------------------------------------------------------------------
def test_02_descriptor_oracle():
    rng = np.random.default_rng(2)
    img = rng.integers(0, 256, (48, 48)).astype(np.float64)
    stack = integral_stack(img)
    channels = naive_channels(img)
    worst, checked = 0.0, 0
    for k in range(5):
        L = int(rng.choice([5, 7, 11, 15, 19]))
        scales = sorted(set(int(s) for s in rng.integers(1, min(L, 6) + 1, 3)))
        pattern = sample_pattern(L, scales, int(rng.integers(1, 5)), seed=int(rng.integers(1 << 30)))
        half = L // 2
        for _ in range(20):
            center = rng.integers(half, 48 - half, 2)
            got = patch_descriptor(stack, pattern, center)
            want = naive_descriptor(img, pattern.pairs, center, channels)
            worst = max(worst, float(np.abs(got - want).max()))
            checked += 1
    record(2, "descriptor oracle", worst <= 1e-6,
           f"max abs err {worst:.1e} (<= 1e-6) over {checked} patches (5 patterns x 20 patches)")


# 3 ---------------------------------------------------------------------------
def test_03_illumination_invariance():
    rng = np.random.default_rng(3)
    img = rng.integers(0, 200, (60, 60)).astype(np.float64)
    pattern = sample_pattern(15, (1, 2, 3, 4), 4, 0)
    a = extract_dense(img, pattern, 2).descriptors
    b = extract_dense(img + 37, pattern, 2).descriptors
    changed = int((a != b).sum())
    record(3, "illumination invariance", changed == 0,
           f"{changed} of {a.size} components changed after adding 37 (exact equality required)")


# 4 ---------------------------------------------------------------------------
def test_04_dimensions():
    rng = np.random.default_rng(4)
    cfg = RunConfig()
    pattern = sample_pattern(cfg.patch_size, cfg.scales, cfg.n_per_scale, cfg.seed_pattern)
    desc = extract_dense(rng.integers(0, 256, (40, 40)).astype(np.float64), pattern, cfg.step)
    d = desc.dim
    cb = Codebook(rng.normal(size=(cfg.K, d)))
    gmm = GmmModel(np.full(cfg.K, 1 / cfg.K), rng.normal(size=(cfg.K, d)), np.ones((cfg.K, d)))
    v, f = vlad_encode(cb, desc).dim, fv_encode(gmm, desc).dim
    record(4, "dimensions", (d, v, f) == (80, 10_240, 20_480),
           f"descriptor {d} (80), VLAD {v} (10240), IFV {f} (20480)")


# 5 ---------------------------------------------------------------------------
def test_05_fisher_gradient_check():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    model = GmmModel(rng.dirichlet(np.ones(2)), rng.normal(0, 2, (2, 3)), rng.uniform(0.3, 2.0, (2, 3)))
    X = rng.normal(0, 2, (10, 3))
    g_mean, _ = fisher_gradients(model, X)
    eps = 1e-6
    fd = np.zeros_like(g_mean)
    for k in range(2):
        for j in range(3):
            up, dn = model.means.copy(), model.means.copy()
            up[k, j] += eps
            dn[k, j] -= eps
            fd[k, j] = (log_likelihood(GmmModel(model.priors, up, model.variances), X)
                        - log_likelihood(GmmModel(model.priors, dn, model.variances), X)) / (2 * eps)
    rel = float(np.max(np.abs(g_mean - fd) / np.abs(fd)))
    elapsed = time.perf_counter() - t0
    record(5, "Fisher vector gradient check", rel <= 1e-5 and elapsed < 1.0,
           f"max rel err {rel:.1e} (<= 1e-5) vs central differences, {elapsed:.3f} s (< 1 s)")


# 6 ---------------------------------------------------------------------------
def test_06_em_monotonicity():
    worst_ll, worst_wcss = 0.0, 0.0
    for seed in range(20):
        r = np.random.default_rng(600 + seed)
        d = int(r.integers(1, 6))
        X = np.concatenate([r.normal(r.uniform(-4, 4, d), r.uniform(0.3, 2), (int(r.integers(20, 80)), d))
                            for _ in range(int(r.integers(1, 5)))])
        K = int(r.integers(1, 7))
        ll = np.array(gmm_fit(X, K, max_iters=50, tol=0.0, seed=seed).loglik_history)
        wc = np.array(kmeans_fit(X, K, max_iters=50, tol=0.0, seed=seed).wcss_history)
        # drops relative to the magnitude of the objective
        worst_ll = max(worst_ll, float(np.max(-np.diff(ll) / np.abs(ll[:-1]), initial=0.0)))
        worst_wcss = max(worst_wcss, float(np.max(np.diff(wc) / np.maximum(wc[:-1], 1e-300), initial=0.0)))
    ok = worst_ll <= 1e-9 and worst_wcss <= 1e-9
    record(6, "EM / k-means monotonicity", ok,
           f"largest relative log-likelihood drop {worst_ll:.1e}, largest relative WCSS rise {worst_wcss:.1e} "
           f"(<= 1e-9) over 20 datasets")


# 7 ---------------------------------------------------------------------------
def test_07_sampling_statistics():
    x = draw_coordinates(np.random.default_rng(7), 15, 100_000)
    sd = float(x.std(ddof=1))
    bad = 0
    for seed in range(50):
        p = sample_pattern(15, (1, 2, 3, 4), 4, seed)
        for s, xr, xc, yr, yc in p.pairs:
            bad += not (block_inside((xr, xc), s, 15) and block_inside((yr, yc), s, 15))
            lo, hi = block_extent(s)
            bad += not all(-7 <= v + lo and v + hi <= 7 for v in (xr, xc, yr, yc))
    ok = abs(sd - 3.0) / 3.0 <= 0.05 and bad == 0
    record(7, "sampling statistics", ok,
           f"std of 1e5 draws {sd:.4f} (3 +/- 5%), {bad} of 800 pairs outside the patch")


# 8 and 9 share one generated corpus ------------------------------------------
@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    return write_corpus(tmp_path_factory.mktemp("acceptance") / "synthetic", n_per_class=40, size=64, seed=0)


@pytest.mark.slow
def test_08_end_to_end_synthetic(corpus):
    t0 = time.perf_counter()
    ds = scan_dataset(corpus)
    cfg = RunConfig(dataset=str(corpus), patch_size=15, step=4, K=32).validate()
    desc = extract_all(ds, cfg)
    vlad = evaluate(ds, cfg, desc)
    ifv = evaluate(ds, cfg.replace(encoder="ifv"), desc)
    elapsed = time.perf_counter() - t0
    ok = vlad.mean >= 95.0 and ifv.mean >= 95.0 and elapsed < 600 and len(vlad.accuracies) == 10
    record(8, "end-to-end synthetic benchmark", ok,
           f"VLAD {vlad.mean:.2f} +/- {vlad.std:.2f} %, IFV {ifv.mean:.2f} +/- {ifv.std:.2f} % (>= 95%), "
           f"10 random-half splits, {elapsed:.0f} s (< 600 s)")


@pytest.mark.slow
def test_09_determinism(corpus, tmp_path):
    args = ["-q", "pipeline", "--dataset", str(corpus), "--step", "4", "--K", "32"]
    codes = [cli.main(args + ["-o", str(tmp_path / name)]) for name in ("a", "b")]
    a = (tmp_path / "a" / "metrics.txt").read_bytes()
    b = (tmp_path / "b" / "metrics.txt").read_bytes()
    record(9, "determinism", codes == [0, 0] and a == b,
           f"two pipeline runs, metrics files {'bit-identical' if a == b else 'differ'} ({len(a)} bytes)")


# 10 --------------------------------------------------------------------------
def _shaped(n_classes, per_class, groups=None):
    files = tuple(tuple(Path(f"{c}/{i}.png") for i in range(per_class)) for c in range(n_classes))
    tags = None
    if groups:
        tags = tuple(tuple(f"g{i * groups // per_class}" for i in range(per_class)) for _ in range(n_classes))
    return Dataset(Path("."), tuple(str(c) for c in range(n_classes)), files, tags)


def test_10_protocol_counts():
    rows = [
        ("Brodatz", 32, 64, None, "random_half", 32, 32),
        ("CUReT", 61, 92, None, "random_half", 46, 46),
        ("KTH-TIPS", 10, 81, None, "random_half", 40, 41),
        ("KTH-TIPS-2a", 11, 432, 4, "group_holdout:3:1", 324, 108),
        ("KTH-TIPS-2b", 11, 432, 4, "group_holdout:3:1", 324, 108),
    ]
    mismatches = []
    for name, n_classes, per_class, groups, protocol, n_train, n_test in rows:
        ds = _shaped(n_classes, per_class, groups)
        for split in make_splits(ds, parse_protocol(protocol, 10, 0)):
            tr = np.bincount(ds.labels[split.train], minlength=n_classes)
            te = np.bincount(ds.labels[split.test], minlength=n_classes)
            if not (np.all(tr == n_train) and np.all(te == n_test)):
                mismatches.append(name)
    record(10, "protocol counts", not mismatches,
           "train/test per class 32/32, 46/46, 40/41, 324/108, 324/108 over 10 splits each"
           + (f"; mismatches: {sorted(set(mismatches))}" if mismatches else ""))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
