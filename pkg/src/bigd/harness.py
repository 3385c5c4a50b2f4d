"""Dataset scanning, train/test protocols and repeated evaluation."""
from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classifier import default_lambda, svm_predict, svm_train
from .codebook import gmm_fit, kmeans_fit, subsample_descriptors
from .config import RunConfig
from .descriptor import DescriptorSet, extract_dense
from .encoding import encode
from .imageio import load_grayscale, patch_grid, resize
from .sampling import SamplingPattern, sample_pattern

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = {".png", ".pgm"}


class DatasetError(ValueError):
    pass


class ProtocolError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    root: Path
    classes: tuple
    files: tuple  # per class, tuple of paths
    groups: tuple | None = None  # per class, tuple of group tags

    @property
    def n_images(self) -> int:
        return sum(len(f) for f in self.files)

    def items(self):
        """``(index, class_index, path, group)`` for every image, class-major."""
        idx = 0
        for ci, paths in enumerate(self.files):
            for j, p in enumerate(paths):
                yield idx, ci, p, (self.groups[ci][j] if self.groups else None)
                idx += 1

    @property
    def labels(self) -> np.ndarray:
        return np.concatenate([np.full(len(f), ci, dtype=np.int64) for ci, f in enumerate(self.files)])

    def image_id(self, index: int) -> str:
        for i, ci, p, _ in self.items():
            if i == index:
                return f"{self.classes[ci]}/{Path(p).name}"
        raise IndexError(index)

    def image_ids(self) -> list[str]:
        return [f"{self.classes[ci]}/{Path(p).name}" for _, ci, p, _ in self.items()]


def _read_groups(path: Path) -> dict:
    mapping = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DatasetError(f"{path}: line {lineno}: expected '<class>/<file> <group>'")
        mapping[parts[0]] = parts[1]
    return mapping


def scan_dataset(root) -> Dataset:
    """One subdirectory per class; classes and files sorted lexicographically.

    An optional ``groups.txt`` at the root maps ``<class>/<file>`` to a
    physical-sample tag, enabling group hold-out protocols.
    """
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"dataset root {root} is not a directory")
    classes, files = [], []
    for d in sorted(p for p in root.iterdir() if p.is_dir()):
        imgs = tuple(sorted(p for p in d.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES))
        if not imgs:
            raise DatasetError(f"class {d.name!r} contains no PNG/PGM images")
        classes.append(d.name)
        files.append(imgs)
    if not classes:
        raise DatasetError(f"no class directories under {root}")
    groups = None
    gfile = root / "groups.txt"
    if gfile.exists():
        mapping = _read_groups(gfile)
        groups = []
        for name, imgs in zip(classes, files):
            tags = []
            for p in imgs:
                key = f"{name}/{p.name}"
                if key not in mapping:
                    raise DatasetError(f"{gfile}: no group for {key}")
                tags.append(mapping[key])
            groups.append(tuple(tags))
        groups = tuple(groups)
    return Dataset(root, tuple(classes), tuple(files), groups)


@dataclass(frozen=True)
class Protocol:
    mode: str  # random_half | random_ratio | ratio | group_holdout
    repetitions: int = 10
    seed: int = 0
    train: int = 0
    test: int = 0


def parse_protocol(text: str, repetitions: int = 10, seed: int = 0) -> Protocol:
    """``random_half``, ``random_ratio:<train>:<test>`` (images per class),
    ``ratio:<a>:<b>`` (proportional) or ``group_holdout:<train>:<test>``."""
    parts = text.strip().split(":")
    mode = parts[0]
    if mode == "random_half" and len(parts) == 1:
        return Protocol(mode, repetitions, seed)
    if mode in ("random_ratio", "ratio", "group_holdout") and len(parts) == 3:
        try:
            a, b = int(parts[1]), int(parts[2])
        except ValueError:
            raise ProtocolError(f"protocol {text!r}: counts must be integers") from None
        if a < 1 or b < 1:
            raise ProtocolError(f"protocol {text!r}: counts must be >= 1")
        return Protocol(mode, repetitions, seed, a, b)
    raise ProtocolError(f"unknown protocol {text!r}")


@dataclass(frozen=True)
class Split:
    train: np.ndarray
    test: np.ndarray


def _class_offsets(ds: Dataset) -> np.ndarray:
    return np.concatenate([[0], np.cumsum([len(f) for f in ds.files])])


def _group_assignments(tags, n_train, n_test):
    """Ordered (train_groups, test_groups) choices for one class."""
    uniq = sorted(set(tags))
    out = []
    for test in itertools.combinations(uniq, n_test):
        rest = [g for g in uniq if g not in test]
        out.append((tuple(rest[:n_train]), test))
    return uniq, out


def make_splits(ds: Dataset, p: Protocol) -> list[Split]:
    rng = np.random.default_rng(p.seed)
    offsets = _class_offsets(ds)
    counts = [len(f) for f in ds.files]
    mode, a, b = p.mode, p.train, p.test
    if mode == "ratio" and ds.groups is not None:
        n_groups = [len(set(g)) for g in ds.groups]
        if len(set(n_groups)) == 1 and n_groups[0] % (a + b) == 0:
            unit = n_groups[0] // (a + b)
            mode, a, b = "group_holdout", a * unit, b * unit
    if mode == "group_holdout":
        if ds.groups is None:
            raise ProtocolError("group_holdout needs a groups.txt file in the dataset root")
        n_groups = {c: len(set(g)) for c, g in zip(ds.classes, ds.groups)}
        if any(n < a + b for n in n_groups.values()):
            raise ProtocolError(f"group_holdout:{a}:{b} infeasible; groups per class: {n_groups}")
        return _group_splits(ds, p, a, b, rng, offsets)
    per_class = []
    for n in counts:
        if mode == "random_half":
            per_class.append((n // 2, n - n // 2))
        elif mode == "random_ratio":
            per_class.append((a, b))
        elif mode == "ratio":
            tr = int(round(n * a / (a + b)))
            per_class.append((tr, n - tr))
        else:
            raise ProtocolError(f"unknown protocol mode {mode!r}")
    bad = {c: n for c, n, (tr, te) in zip(ds.classes, counts, per_class) if tr < 1 or te < 1 or tr + te > n}
    if bad:
        raise ProtocolError(f"protocol {mode}:{a}:{b} infeasible; images per class: {dict(zip(ds.classes, counts))}")
    splits = []
    for _ in range(p.repetitions):
        train, test = [], []
        for ci, (tr, te) in enumerate(per_class):
            perm = rng.permutation(counts[ci]) + offsets[ci]
            train.append(np.sort(perm[:tr]))
            test.append(np.sort(perm[tr:tr + te]))
        splits.append(Split(np.concatenate(train), np.concatenate(test)))
    return splits


def _group_splits(ds, p, n_train, n_test, rng, offsets):
    splits = []
    plans = [_group_assignments(tags, n_train, n_test) for tags in ds.groups]
    for rep in range(p.repetitions):
        train, test = [], []
        for ci, tags in enumerate(ds.groups):
            uniq, assignments = plans[ci]
            if rep < len(assignments):
                tr_g, te_g = assignments[rep]
            else:
                perm = [uniq[i] for i in rng.permutation(len(uniq))]
                te_g, tr_g = perm[:n_test], perm[n_test:n_test + n_train]
            tags = np.asarray(tags)
            idx = np.arange(len(tags)) + offsets[ci]
            train.append(idx[np.isin(tags, list(tr_g))])
            test.append(idx[np.isin(tags, list(te_g))])
        splits.append(Split(np.concatenate(train), np.concatenate(test)))
    return splits


@dataclass
class RunReport:
    accuracies: list
    config: RunConfig
    notes: list = field(default_factory=list)

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std(self) -> float:
        # sample standard deviation; a single split reports 0
        if len(self.accuracies) < 2:
            return 0.0
        return float(np.std(self.accuracies, ddof=1))

    def metrics_text(self) -> str:
        lines = [f"repetitions={len(self.accuracies)}"]
        lines += [f"accuracy_split_{i + 1:02d}={a!r}" for i, a in enumerate(self.accuracies)]
        lines += [f"accuracy_mean={self.mean!r}", f"accuracy_std={self.std!r}"]
        return "\n".join(lines) + "\n"

    def text(self) -> str:
        out = [
            f"BIGD + {self.config.encoder.upper()} on {self.config.dataset}",
            f"accuracy: {self.mean:.2f} +/- {self.std:.2f} % over {len(self.accuracies)} splits",
            "per split: " + ", ".join(f"{a:.2f}" for a in self.accuracies),
        ]
        out += [f"note: {n}" for n in self.notes]
        out += ["", "[config]"] + self.config.to_lines()
        return "\n".join(out) + "\n"

    def write(self, directory) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        (d / "metrics.txt").write_text(self.metrics_text())
        (d / "report.txt").write_text(self.text())


def load_image(path, cfg: RunConfig) -> np.ndarray:
    img = load_grayscale(path)
    if cfg.resize is not None:
        img = resize(img, cfg.resize[0], cfg.resize[1], cfg.resize_method)
    return img


def make_pattern(cfg: RunConfig) -> SamplingPattern:
    return sample_pattern(cfg.patch_size, cfg.scales, cfg.n_per_scale, cfg.seed_pattern)


def _map(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


def extract_all(ds: Dataset, cfg: RunConfig, pattern: SamplingPattern | None = None) -> list[DescriptorSet]:
    """Descriptors of every image, stored as float32 (the interchange precision)."""
    pattern = make_pattern(cfg) if pattern is None else pattern
    ids = ds.image_ids()

    def work(item):
        idx, _, path, _ = item
        img = load_image(path, cfg)
        return extract_dense(img, pattern, cfg.step, image_id=ids[idx]).astype(np.float32)

    return _map(work, list(ds.items()), cfg.jobs)


def patch_count_note(ds: Dataset, cfg: RunConfig) -> str:
    _, _, path, _ = next(ds.items())
    shape = cfg.resize[::-1] if cfg.resize else load_grayscale(path).shape
    inside = len(patch_grid(shape, cfg.patch_size, cfg.step))
    border = math.ceil(shape[0] / cfg.step) * math.ceil(shape[1] / cfg.step)
    return (
        f"{shape[1]}x{shape[0]} image, step {cfg.step}: {inside} fully interior patches "
        f"(a lattice covering the whole image including borders would give {border})"
    )


def fit_model(cfg: RunConfig, train_sets, split_index: int):
    data = subsample_descriptors(train_sets, cfg.max_descriptors, [cfg.seed_codebook, split_index])
    data = np.asarray(data, dtype=np.float64)
    if cfg.encoder == "vlad":
        return kmeans_fit(data, cfg.K, cfg.kmeans_iters, seed=[cfg.seed_codebook, split_index])
    return gmm_fit(data, cfg.K, cfg.gmm_iters, seed=[cfg.seed_codebook, split_index], kmeans_iters=cfg.kmeans_iters)


def encode_sets(model, sets, cfg: RunConfig) -> np.ndarray:
    """Encoded rows as float32, matching the on-disk matrices."""

    def work(s):
        return encode(
            model, s.descriptors.astype(np.float64), cfg.encoder,
            fv_normalization=cfg.fv_normalization, pi_scaling=cfg.fv_pi_scaling,
        ).values

    return np.asarray(_map(work, list(sets), cfg.jobs), dtype=np.float32)


def train_classifier(cfg: RunConfig, X, y, split_index: int):
    n_classes = len(set(np.asarray(y).tolist()))
    lam = default_lambda(n_classes, len(y)) if cfg.svm_lambda is None else cfg.svm_lambda
    return svm_train(
        np.asarray(X, dtype=np.float64), y, lam=lam, max_iters=cfg.svm_iters_factor * len(y),
        seed=[cfg.seed_svm, split_index],
    )


def accuracy(pred, truth) -> float:
    return 100.0 * float(np.mean(np.asarray(pred) == np.asarray(truth)))


def check_provenance(descriptors, split: Split) -> None:
    """Fail if any test image's descriptors would reach codebook training."""
    train_ids = {descriptors[i].image_id for i in split.train}
    test_ids = {descriptors[i].image_id for i in split.test}
    leaked = train_ids & test_ids
    if leaked or len(np.intersect1d(split.train, split.test)):
        raise AssertionError(f"test images in codebook training data: {sorted(leaked)[:5]}")


def run_split(cfg: RunConfig, descriptors, labels, split: Split, split_index: int) -> float:
    check_provenance(descriptors, split)
    train_sets = [descriptors[i] for i in split.train]
    model = fit_model(cfg, train_sets, split_index)
    X_train = encode_sets(model, train_sets, cfg)
    X_test = encode_sets(model, [descriptors[i] for i in split.test], cfg)
    if not (np.isfinite(X_train).all() and np.isfinite(X_test).all()):
        raise FloatingPointError(f"non-finite encodings in split {split_index + 1}")
    svm = train_classifier(cfg, X_train, labels[split.train], split_index)
    pred = svm_predict(svm, X_test.astype(np.float64))
    return accuracy(pred, labels[split.test])


def evaluate(ds: Dataset, cfg: RunConfig, descriptors=None) -> RunReport:
    """Repeated train/test evaluation; codebooks are refit on each split's training images."""
    cfg.validate()
    protocol = parse_protocol(cfg.protocol, cfg.repetitions, cfg.seed_splits)
    splits = make_splits(ds, protocol)
    if descriptors is None:
        descriptors = extract_all(ds, cfg)
    labels = ds.labels
    accs = []
    for i, split in enumerate(splits):
        try:
            acc = run_split(cfg, descriptors, labels, split, i)
        except (ValueError, FloatingPointError) as exc:
            raise type(exc)(f"split {i + 1}: {exc}") from exc
        log.info("split %d/%d: accuracy %.2f%%", i + 1, len(splits), acc)
        accs.append(acc)
    return RunReport(accs, cfg, [patch_count_note(ds, cfg)])
