"""Command-line front end: one subcommand per pipeline stage.

All stages share a work directory (``--output``)::

    W/config.txt                  resolved configuration (reused by later stages)
    W/pattern.txt                 sampling pattern
    W/descriptors/NNNNN.f32       one float32 matrix per image
    W/descriptors/index.tsv       index, image id, class id, class name, path, group
    W/descriptors/note.txt        patch-count note for the report
    W/split_XX/codebook.txt       k-means centres (vlad) or gmm.txt (ifv)
    W/split_XX/{train,test}.f32   encodings, with {train,test}_labels.txt
    W/split_XX/svm.txt            one-vs-rest weights
    W/report.txt, W/metrics.txt   run report

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numeric failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import itertools
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, formats
from ._backend import BACKEND
from .classifier import svm_predict
from .config import ConfigError, RunConfig, load_config, parse_value
from .descriptor import DescriptorSet
from .harness import (
    Dataset, DatasetError, ProtocolError, RunReport, accuracy, check_provenance, encode_sets, evaluate,
    extract_all, fit_model, make_pattern, make_splits, parse_protocol, patch_count_note, scan_dataset,
    train_classifier,
)
from .imageio import ImageFormatError
from .sampling import PatternFormatError, load_pattern, save_pattern

log = logging.getLogger("bigd")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

# keys that change the descriptors; sweeps reuse extraction across the others
EXTRACTION_KEYS = ("dataset", "patch_size", "step", "scales", "n_per_scale", "seed_pattern", "resize", "resize_method")


class StageError(Exception):
    """A required upstream artifact is missing."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class Workdir:
    def __init__(self, root):
        self.root = Path(root)
        self.config = self.root / "config.txt"
        self.pattern = self.root / "pattern.txt"
        self.descriptors = self.root / "descriptors"
        self.index = self.descriptors / "index.tsv"
        self.note = self.descriptors / "note.txt"

    def split(self, i: int) -> Path:
        return self.root / f"split_{i + 1:02d}"

    @staticmethod
    def require(path: Path, stage: str) -> Path:
        if not path.exists():
            raise StageError(f"missing {path}; run `bigd {stage}` first")
        return path


def _digest(paths) -> str:
    h = hashlib.sha256()
    for p in paths:
        h.update(formats.file_sha256(p).encode())
    return h.hexdigest()


def _wrote(path) -> None:
    log.info("wrote %s sha256=%s", path, formats.file_sha256(path))


def _read(path) -> None:
    log.info("read %s sha256=%s", path, formats.file_sha256(path))


# ---------------------------------------------------------------- artifacts

def _model_path(w: Workdir, cfg: RunConfig, i: int) -> Path:
    return w.split(i) / ("codebook.txt" if cfg.encoder == "vlad" else "gmm.txt")


def _load_model(path: Path, cfg: RunConfig):
    return formats.load_codebook(path) if cfg.encoder == "vlad" else formats.load_gmm(path)


def _save_model(model, path: Path, cfg: RunConfig) -> None:
    (formats.save_codebook if cfg.encoder == "vlad" else formats.save_gmm)(model, path)


def _write_descriptors(w: Workdir, ds: Dataset, sets) -> None:
    w.descriptors.mkdir(parents=True, exist_ok=True)
    rows = ["index\timage_id\tclass_id\tclass\tpath\tgroup"]
    for (idx, ci, path, group), s in zip(ds.items(), sets):
        formats.write_matrix(w.descriptors / f"{idx:05d}.f32", s.descriptors)
        rows.append(f"{idx}\t{s.image_id}\t{ci}\t{ds.classes[ci]}\t{path}\t{'-' if group is None else group}")
    w.index.write_text("\n".join(rows) + "\n")


def _load_descriptors(w: Workdir, cfg: RunConfig):
    """Rebuild the dataset and its descriptor sets from the extraction artifacts."""
    Workdir.require(w.index, "extract")
    lines = w.index.read_text().splitlines()[1:]
    classes, files, groups, sets = [], [], [], []
    for line in lines:
        idx, image_id, ci, cname, path, group = line.split("\t")
        ci = int(ci)
        if ci == len(classes):
            classes.append(cname)
            files.append([])
            groups.append([])
        files[ci].append(Path(path))
        groups[ci].append(group)
        f = Workdir.require(w.descriptors / f"{int(idx):05d}.f32", "extract")
        X = formats.read_matrix(f)
        sets.append(DescriptorSet(X, np.zeros((len(X), 2), dtype=np.int64), image_id))
    log.info("read %d descriptor files sha256=%s", len(sets), _digest(sorted(w.descriptors.glob("*.f32"))))
    has_groups = all(g != "-" for gs in groups for g in gs)
    ds = Dataset(
        Path(cfg.dataset), tuple(classes), tuple(tuple(f) for f in files),
        tuple(tuple(g) for g in groups) if has_groups else None,
    )
    return ds, sets


def _splits(ds: Dataset, cfg: RunConfig):
    return make_splits(ds, parse_protocol(cfg.protocol, cfg.repetitions, cfg.seed_splits))


def _selected(splits, args):
    if getattr(args, "split", None) is None:
        return list(enumerate(splits))
    if not 1 <= args.split <= len(splits):
        raise ConfigError(f"--split must lie in 1..{len(splits)}, got {args.split}")
    return [(args.split - 1, splits[args.split - 1])]


def _dataset(cfg: RunConfig) -> Dataset:
    if not cfg.dataset:
        raise ConfigError("dataset is not set; pass --dataset or put 'dataset = <dir>' in the config")
    return scan_dataset(cfg.dataset)


# ----------------------------------------------------------------- commands

def cmd_pattern(cfg, w, args):
    w.root.mkdir(parents=True, exist_ok=True)
    p = make_pattern(cfg)
    save_pattern(p, w.pattern)
    log.info("pattern: L=%d scales=%s N_b=%d -> descriptor length %d", p.patch_size, p.scales, p.n_per_scale, p.dim)
    _wrote(w.pattern)


def cmd_extract(cfg, w, args):
    pattern = load_pattern(Workdir.require(w.pattern, "pattern"))
    _read(w.pattern)
    ds = _dataset(cfg)
    sets = extract_all(ds, cfg, pattern)
    _write_descriptors(w, ds, sets)
    w.note.write_text(patch_count_note(ds, cfg) + "\n")
    log.info("extracted %d images, %d descriptors of length %d", len(sets), sum(map(len, sets)), pattern.dim)
    _wrote(w.index)


def cmd_codebook(cfg, w, args):
    ds, sets = _load_descriptors(w, cfg)
    for i, split in _selected(_splits(ds, cfg), args):
        check_provenance(sets, split)
        model = fit_model(cfg, [sets[j] for j in split.train], i)
        w.split(i).mkdir(parents=True, exist_ok=True)
        path = _model_path(w, cfg, i)
        _save_model(model, path, cfg)
        _wrote(path)


def cmd_encode(cfg, w, args):
    ds, sets = _load_descriptors(w, cfg)
    labels = ds.labels
    for i, split in _selected(_splits(ds, cfg), args):
        path = Workdir.require(_model_path(w, cfg, i), "codebook")
        _read(path)
        model = _load_model(path, cfg)
        d = w.split(i)
        for part, idx in (("train", split.train), ("test", split.test)):
            X = encode_sets(model, [sets[j] for j in idx], cfg)
            if not np.isfinite(X).all():
                raise FloatingPointError(f"split {i + 1}: non-finite {part} encodings")
            formats.write_matrix(d / f"{part}.f32", X)
            formats.write_labels(d / f"{part}_labels.txt", labels[idx])
            _wrote(d / f"{part}.f32")


def cmd_train(cfg, w, args):
    for i, _ in _selected(range(cfg.repetitions), args):
        d = w.split(i)
        X = formats.read_matrix(Workdir.require(d / "train.f32", "encode"))
        y = formats.read_labels(Workdir.require(d / "train_labels.txt", "encode"))
        _read(d / "train.f32")
        svm = train_classifier(cfg, X, y, i)
        formats.save_svm(svm, d / "svm.txt")
        _wrote(d / "svm.txt")


def cmd_evaluate(cfg, w, args):
    note = Workdir.require(w.note, "extract").read_text().strip()
    accs = []
    for i in range(cfg.repetitions):
        d = w.split(i)
        svm = formats.load_svm(Workdir.require(d / "svm.txt", "train"))
        X = formats.read_matrix(Workdir.require(d / "test.f32", "encode"))
        y = formats.read_labels(Workdir.require(d / "test_labels.txt", "encode"))
        _read(d / "svm.txt")
        accs.append(accuracy(svm_predict(svm, X.astype(np.float64)), y))
        log.info("split %d/%d: accuracy %.2f%%", i + 1, cfg.repetitions, accs[-1])
    _finish(RunReport(accs, cfg, [note]), w.root)


def cmd_pipeline(cfg, w, args):
    w.root.mkdir(parents=True, exist_ok=True)
    ds = _dataset(cfg)
    save_pattern(make_pattern(cfg), w.pattern)
    _wrote(w.pattern)
    _finish(evaluate(ds, cfg), w.root)


def _grid(specs) -> list[tuple[str, list]]:
    axes = []
    for item in specs:
        if "=" not in item:
            raise ConfigError(f"--grid expects KEY=V1,V2,..., got {item!r}")
        key, values = item.split("=", 1)
        key = key.strip()
        axes.append((key, [parse_value(key, v) for v in values.split(",") if v.strip()]))
    return axes


def _slug(combo) -> str:
    parts = []
    for key, value in combo:
        parts.append(f"{key}={_format_value(value)}".replace(":", "-").replace(",", "+").replace("/", "_"))
    return "_".join(parts)


def _format_value(value) -> str:
    if isinstance(value, tuple):
        return "+".join(str(v) for v in value)
    return "none" if value is None else str(value)


def cmd_sweep(cfg, w, args):
    axes = _grid(args.grid or [])
    if not axes:
        raise ConfigError("sweep needs at least one --grid KEY=V1,V2,...")
    ds = _dataset(cfg) if not any(k == "dataset" for k, _ in axes) else None
    cache = {}
    rows = ["\t".join([k for k, _ in axes] + ["mean", "std"])]
    for values in itertools.product(*(v for _, v in axes)):
        combo = list(zip((k for k, _ in axes), values))
        sub = cfg.replace(**dict(combo)).validate()
        key = tuple(getattr(sub, k) for k in EXTRACTION_KEYS)
        data = ds if ds is not None else scan_dataset(sub.dataset)
        if key not in cache:
            cache = {key: extract_all(data, sub)}  # keep one extraction alive at a time
        log.info("sweep point %s", dict(combo))
        report = evaluate(data, sub, cache[key])
        _finish(report, w.root / "sweep" / _slug(combo))
        rows.append("\t".join([_format_value(v) for v in values] + [repr(report.mean), repr(report.std)]))
    (w.root / "sweep").mkdir(parents=True, exist_ok=True)
    (w.root / "sweep" / "summary.tsv").write_text("\n".join(rows) + "\n")
    _wrote(w.root / "sweep" / "summary.tsv")


def cmd_synthetic(args):
    from .synthetic import write_corpus

    root = write_corpus(args.root, args.per_class, args.size, args.seed)
    log.info("wrote synthetic corpus to %s", root)
    return EXIT_OK


def _finish(report: RunReport, directory) -> None:
    report.write(directory)
    print(f"accuracy {report.mean:.2f} +/- {report.std:.2f} % over {len(report.accuracies)} splits")
    _wrote(Path(directory) / "metrics.txt")


# ------------------------------------------------------------------- parsing

COMMANDS = {
    "pattern": (cmd_pattern, "draw the block-pair sampling pattern"),
    "extract": (cmd_extract, "extract dense descriptors for every image"),
    "codebook": (cmd_codebook, "fit the k-means codebook or GMM of each split"),
    "encode": (cmd_encode, "encode train and test images of each split"),
    "train": (cmd_train, "train the one-vs-rest SVM of each split"),
    "evaluate": (cmd_evaluate, "score the test encodings and write the run report"),
    "pipeline": (cmd_pipeline, "run every stage in memory and write the run report"),
    "sweep": (cmd_sweep, "evaluate a grid of configurations"),
}


def _config_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("configuration (flags override the config file)")
    g.add_argument("--config", help="key = value configuration file")
    g.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any config key")
    for f in dataclasses.fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        extra = ["-o"] if f.name == "output" else []
        g.add_argument(*extra, flag, dest=f"cfg_{f.name}", metavar="VALUE", help=f"default: {f.default}")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bigd", description="BIGD texture classification pipeline.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="only warnings and errors")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND} kernels)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _config_options()
    for name, (fn, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        sp.set_defaults(func=fn)
        if name in ("codebook", "encode", "train"):
            sp.add_argument("--split", type=int, help="only this split (1-based)")
        if name == "sweep":
            sp.add_argument("--grid", action="append", metavar="KEY=V1,V2", help="axis of the sweep; repeatable")
    sp = sub.add_parser("synthetic", help="write the synthetic 4-class test corpus")
    sp.add_argument("root")
    sp.add_argument("--per-class", type=int, default=40)
    sp.add_argument("--size", type=int, default=64)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=None)
    return parser


def _overrides(args) -> dict:
    out = {}
    for f in dataclasses.fields(RunConfig):
        value = getattr(args, f"cfg_{f.name}", None)
        if value is not None:
            out[f.name] = value
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = value
    return out


def resolve_config(args) -> tuple[RunConfig, Workdir]:
    """Config file (or the work directory's saved config), then flag overrides."""
    overrides = _overrides(args)
    if args.config:
        cfg = load_config(args.config, overrides)
    else:
        out = overrides.get("output", RunConfig.output)
        saved = Path(out) / "config.txt"
        cfg = load_config(saved if saved.exists() else None, overrides)
        cfg.output = out
    return cfg, Workdir(cfg.output)


def _run(args) -> int:
    if args.func is None:
        return cmd_synthetic(args)
    cfg, w = resolve_config(args)
    log.info("bigd %s (kernels: %s) output=%s", args.command, BACKEND, w.root)
    args.func(cfg, w, args)
    if w.root.exists():
        w.config.write_text("\n".join(cfg.to_lines()) + "\n")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return _run(args)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except (StageError, DatasetError, ProtocolError, formats.FormatError, ImageFormatError,
            PatternFormatError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_DATA
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        log.error("numeric failure: %s", exc)
        return EXIT_NUMERIC
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
