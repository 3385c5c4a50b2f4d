from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from bigd.config import RunConfig
from bigd.harness import (
    Dataset, DatasetError, ProtocolError, RunReport, Split, check_provenance, evaluate, extract_all,
    make_splits, parse_protocol, scan_dataset,
)


def fake_dataset(per_class, n_classes=3, groups_per_class=None):
    files = tuple(tuple(Path(f"c{c}/{i:04d}.png") for i in range(per_class)) for c in range(n_classes))
    groups = None
    if groups_per_class:
        size = per_class // groups_per_class
        groups = tuple(tuple(f"s{i // size}" for i in range(per_class)) for _ in range(n_classes))
    return Dataset(Path("."), tuple(f"c{c}" for c in range(n_classes)), files, groups)


def per_class_counts(ds, idx):
    labels = ds.labels[idx]
    return [int((labels == c).sum()) for c in range(len(ds.classes))]


def write_png(path, value=0):
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.full((4, 4), value, np.uint8)).save(path)


def test_scan_dataset(tmp_path):
    for c in ("b", "a"):
        for i in (2, 0, 1):
            write_png(tmp_path / c / f"{i}.png")
    (tmp_path / "a" / "notes.txt").write_text("ignored")
    ds = scan_dataset(tmp_path)
    assert ds.classes == ("a", "b")
    assert [p.name for p in ds.files[0]] == ["0.png", "1.png", "2.png"]
    assert ds.groups is None
    assert ds.image_ids()[:2] == ["a/0.png", "a/1.png"]
    np.testing.assert_array_equal(ds.labels, [0, 0, 0, 1, 1, 1])


def test_scan_rejects_empty_class(tmp_path):
    write_png(tmp_path / "full" / "x.png")
    (tmp_path / "hollow").mkdir()
    with pytest.raises(DatasetError, match="hollow"):
        scan_dataset(tmp_path)
    with pytest.raises(DatasetError):
        scan_dataset(tmp_path / "missing")


def test_scan_groups(tmp_path):
    for i in range(4):
        write_png(tmp_path / "k" / f"{i}.png")
    (tmp_path / "groups.txt").write_text("k/0.png s1\nk/1.png s1\nk/2.png s2\nk/3.png s2\n")
    assert scan_dataset(tmp_path).groups == (("s1", "s1", "s2", "s2"),)
    (tmp_path / "groups.txt").write_text("k/0.png s1\n")
    with pytest.raises(DatasetError):
        scan_dataset(tmp_path)


def test_group_holdout_needs_groups():
    with pytest.raises(ProtocolError):
        make_splits(fake_dataset(8), parse_protocol("group_holdout:3:1"))


@pytest.mark.parametrize(
    "per_class, groups, protocol, train, test",
    [
        (64, None, "random_half", 32, 32),  # Brodatz
        (92, None, "random_half", 46, 46),  # CUReT
        (81, None, "random_half", 40, 41),  # KTH-TIPS
        (432, 4, "group_holdout:3:1", 324, 108),  # KTH-TIPS-2a / 2b
        (432, 4, "ratio:3:1", 324, 108),
        (432, 4, "ratio:1:1", 216, 216),
        (432, 4, "ratio:1:3", 108, 324),
        (20, None, "random_ratio:5:10", 5, 10),
        (20, None, "ratio:1:3", 5, 15),
    ],
)
def test_protocol_counts(per_class, groups, protocol, train, test):
    ds = fake_dataset(per_class, groups_per_class=groups)
    splits = make_splits(ds, parse_protocol(protocol, 10, 0))
    assert len(splits) == 10
    for sp in splits:
        assert per_class_counts(ds, sp.train) == [train] * 3
        assert per_class_counts(ds, sp.test) == [test] * 3
        assert not set(sp.train) & set(sp.test)


def test_group_holdout_keeps_groups_apart():
    ds = fake_dataset(432, groups_per_class=4)
    splits = make_splits(ds, parse_protocol("group_holdout:3:1", 10, 0))
    tags = [g for gs in ds.groups for g in gs]
    held_out = []
    for sp in splits:
        train_groups = {(ds.labels[i], tags[i]) for i in sp.train}
        test_groups = {(ds.labels[i], tags[i]) for i in sp.test}
        assert not train_groups & test_groups
        held_out.append(tuple(sorted(t for c, t in test_groups if c == 0)))
    # the first four repetitions enumerate every leave-one-group-out split
    assert sorted(held_out[:4]) == [("s0",), ("s1",), ("s2",), ("s3",)]


def test_splits_deterministic():
    ds = fake_dataset(30)
    a = make_splits(ds, parse_protocol("random_half", 10, 7))
    b = make_splits(ds, parse_protocol("random_half", 10, 7))
    c = make_splits(ds, parse_protocol("random_half", 10, 8))
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.train, y.train)
    assert any(not np.array_equal(x.train, z.train) for x, z in zip(a, c))
    assert len({tuple(s.train) for s in a}) == 10


@pytest.mark.parametrize("protocol", ["random_ratio:30:1", "group_holdout:4:1", "random_ratio:0:2", "halves", "ratio:a:b"])
def test_infeasible_or_bad_protocols(protocol):
    ds = fake_dataset(16, groups_per_class=4)
    with pytest.raises(ProtocolError):
        make_splits(ds, parse_protocol(protocol))


def test_infeasible_message_has_counts():
    with pytest.raises(ProtocolError, match="c0"):
        make_splits(fake_dataset(4), parse_protocol("random_ratio:3:3"))


def test_report_statistics():
    cfg = RunConfig()
    r = RunReport([90.0, 95.0, 100.0], cfg)
    assert r.mean == pytest.approx(95.0)
    assert r.std == pytest.approx(5.0)
    one = RunReport([88.5], cfg)
    assert one.std == 0.0
    assert "accuracy_std=0.0" in one.metrics_text()


def test_report_files(tmp_path):
    r = RunReport([97.5, 100.0], RunConfig(K=16), ["a note"])
    r.write(tmp_path)
    metrics = dict(line.split("=") for line in (tmp_path / "metrics.txt").read_text().split())
    assert float(metrics["accuracy_mean"]) == r.mean
    vals = [float(metrics[f"accuracy_split_{i:02d}"]) for i in (1, 2)]
    assert np.mean(vals) == float(metrics["accuracy_mean"])
    text = (tmp_path / "report.txt").read_text()
    assert "K = 16" in text and "a note" in text


def test_provenance_check():
    from bigd.descriptor import DescriptorSet

    sets = [DescriptorSet(np.zeros((1, 5)), np.zeros((1, 2)), f"img{i}") for i in range(4)]
    check_provenance(sets, Split(np.array([0, 1]), np.array([2, 3])))
    with pytest.raises(AssertionError):
        check_provenance(sets, Split(np.array([0, 1]), np.array([1, 3])))
    sets[3] = DescriptorSet(np.zeros((1, 5)), np.zeros((1, 2)), "img0")
    with pytest.raises(AssertionError):
        check_provenance(sets, Split(np.array([0, 1]), np.array([2, 3])))


FAST = dict(patch_size=9, step=4, scales=(1, 2), n_per_scale=2, K=4, repetitions=3, svm_iters_factor=20)


def test_evaluate_small(small_corpus):
    ds = scan_dataset(small_corpus)
    cfg = RunConfig(dataset=str(small_corpus), **FAST)
    desc = extract_all(ds, cfg)
    assert all(d.descriptors.dtype == np.float32 for d in desc)
    vlad = evaluate(ds, cfg, desc)
    ifv = evaluate(ds, cfg.replace(encoder="ifv"), desc)
    assert len(vlad.accuracies) == len(ifv.accuracies) == 3
    assert all(0 <= a <= 100 for a in vlad.accuracies + ifv.accuracies)
    assert "fully interior patches" in vlad.notes[0]
    again = evaluate(ds, cfg, desc)
    assert again.accuracies == vlad.accuracies


def test_evaluate_single_repetition(small_corpus):
    ds = scan_dataset(small_corpus)
    r = evaluate(ds, RunConfig(dataset=str(small_corpus), **{**FAST, "repetitions": 1}))
    assert r.std == 0.0 and len(r.accuracies) == 1


def test_parallel_extraction_matches(small_corpus):
    ds = scan_dataset(small_corpus)
    cfg = RunConfig(dataset=str(small_corpus), **FAST)
    a = extract_all(ds, cfg)
    b = extract_all(ds, cfg.replace(jobs=3))
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.descriptors, y.descriptors)
        assert x.image_id == y.image_id


def test_errors_name_the_split(small_corpus):
    ds = scan_dataset(small_corpus)
    # more codebook words than training descriptors in every split
    cfg = RunConfig(dataset=str(small_corpus), **{**FAST, "K": 100_000})
    with pytest.raises(ValueError, match="split 1"):
        evaluate(ds, cfg)
