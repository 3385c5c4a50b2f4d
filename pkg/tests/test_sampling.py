import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bigd.sampling import (
    PatternFormatError, SamplingPattern, block_extent, block_inside, draw_coordinates, format_pattern,
    load_pattern, parse_pattern, round_half_away, sample_pattern, save_pattern,
)


def covered(center, s):
    lo, hi = block_extent(s)
    return range(center + lo, center + hi + 1)


def test_block_extent_convention():
    assert list(covered(0, 1)) == [0]
    assert list(covered(0, 2)) == [0, 1]
    assert list(covered(0, 3)) == [-1, 0, 1]
    assert list(covered(0, 4)) == [-1, 0, 1, 2]
    for s in range(1, 12):
        assert len(covered(5, s)) == s


def test_default_pattern_layout():
    p = sample_pattern(15, (1, 2, 3, 4), 4, seed=0)
    assert p.n_pairs == 16
    assert p.dim == 80
    np.testing.assert_array_equal(p.pairs[:, 0], np.repeat([1, 2, 3, 4], 4))
    for s, xr, xc, yr, yc in p.pairs:
        assert block_inside((xr, xc), s, 15) and block_inside((yr, yc), s, 15)
    p.validate()


def test_pattern_is_deterministic():
    assert sample_pattern(15, (1, 2, 3, 4), 4, 7) == sample_pattern(15, (1, 2, 3, 4), 4, 7)
    assert sample_pattern(15, (1, 2, 3, 4), 4, 7) != sample_pattern(15, (1, 2, 3, 4), 4, 8)


def test_single_pixel_patch():
    p = sample_pattern(1, (1,), 1, seed=3)
    np.testing.assert_array_equal(p.pairs, [[1, 0, 0, 0, 0]])


def test_scale_too_large():
    with pytest.raises(ValueError):
        sample_pattern(5, (6,), 1, 0)
    with pytest.raises(ValueError):
        sample_pattern(4, (1,), 1, 0)
    with pytest.raises(ValueError):
        sample_pattern(5, (1,), 0, 0)


def test_largest_scale_fills_patch():
    p = sample_pattern(5, (5,), 3, 1)
    np.testing.assert_array_equal(p.pairs[:, 1:], 0)


def test_coordinate_std():
    x = draw_coordinates(np.random.default_rng(2024), 15, 100_000)
    assert abs(x.std(ddof=1) - 3.0) / 3.0 < 0.05


def test_round_half_away():
    np.testing.assert_array_equal(round_half_away([0.5, -0.5, 1.5, -2.5, 0.49, -0.51]), [1, -1, 2, -3, 0, -1])


@given(
    half=st.integers(0, 10),
    scales=st.lists(st.integers(1, 21), min_size=1, max_size=4),
    n_b=st.integers(1, 5),
    seed=st.integers(0, 2**32 - 1),
)
@settings(max_examples=50, deadline=None)
def test_pairs_inside_and_roundtrip(half, scales, n_b, seed):
    L = 2 * half + 1
    scales = [s for s in scales if s <= L] or [1]
    p = sample_pattern(L, scales, n_b, seed)
    p.validate()
    assert parse_pattern(format_pattern(p)) == p


def test_save_load(tmp_path):
    p = sample_pattern(15, (1, 2, 3, 4), 4, 11)
    save_pattern(p, tmp_path / "p.txt")
    assert load_pattern(tmp_path / "p.txt") == p


def test_hand_written_file():
    p = parse_pattern("7 2 1 5\n1 0 0 -2 3\n3 1 -1 -2 2\n")
    assert p.patch_size == 7 and p.scales == (1, 3) and p.n_per_scale == 1 and p.seed == 5
    np.testing.assert_array_equal(p.pairs, [[1, 0, 0, -2, 3], [3, 1, -1, -2, 2]])


@pytest.mark.parametrize(
    "text, line",
    [
        ("15 2 2 0\n1 0 0 0 0\n1 0 0 0 0\n2 0 0 0 0\n", 4),  # count mismatch
        ("15 1 1 0\n1 0 0 x 0\n", 2),
        ("15 1 1 0\n1 0 0 0\n", 2),
        ("15 1 1 0\n3 7 0 0 0\n", 2),  # block leaves the patch
        ("15 1 2 0\n1 0 0 0 0\n2 0 0 0 0\n", 3),  # scale grouping broken
        ("14 1 1 0\n1 0 0 0 0\n", 1),
        ("15 0 1 0\n", 1),
        ("15 1 1\n", 1),
        ("", 1),
    ],
)
def test_malformed_files(text, line):
    with pytest.raises(PatternFormatError) as info:
        parse_pattern(text)
    assert info.value.lineno == line
    assert f"line {line}" in str(info.value)


def test_validate_rejects_bad_pattern():
    bad = SamplingPattern(5, (1,), 1, 0, np.array([[1, 3, 0, 0, 0]]))
    with pytest.raises(ValueError):
        bad.validate()
