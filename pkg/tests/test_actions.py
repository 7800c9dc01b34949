"""Action binning tests; derived values come from direct formula evaluation."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tokenworld import actions

TABLE = actions.ActionRangeTable(mins=(-1.0,), maxs=(1.0,), bins=256, epsilon=1e-6)
OFFSET = 2 * 4375  # 8750


def test_fit_ranges_extrema():
    t = actions.fit_ranges([(0.0, 1.0), (2.0, -1.0)], bins=256)
    assert t.mins == (0.0, -1.0)
    assert t.maxs == (2.0, 1.0)


def test_fit_ranges_degenerate_single_sample():
    t = actions.fit_ranges([(5.0,)], bins=256)
    assert t.mins == t.maxs == (5.0,)


def test_fit_ranges_rejects_bad_input():
    with pytest.raises(ValueError):
        actions.fit_ranges([], bins=256)
    with pytest.raises(ValueError):
        actions.fit_ranges([(1.0,), (1.0, 2.0)], bins=256)


def test_discretize_edges_and_center():
    # Oracle: direct evaluation of floor(B*(a-min)/(max-min+eps)).
    for a, expected_bin in [(-1.0, 0), (1.0, 255), (0.0, 127)]:
        oracle = math.floor(256 * (a + 1.0) / (2.0 + 1e-6))
        oracle = min(max(oracle, 0), 255)
        assert oracle == expected_bin
        block = actions.discretize([a], TABLE, OFFSET)
        assert block.bins() == (expected_bin,)
        assert block.ids == (expected_bin + OFFSET,)
    assert actions.discretize([-1.0], TABLE, OFFSET).ids == (8750,)
    assert actions.discretize([1.0], TABLE, OFFSET).ids == (9005,)
    assert actions.discretize([0.0], TABLE, OFFSET).ids == (8877,)


def test_discretize_out_of_range_clamps():
    assert actions.discretize([-10.0], TABLE, OFFSET).bins() == (0,)
    assert actions.discretize([10.0], TABLE, OFFSET).bins() == (255,)


def test_discretize_dimension_mismatch():
    with pytest.raises(ValueError):
        actions.discretize([0.0, 0.0], TABLE, OFFSET)


def test_dequantize_bin_centers():
    width = (2.0 + 1e-6) / 256
    lo = actions.dequantize(actions.ActionTokenBlock((OFFSET,), OFFSET), TABLE)
    hi = actions.dequantize(actions.ActionTokenBlock((OFFSET + 255,), OFFSET), TABLE)
    assert lo[0] == pytest.approx(-1.0 + 0.5 * width, abs=1e-12)
    assert hi[0] == pytest.approx(-1.0 + 255.5 * width, abs=1e-12)
    assert lo[0] == pytest.approx(-0.99609, abs=1e-4)
    assert hi[0] == pytest.approx(+0.99609, abs=1e-4)


def test_dequantize_degenerate_range():
    t = actions.ActionRangeTable(mins=(5.0,), maxs=(5.0,), bins=256, epsilon=1e-6)
    out = actions.dequantize(actions.ActionTokenBlock((0,), 0), t)
    assert out[0] == pytest.approx(5.0, abs=1e-6)


def test_dequantize_rejects_foreign_token():
    with pytest.raises(ValueError):
        actions.dequantize(actions.ActionTokenBlock((OFFSET + 256,), OFFSET), TABLE)


@given(st.floats(-1.0, 1.0))
def test_round_trip_within_one_bin_width(a):
    width = (2.0 + 1e-6) / 256
    block = actions.discretize([a], TABLE, OFFSET)
    back = actions.dequantize(block, TABLE)
    assert abs(back[0] - a) <= width


@given(st.floats(-2.0, 2.0), st.floats(-2.0, 2.0))
def test_binning_monotone(a, b):
    lo, hi = sorted((a, b))
    bin_lo = actions.discretize([lo], TABLE, OFFSET).bins()[0]
    bin_hi = actions.discretize([hi], TABLE, OFFSET).bins()[0]
    assert bin_lo <= bin_hi


def test_persist_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(3)
    samples = rng.normal(size=(40, 3)) * math.pi
    t = actions.fit_ranges(samples, bins=256)
    path = tmp_path / "ranges.json"
    actions.persist_table(t, path)
    assert actions.load_table(path) == t


def test_load_rejects_invalid_bin_count(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"dims": 1, "B_a": 0, "epsilon": 1e-6, "min": [0], "max": [1]}')
    with pytest.raises(ValueError, match="invalid bin count"):
        actions.load_table(path)


def test_load_missing_file():
    with pytest.raises(OSError):
        actions.load_table("/nonexistent/ranges.json")


def test_load_malformed_json(tmp_path):
    path = tmp_path / "mangled.json"
    path.write_text("{not json")
    with pytest.raises(ValueError, match="malformed"):
        actions.load_table(path)
