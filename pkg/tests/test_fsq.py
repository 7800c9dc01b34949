"""Quantizer tests against an independent enumeration oracle."""

import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tokenworld import fsq

LEVELS = fsq.FsqLevels.parse("7,5,5,5,5")


def enumerate_codewords(levels):
    """Oracle: all digit tuples in lexicographic order, least-significant
    dimension first, independent of the mixed-radix arithmetic under test."""
    ranges = [
        range(levels.digit_low(i), levels.digit_high(i) + 1)
        for i in range(levels.dim)
    ]
    # itertools.product varies the last factor fastest, so feed dimensions
    # reversed to make dimension 0 the fastest-varying one.
    for combo in itertools.product(*reversed(ranges)):
        yield tuple(reversed(combo))


def test_codebook_size_default_levels():
    assert fsq.codebook_size(LEVELS) == 4375


@pytest.mark.parametrize("levels,expected", [((2,), 2), ((3, 3), 9)])
def test_codebook_size_small(levels, expected):
    assert fsq.codebook_size(fsq.FsqLevels(levels)) == expected


def test_quantize_zero_is_origin():
    code = fsq.quantize(np.zeros(5), LEVELS)
    assert code.digits == (0, 0, 0, 0, 0)


def test_quantize_saturation_clamps():
    # Oracle: evaluate the bounding formula directly and round/clamp.
    z = np.full(5, 100.0)
    bounded = np.array(LEVELS.levels) / 2 * np.tanh(z)
    expected = tuple(
        int(min(round(b), LEVELS.digit_high(i))) for i, b in enumerate(bounded)
    )
    assert expected == (3, 2, 2, 2, 2)
    assert fsq.quantize(z, LEVELS).digits == expected
    assert fsq.quantize(-z, LEVELS).digits == (-3, -2, -2, -2, -2)


def test_quantize_rejects_bad_input():
    with pytest.raises(ValueError):
        fsq.quantize(np.zeros(4), LEVELS)
    with pytest.raises(ValueError):
        fsq.quantize(np.array([0.0, np.nan, 0.0, 0.0, 0.0]), LEVELS)


def test_encode_index_matches_enumeration_oracle():
    for expected_index, digits in enumerate(enumerate_codewords(LEVELS)):
        got = fsq.encode_index(fsq.Codeword(digits), LEVELS).index
        assert got == expected_index


def test_encode_anchor_codewords():
    assert fsq.encode_index(fsq.Codeword((-3, -2, -2, -2, -2)), LEVELS).index == 0
    assert fsq.encode_index(fsq.Codeword((0, 0, 0, 0, 0)), LEVELS).index == 2187
    assert fsq.encode_index(fsq.Codeword((3, 2, 2, 2, 2)), LEVELS).index == 4374


def test_decode_anchor_indices():
    assert fsq.decode_index(0, LEVELS).digits == (-3, -2, -2, -2, -2)
    assert fsq.decode_index(2187, LEVELS).digits == (0, 0, 0, 0, 0)
    assert fsq.decode_index(4374, LEVELS).digits == (3, 2, 2, 2, 2)


def test_round_trip_exhaustive():
    for i in range(fsq.codebook_size(LEVELS)):
        code = fsq.decode_index(i, LEVELS)
        assert fsq.encode_index(code, LEVELS).index == i


def test_decode_rejects_out_of_range():
    with pytest.raises(ValueError):
        fsq.decode_index(fsq.codebook_size(LEVELS), LEVELS)
    with pytest.raises(ValueError):
        fsq.encode_index(fsq.Codeword((4, 0, 0, 0, 0)), LEVELS)


def test_quantize_idempotent_on_all_codewords():
    for digits in enumerate_codewords(LEVELS):
        code = fsq.Codeword(digits)
        z = fsq.codeword_to_real(code, LEVELS)
        assert fsq.quantize(z, LEVELS) == code


def test_even_levels_round_trip():
    levels = fsq.FsqLevels((4, 6))
    seen = set()
    for digits in enumerate_codewords(levels):
        idx = fsq.encode_index(fsq.Codeword(digits), levels).index
        seen.add(idx)
        assert fsq.decode_index(idx, levels).digits == digits
    assert seen == set(range(24))


def test_even_levels_zero_maps_to_origin():
    levels = fsq.FsqLevels((4,))
    assert fsq.quantize(np.zeros(1), levels).digits == (0,)


def test_residual_magnitude():
    rng = np.random.default_rng(7)
    for _ in range(50):
        z = rng.normal(scale=2.0, size=5)
        code, residual = fsq.quantize(z, LEVELS, with_residual=True)
        assert np.all(np.abs(residual) <= 0.5 + 1e-12)
        assert np.allclose(np.array(code.digits) + residual, fsq.bound(z, LEVELS))


@given(st.lists(st.floats(-1e6, 1e6), min_size=5, max_size=5))
def test_quantize_always_in_range(z):
    code = fsq.quantize(np.array(z), LEVELS)
    code.validate(LEVELS)  # raises on any out-of-range digit


def test_encode_monotone_in_lex_order():
    prev = -1
    for digits in enumerate_codewords(fsq.FsqLevels((3, 4, 2))):
        idx = fsq.encode_index(fsq.Codeword(digits), fsq.FsqLevels((3, 4, 2))).index
        assert idx > prev
        prev = idx


def test_levels_validation():
    with pytest.raises(ValueError):
        fsq.FsqLevels((1,))
    with pytest.raises(ValueError):
        fsq.FsqLevels(())
    with pytest.raises(ValueError):
        fsq.FsqLevels.parse("7,x")
