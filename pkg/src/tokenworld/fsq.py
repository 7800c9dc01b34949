"""Finite scalar quantization: per-dimension bounding, rounding, mixed-radix indexing.

The quantizer has no learned codebook.  Each latent dimension i is squashed
into a window of L_i integer levels, rounded to the nearest level, and the
digit vector is packed into a single integer index via mixed-radix encoding.
All operations are pure and bijective over the codebook.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FsqLevels",
    "Codeword",
    "CodeIndex",
    "quantize",
    "bound",
    "codeword_to_real",
    "encode_index",
    "decode_index",
    "codebook_size",
]


@dataclass(frozen=True)
class FsqLevels:
    """Level vector of the quantizer plus per-dimension shift/offset.

    For odd L_i the shift and offset are zero and digits are symmetric
    around 0.  For even L_i the lattice sits on half-integers: offset 0.5
    and a shift chosen so that input 0 lands on digit 0.
    """

    levels: tuple[int, ...]
    shifts: tuple[float, ...] = field(default=None)  # type: ignore[assignment]
    offsets: tuple[float, ...] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        levels = tuple(int(l) for l in self.levels)
        if len(levels) < 1:
            raise ValueError("need at least one level")
        if any(l < 2 for l in levels):
            raise ValueError(f"all levels must be >= 2, got {levels}")
        object.__setattr__(self, "levels", levels)
        if self.offsets is None:
            offsets = tuple(0.0 if l % 2 == 1 else 0.5 for l in levels)
            object.__setattr__(self, "offsets", offsets)
        if self.shifts is None:
            # atanh(2*o/L) maps z=0 onto digit 0 for even levels.
            shifts = tuple(
                math.atanh(2.0 * o / l) if o != 0.0 else 0.0
                for l, o in zip(levels, self.offsets)
            )
            object.__setattr__(self, "shifts", shifts)
        if not (len(self.shifts) == len(self.offsets) == len(levels)):
            raise ValueError("shifts/offsets must match level count")

    @property
    def dim(self) -> int:
        return len(self.levels)

    def digit_low(self, i: int) -> int:
        return -(self.levels[i] // 2)

    def digit_high(self, i: int) -> int:
        return self.digit_low(i) + self.levels[i] - 1

    @classmethod
    def parse(cls, text: str) -> "FsqLevels":
        """Parse a comma-separated level list, e.g. ``"7,5,5,5,5"``."""
        try:
            levels = tuple(int(part) for part in text.split(","))
        except ValueError as exc:
            raise ValueError(f"invalid level list {text!r}") from exc
        return cls(levels)


@dataclass(frozen=True)
class Codeword:
    """Signed digit vector; one lattice point of the codebook."""

    digits: tuple[int, ...]

    def validate(self, levels: FsqLevels) -> None:
        if len(self.digits) != levels.dim:
            raise ValueError(
                f"codeword has {len(self.digits)} digits, expected {levels.dim}"
            )
        for i, d in enumerate(self.digits):
            if not levels.digit_low(i) <= d <= levels.digit_high(i):
                raise ValueError(
                    f"digit {d} out of range "
                    f"[{levels.digit_low(i)}, {levels.digit_high(i)}] in dim {i}"
                )


@dataclass(frozen=True)
class CodeIndex:
    """Mixed-radix integer index of a codeword, in [0, K)."""

    index: int

    def validate(self, levels: FsqLevels) -> None:
        if not 0 <= self.index < codebook_size(levels):
            raise ValueError(
                f"index {self.index} outside [0, {codebook_size(levels)})"
            )


def codebook_size(levels: FsqLevels) -> int:
    """Number of distinct codewords, the product of the per-dimension levels."""
    return math.prod(levels.levels)


def bound(z: np.ndarray, levels: FsqLevels) -> np.ndarray:
    """Squash z into the open lattice window: (L_i/2)*tanh(z_i + s_i) - o_i."""
    z = np.asarray(z, dtype=float)
    if z.shape != (levels.dim,):
        raise ValueError(f"expected vector of length {levels.dim}, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError("input vector must be finite")
    half = np.asarray(levels.levels, dtype=float) / 2.0
    return half * np.tanh(z + np.asarray(levels.shifts)) - np.asarray(levels.offsets)


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def quantize(
    z: np.ndarray, levels: FsqLevels, with_residual: bool = False
) -> Codeword | tuple[Codeword, np.ndarray]:
    """Quantize a real vector to its nearest codeword.

    Rounds half away from zero, then clamps into the digit range; the clamp
    only fires when float tanh saturates to exactly +-1.  With
    ``with_residual`` the bounded-minus-rounded residual is also returned
    (no gradient semantics attached).
    """
    bounded = bound(z, levels)
    rounded = _round_half_away(bounded)
    lows = np.array([levels.digit_low(i) for i in range(levels.dim)])
    highs = np.array([levels.digit_high(i) for i in range(levels.dim)])
    digits = np.clip(rounded, lows, highs).astype(int)
    code = Codeword(tuple(int(d) for d in digits))
    if with_residual:
        return code, bounded - digits
    return code


def codeword_to_real(c: Codeword, levels: FsqLevels) -> np.ndarray:
    """Inverse of :func:`bound` evaluated at the lattice point of ``c``.

    quantize(codeword_to_real(c)) == c for every codeword.
    """
    c.validate(levels)
    half = np.asarray(levels.levels, dtype=float) / 2.0
    target = (np.asarray(c.digits, dtype=float) + np.asarray(levels.offsets)) / half
    return np.arctanh(target) - np.asarray(levels.shifts)


def encode_index(c: Codeword, levels: FsqLevels) -> CodeIndex:
    """Pack a digit vector into its mixed-radix index.

    index = sum_i (digit_i + floor(L_i/2)) * prod_{j<i} L_j, which is a
    bijection onto [0, K) and strictly increasing under lexicographic digit
    order with the least-significant dimension first.
    """
    c.validate(levels)
    index = 0
    stride = 1
    for i, d in enumerate(c.digits):
        index += (d - levels.digit_low(i)) * stride
        stride *= levels.levels[i]
    return CodeIndex(index)


def decode_index(i: CodeIndex | int, levels: FsqLevels) -> Codeword:
    """Unpack a mixed-radix index back into its digit vector."""
    if isinstance(i, int):
        i = CodeIndex(i)
    i.validate(levels)
    rem = i.index
    digits = []
    for d in range(levels.dim):
        rem, digit = divmod(rem, levels.levels[d])
        digits.append(digit + levels.digit_low(d))
    return Codeword(tuple(digits))
