"""Equal-width binning of continuous action vectors into the action vocabulary.

Per-dimension min/max bounds are fitted once on a training split and
persisted as a lookup table; binning is clamped so out-of-range actions at
inference map to the edge bins instead of failing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "ActionRangeTable",
    "ActionTokenBlock",
    "fit_ranges",
    "discretize",
    "dequantize",
    "persist_table",
    "load_table",
]

DEFAULT_EPSILON = 1e-6


@dataclass(frozen=True)
class ActionRangeTable:
    """Per-dimension action bounds plus binning parameters."""

    mins: tuple[float, ...]
    maxs: tuple[float, ...]
    bins: int
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self) -> None:
        if len(self.mins) != len(self.maxs):
            raise ValueError("min/max length mismatch")
        if len(self.mins) < 1:
            raise ValueError("need at least one action dimension")
        if any(hi < lo for lo, hi in zip(self.mins, self.maxs)):
            raise ValueError("max must be >= min in every dimension")
        if self.bins < 2:
            raise ValueError(f"invalid bin count {self.bins}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")

    @property
    def dim(self) -> int:
        return len(self.mins)


@dataclass(frozen=True)
class ActionTokenBlock:
    """Token ids of one discretized action, already offset into the vocabulary."""

    ids: tuple[int, ...]
    vocab_offset: int

    def bins(self) -> tuple[int, ...]:
        return tuple(i - self.vocab_offset for i in self.ids)


def fit_ranges(
    samples, bins: int, epsilon: float = DEFAULT_EPSILON
) -> ActionRangeTable:
    """Fit per-dimension extrema over a training split."""
    arr = np.asarray(samples, dtype=float)
    if arr.size == 0:
        raise ValueError("empty sample set")
    if arr.ndim != 2:
        raise ValueError("samples must be a list of equal-length action vectors")
    return ActionRangeTable(
        mins=tuple(float(v) for v in arr.min(axis=0)),
        maxs=tuple(float(v) for v in arr.max(axis=0)),
        bins=bins,
        epsilon=epsilon,
    )


def discretize(
    a, table: ActionRangeTable, vocab_offset: int
) -> ActionTokenBlock:
    """Map an action vector to per-dimension bin tokens.

    bin_i = floor(B * (a_i - min_i) / (max_i - min_i + eps)), clamped into
    [0, B-1]; the token id is bin + vocab_offset.
    """
    a = np.asarray(a, dtype=float)
    if a.shape != (table.dim,):
        raise ValueError(f"expected action of length {table.dim}, got shape {a.shape}")
    mins = np.asarray(table.mins)
    widths = np.asarray(table.maxs) - mins + table.epsilon
    raw = np.floor(table.bins * (a - mins) / widths)
    bins = np.clip(raw, 0, table.bins - 1).astype(int)
    return ActionTokenBlock(
        ids=tuple(int(b) + vocab_offset for b in bins),
        vocab_offset=vocab_offset,
    )


def dequantize(block: ActionTokenBlock, table: ActionRangeTable) -> np.ndarray:
    """Map tokens back to bin-center action values."""
    bins = block.bins()
    if len(bins) != table.dim:
        raise ValueError(f"expected {table.dim} tokens, got {len(bins)}")
    if any(not 0 <= b < table.bins for b in bins):
        raise ValueError(f"token outside action segment: bins {bins}")
    mins = np.asarray(table.mins)
    widths = np.asarray(table.maxs) - mins + table.epsilon
    return mins + (np.asarray(bins) + 0.5) * widths / table.bins


def persist_table(table: ActionRangeTable, path) -> None:
    """Write the range table as JSON with full-precision decimal floats."""
    payload = {
        "dims": table.dim,
        "B_a": table.bins,
        "epsilon": table.epsilon,
        "min": list(table.mins),
        "max": list(table.maxs),
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def load_table(path) -> ActionRangeTable:
    """Read a persisted range table; raises on malformed or invalid files."""
    text = Path(path).read_text()
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed range table {path}: {exc}") from exc
    try:
        dims = payload["dims"]
        bins = payload["B_a"]
        epsilon = payload["epsilon"]
        mins = tuple(float(v) for v in payload["min"])
        maxs = tuple(float(v) for v in payload["max"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed range table {path}: missing field {exc}") from exc
    if bins < 2:
        raise ValueError(f"invalid bin count {bins}")
    if len(mins) != dims or len(maxs) != dims:
        raise ValueError("range table dims field disagrees with min/max length")
    return ActionRangeTable(mins=mins, maxs=maxs, bins=bins, epsilon=epsilon)
