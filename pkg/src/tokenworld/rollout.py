"""Autoregressive and sliding-window-re-encoding decoding over injected interfaces.

The engine only manipulates token lists and frames through two injected
callables: a predictor ``predict(prompt_tokens, rng) -> dynamics block``
and a codec with ``encode(frame) -> (ctx, dyn)`` and
``decode(ctx, dyn_blocks) -> frames``.  Vanilla AR is the single-segment
special case (window >= horizon); with a finite window the last decoded
frame of each segment is re-encoded as fresh context for the next one.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DecodeMode",
    "RolloutTrace",
    "RolloutError",
    "decode_ar",
    "decode_swr",
    "prompt_length_profile",
    "StubCodec",
    "make_stub_predictor",
]


class RolloutError(RuntimeError):
    """Predictor or codec failure, annotated with the failing step."""

    def __init__(self, step: int, cause: Exception):
        super().__init__(f"rollout failed at step {step}: {cause}")
        self.step = step
        self.cause = cause


@dataclass(frozen=True)
class DecodeMode:
    """AR, or SWR with window size W >= 1."""

    window: int | None = None  # None means vanilla AR

    def __post_init__(self) -> None:
        if self.window is not None and self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")

    @property
    def is_ar(self) -> bool:
        return self.window is None


@dataclass
class RolloutTrace:
    """Per-step prompt lengths and refresh events of one rollout."""

    prompt_lengths: list[int] = field(default_factory=list)
    reencode_steps: list[int] = field(default_factory=list)
    reencode_times: list[float] = field(default_factory=list)
    segment_starts: list[int] = field(default_factory=list)

    @property
    def max_prompt_length(self) -> int:
        return max(self.prompt_lengths)

    @property
    def mean_prompt_length(self) -> float:
        return float(np.mean(self.prompt_lengths))

    @property
    def reencode_count(self) -> int:
        return len(self.reencode_steps)


def _run(predictor, codec, x0, action_blocks, horizon: int, window: int, rng):
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if len(action_blocks) < horizon:
        raise ValueError(f"need >= {horizon} action blocks, got {len(action_blocks)}")

    ctx, dyn0 = codec.encode(x0)
    trace = RolloutTrace()
    frames: list = []
    step = 0
    while len(frames) < horizon:
        seg_len = min(window, horizon - len(frames))
        trace.segment_starts.append(step + 1)
        prompt = list(ctx) + list(dyn0) + list(action_blocks[step])
        window_dyn = []
        for j in range(seg_len):
            trace.prompt_lengths.append(len(prompt))
            try:
                block = predictor(prompt, rng)
            except Exception as exc:  # annotate with the global step index
                raise RolloutError(step + j + 1, exc) from exc
            window_dyn.append(np.asarray(block))
            if j + 1 < seg_len:
                prompt = prompt + list(block) + list(action_blocks[step + j + 1])
        decoded = codec.decode(ctx, window_dyn)
        frames.extend(decoded)
        step += seg_len
        if len(frames) < horizon:
            t0 = time.perf_counter()
            ctx, dyn0 = codec.encode(decoded[-1])
            trace.reencode_steps.append(step)
            trace.reencode_times.append(time.perf_counter() - t0)
    return frames, trace


def decode_ar(predictor, codec, x0, action_blocks, horizon: int, rng=None):
    """Vanilla autoregressive decoding: one encode of x0, ever-growing prompt."""
    rng = rng if rng is not None else np.random.default_rng(0)
    return _run(predictor, codec, x0, action_blocks, horizon, window=horizon, rng=rng)


def decode_swr(predictor, codec, x0, action_blocks, horizon: int, window: int, rng=None):
    """Sliding-window decoding with ceil(T/W) segments and T//W-ish refreshes."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    rng = rng if rng is not None else np.random.default_rng(0)
    return _run(predictor, codec, x0, action_blocks, horizon, window=window, rng=rng)


def prompt_length_profile(context_tokens: int, dynamics_tokens: int,
                          action_dims: int, horizon: int,
                          mode: DecodeMode) -> tuple[int, float]:
    """Analytic (max, mean) prompt length for a mode and token geometry.

    The prompt before generating block j of a segment holds the context,
    the seed dynamics block, and j action/dynamics extensions:
    N_c + N_d + D_a + (j-1)*(N_d + D_a).  The max is reached at the last
    block of a full window (j = min(W, T)).
    """
    window = horizon if mode.is_ar else min(mode.window, horizon)
    base = context_tokens + dynamics_tokens + action_dims
    extend = dynamics_tokens + action_dims
    lengths = []
    done = 0
    while done < horizon:
        seg = min(window, horizon - done)
        lengths.extend(base + j * extend for j in range(seg))
        done += seg
    return max(lengths), float(np.mean(lengths))


class StubCodec:
    """Count-faithful codec with placeholder pixels, for token-level traces."""

    def __init__(self, context_tokens: int, dynamics_tokens: int):
        self.context_tokens = context_tokens
        self.dynamics_tokens = dynamics_tokens

    def encode(self, frame):
        return (np.zeros(self.context_tokens, dtype=np.int64),
                np.zeros(self.dynamics_tokens, dtype=np.int64))

    def decode(self, ctx, dyn_blocks):
        return [np.zeros((1, 1)) for _ in dyn_blocks]


def make_stub_predictor(dynamics_tokens: int):
    """Predictor emitting zero blocks of the right width."""

    def predict(prompt_tokens, rng):
        return np.zeros(dynamics_tokens, dtype=np.int64)

    return predict
