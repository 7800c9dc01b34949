"""Joint vocabulary layout and interleaved token-sequence assembly.

Vocabulary segments: dynamics [0,K), context [K,2K), actions [2K,2K+B_a),
then one reserved BOS and EOS id each.  Sequences interleave one context
block with per-frame dynamics+action blocks; the loss mask supervises only
the dynamics tokens of frames 2..T.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "TokenKind",
    "VocabLayout",
    "ClipSpec",
    "TokenSequence",
    "LossMask",
    "make_layout",
    "build_sequence",
    "build_loss_mask",
    "classify_token",
    "extract_segments",
    "save_sequence",
    "load_sequence",
]


class TokenKind(enum.Enum):
    DYNAMICS = "dynamics"
    CONTEXT = "context"
    ACTION = "action"
    BOS = "bos"
    EOS = "eos"


@dataclass(frozen=True)
class VocabLayout:
    """Segment offsets of the joint vocabulary."""

    codebook_size: int  # K
    action_bins: int  # B_a

    def __post_init__(self) -> None:
        if self.codebook_size < 1 or self.action_bins < 1:
            raise ValueError("codebook size and action bins must be >= 1")

    @property
    def context_offset(self) -> int:
        return self.codebook_size

    @property
    def action_offset(self) -> int:
        return 2 * self.codebook_size

    @property
    def bos(self) -> int:
        return 2 * self.codebook_size + self.action_bins

    @property
    def eos(self) -> int:
        return self.bos + 1

    @property
    def vocab_size(self) -> int:
        return 2 * self.codebook_size + self.action_bins + 2


@dataclass(frozen=True)
class ClipSpec:
    """Token-count geometry of one training clip."""

    frames: int  # T
    context_frames: int  # t_c
    context_tokens: int  # N_c
    dynamics_tokens: int  # N_d per frame
    action_dims: int  # D_a

    def __post_init__(self) -> None:
        if self.context_frames < 1:
            raise ValueError("need at least one context frame")
        if self.frames - self.context_frames < 1:
            raise ValueError("need at least one dynamic frame")
        if min(self.context_tokens, self.dynamics_tokens, self.action_dims) < 1:
            raise ValueError("all token counts must be positive")

    @property
    def dynamic_frames(self) -> int:
        """t_d = T - t_c."""
        return self.frames - self.context_frames

    @property
    def sequence_length(self) -> int:
        """S = N_c + t_d * (N_d + D_a)."""
        return self.context_tokens + self.dynamic_frames * (
            self.dynamics_tokens + self.action_dims
        )

    @property
    def visual_tokens(self) -> int:
        """Visual tokens per clip: N_c + t_d * N_d."""
        return self.context_tokens + self.dynamic_frames * self.dynamics_tokens

    @property
    def supervised_positions(self) -> int:
        """(t_d - 1) * N_d: dynamics tokens of frames 2..T."""
        return (self.dynamic_frames - 1) * self.dynamics_tokens


@dataclass(frozen=True)
class TokenSequence:
    """Interleaved token ids plus a per-position segment map.

    ``kinds`` holds a TokenKind per position; ``frame_of`` holds the
    1-based dynamic-frame index for dynamics/action positions and -1 for
    context positions.
    """

    ids: np.ndarray
    kinds: tuple[TokenKind, ...]
    frame_of: tuple[int, ...]
    spec: ClipSpec
    layout: VocabLayout


@dataclass(frozen=True)
class LossMask:
    supervised: np.ndarray  # bool per position

    @property
    def count(self) -> int:
        return int(self.supervised.sum())


def make_layout(codebook_size: int, action_bins: int) -> VocabLayout:
    return VocabLayout(codebook_size=codebook_size, action_bins=action_bins)


def build_sequence(ctx, dyn_blocks, action_blocks, layout: VocabLayout,
                   spec: ClipSpec) -> TokenSequence:
    """Assemble [ctx || d_1 || a_1 || ... || d_td || a_td].

    ``ctx`` and ``dyn_blocks`` are raw codebook indices (< K); context ids
    are stored offset by +K, dynamics ids raw.  ``action_blocks`` must
    already carry action-segment ids.  Exactly t_d action blocks are
    required; the caller aliases the final block to the last transition's
    action.
    """
    ctx = np.asarray(ctx, dtype=np.int64)
    if ctx.shape != (spec.context_tokens,):
        raise ValueError(f"expected {spec.context_tokens} context tokens, got {ctx.shape}")
    if len(dyn_blocks) != spec.dynamic_frames:
        raise ValueError(
            f"expected {spec.dynamic_frames} dynamics blocks, got {len(dyn_blocks)}"
        )
    if len(action_blocks) != spec.dynamic_frames:
        raise ValueError(
            f"expected {spec.dynamic_frames} action blocks, got {len(action_blocks)}"
        )

    K = layout.codebook_size
    if np.any(ctx < 0) or np.any(ctx >= K):
        raise ValueError("context index outside [0, K)")

    ids = [ctx + layout.context_offset]
    kinds: list[TokenKind] = [TokenKind.CONTEXT] * spec.context_tokens
    frames: list[int] = [-1] * spec.context_tokens
    for t, (dyn, act) in enumerate(zip(dyn_blocks, action_blocks), start=1):
        dyn = np.asarray(dyn, dtype=np.int64)
        if dyn.shape != (spec.dynamics_tokens,):
            raise ValueError(f"dynamics block {t} has shape {dyn.shape}")
        if np.any(dyn < 0) or np.any(dyn >= K):
            raise ValueError(f"dynamics index outside [0, K) in block {t}")
        act_ids = np.asarray(getattr(act, "ids", act), dtype=np.int64)
        if act_ids.shape != (spec.action_dims,):
            raise ValueError(f"action block {t} has {act_ids.shape} ids")
        lo, hi = layout.action_offset, layout.action_offset + layout.action_bins
        if np.any(act_ids < lo) or np.any(act_ids >= hi):
            raise ValueError(f"action id outside [{lo}, {hi}) in block {t}")
        ids.append(dyn)
        ids.append(act_ids)
        kinds += [TokenKind.DYNAMICS] * spec.dynamics_tokens
        kinds += [TokenKind.ACTION] * spec.action_dims
        frames += [t] * (spec.dynamics_tokens + spec.action_dims)

    flat = np.concatenate(ids)
    assert flat.shape == (spec.sequence_length,)
    return TokenSequence(
        ids=flat, kinds=tuple(kinds), frame_of=tuple(frames), spec=spec, layout=layout
    )


def build_loss_mask(spec: ClipSpec) -> LossMask:
    """Supervise only the dynamics tokens of dynamic frames 2..t_d."""
    mask = np.zeros(spec.sequence_length, dtype=bool)
    pos = spec.context_tokens
    for t in range(1, spec.dynamic_frames + 1):
        if t >= 2:
            mask[pos:pos + spec.dynamics_tokens] = True
        pos += spec.dynamics_tokens + spec.action_dims
    return LossMask(supervised=mask)


def classify_token(token_id: int, layout: VocabLayout) -> TokenKind:
    if not 0 <= token_id < layout.vocab_size:
        raise ValueError(f"token id {token_id} outside [0, {layout.vocab_size})")
    if token_id < layout.context_offset:
        return TokenKind.DYNAMICS
    if token_id < layout.action_offset:
        return TokenKind.CONTEXT
    if token_id < layout.bos:
        return TokenKind.ACTION
    return TokenKind.BOS if token_id == layout.bos else TokenKind.EOS


def extract_segments(seq: TokenSequence):
    """Invert build_sequence: recover (ctx, dyn_blocks, action_id_blocks)."""
    spec, layout = seq.spec, seq.layout
    pos = spec.context_tokens
    ctx = seq.ids[:pos] - layout.context_offset
    dyn_blocks = []
    action_blocks = []
    for _ in range(spec.dynamic_frames):
        dyn_blocks.append(seq.ids[pos:pos + spec.dynamics_tokens].copy())
        pos += spec.dynamics_tokens
        action_blocks.append(seq.ids[pos:pos + spec.action_dims].copy())
        pos += spec.action_dims
    return ctx, dyn_blocks, action_blocks


def save_sequence(seq: TokenSequence, path) -> None:
    """Write ids as little-endian uint32 plus a JSON sidecar of spec/layout."""
    path = Path(path)
    data = np.asarray(seq.ids, dtype="<u4").tobytes()
    path.write_bytes(data)
    sidecar = {
        "spec": {
            "frames": seq.spec.frames,
            "context_frames": seq.spec.context_frames,
            "context_tokens": seq.spec.context_tokens,
            "dynamics_tokens": seq.spec.dynamics_tokens,
            "action_dims": seq.spec.action_dims,
        },
        "layout": {
            "codebook_size": seq.layout.codebook_size,
            "action_bins": seq.layout.action_bins,
        },
    }
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(sidecar, indent=2) + "\n"
    )


def load_sequence(path) -> TokenSequence:
    path = Path(path)
    sidecar = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    spec = ClipSpec(**sidecar["spec"])
    layout = VocabLayout(**sidecar["layout"])
    ids = np.frombuffer(path.read_bytes(), dtype="<u4").astype(np.int64)
    if ids.shape != (spec.sequence_length,):
        raise ValueError(
            f"token file holds {ids.size} ids, spec demands {spec.sequence_length}"
        )
    ctx = ids[:spec.context_tokens] - layout.context_offset
    pos = spec.context_tokens
    dyn_blocks, action_blocks = [], []
    for _ in range(spec.dynamic_frames):
        dyn_blocks.append(ids[pos:pos + spec.dynamics_tokens])
        pos += spec.dynamics_tokens
        action_blocks.append(ids[pos:pos + spec.action_dims])
        pos += spec.action_dims
    return build_sequence(ctx, dyn_blocks, action_blocks, layout, spec)
