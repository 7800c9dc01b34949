"""Deterministic toy pixel world with a lossy patch tokenizer and oracle predictor.

A single bright square moves on a grayscale grid under five discrete
actions.  The tokenizer quantizes per-patch (mean, std) statistics through
the FSQ lattice, so the round-trip error is zero for patch-constant frames
and bounded by half a lattice step otherwise.  The oracle predictor emits
ground-truth next-frame tokens with i.i.d. corruption, standing in for a
learned model's per-step prediction error.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import fsq

__all__ = [
    "ACTIONS",
    "WorldState",
    "ToyTokenizerConfig",
    "step",
    "render",
    "encode_frame",
    "decode_tokens",
    "oracle_predictor",
    "ToyCodec",
    "make_drifting_predictor",
    "simulate_trajectory",
]

ACTIONS = ("up", "down", "left", "right", "stay")
_MOVES = {"up": (-1, 0), "down": (1, 0), "left": (0, -1), "right": (0, 1), "stay": (0, 0)}


@dataclass(frozen=True)
class WorldState:
    height: int
    width: int
    row: int
    col: int
    extent: int
    background: float = 0.25

    def __post_init__(self) -> None:
        if not (0 <= self.row <= self.height - self.extent
                and 0 <= self.col <= self.width - self.extent):
            raise ValueError("object not fully inside grid")
        if not 0.0 <= self.background <= 1.0:
            raise ValueError("background intensity must lie in [0,1]")


@dataclass(frozen=True)
class ToyTokenizerConfig:
    """Patch geometry and FSQ levels of the toy tokenizer.

    Context tokens use fine patches, dynamics tokens a coarser patching of
    the same frame; each patch yields one codebook index from quantizing
    its (mean, std) statistic pair.
    """

    height: int = 32
    width: int = 32
    context_patch: int = 4
    dynamics_patch: int = 8
    levels: fsq.FsqLevels = fsq.FsqLevels((7, 5))

    def __post_init__(self) -> None:
        for p in (self.context_patch, self.dynamics_patch):
            if self.height % p or self.width % p:
                raise ValueError("grid dims must be divisible by both patch sizes")
        if self.levels.dim != 2:
            raise ValueError("tokenizer quantizes a (mean, std) pair per patch")

    @property
    def context_tokens(self) -> int:
        return (self.height // self.context_patch) * (self.width // self.context_patch)

    @property
    def dynamics_tokens(self) -> int:
        return (self.height // self.dynamics_patch) * (self.width // self.dynamics_patch)

    @property
    def codebook_size(self) -> int:
        return fsq.codebook_size(self.levels)

    @property
    def mean_step(self) -> float:
        """Intensity spacing between adjacent mean-lattice points."""
        return 1.0 / (self.levels.levels[0] - 1)


def step(state: WorldState, action: str) -> WorldState:
    """Move the object one cell, clamped at the borders."""
    if action not in _MOVES:
        raise ValueError(f"unknown action {action!r}")
    dr, dc = _MOVES[action]
    row = min(max(state.row + dr, 0), state.height - state.extent)
    col = min(max(state.col + dc, 0), state.width - state.extent)
    return replace(state, row=row, col=col)


def render(state: WorldState) -> np.ndarray:
    """Grayscale frame in [0,1]: object cells 1.0 on constant background."""
    frame = np.full((state.height, state.width), state.background, dtype=float)
    frame[state.row:state.row + state.extent,
          state.col:state.col + state.extent] = 1.0
    return frame


def _patch_stats(frame: np.ndarray, patch: int) -> tuple[np.ndarray, np.ndarray]:
    h, w = frame.shape
    blocks = frame.reshape(h // patch, patch, w // patch, patch).transpose(0, 2, 1, 3)
    flat = blocks.reshape(h // patch, w // patch, patch * patch)
    return flat.mean(axis=-1), flat.std(axis=-1)


def _stats_to_tokens(means, stds, cfg: ToyTokenizerConfig) -> np.ndarray:
    l_mean, l_std = cfg.levels.levels
    tokens = []
    for m, s in zip(means.ravel(), stds.ravel()):
        # Map mean in [0,1] onto lattice coordinates, std in [0,0.5] likewise;
        # arctanh inverts the quantizer's bounding so lattice points map to
        # themselves (idempotent round trip).
        zm = _lattice_to_latent((m - 0.5) * (l_mean - 1), l_mean)
        zs = _lattice_to_latent(min(s, 0.5) / 0.5 * (l_std - 1) - (l_std - 1) / 2, l_std)
        code = fsq.quantize(np.array([zm, zs]), cfg.levels)
        tokens.append(fsq.encode_index(code, cfg.levels).index)
    return np.asarray(tokens, dtype=np.int64)


def _lattice_to_latent(target: float, level: int) -> float:
    half = level / 2.0
    return float(np.arctanh(np.clip(target / half, -0.999999999, 0.999999999)))


def encode_frame(frame: np.ndarray, cfg: ToyTokenizerConfig):
    """Tokenize one frame into (context tokens, dynamics tokens)."""
    frame = np.asarray(frame, dtype=float)
    if frame.shape != (cfg.height, cfg.width):
        raise ValueError(
            f"expected {cfg.height}x{cfg.width} frame, got {frame.shape}"
        )
    ctx = _stats_to_tokens(*_patch_stats(frame, cfg.context_patch), cfg)
    dyn = _stats_to_tokens(*_patch_stats(frame, cfg.dynamics_patch), cfg)
    return ctx, dyn


def decode_tokens(ctx: np.ndarray, dyn: np.ndarray, cfg: ToyTokenizerConfig) -> np.ndarray:
    """Piecewise-constant reconstruction from the dynamics tokens.

    Each coarse patch is filled with its dequantized mean; the context
    tokens are validated for count but the frame content rides on the
    dynamics branch (which encodes the full frame in this toy).
    """
    ctx = np.asarray(ctx)
    dyn = np.asarray(dyn)
    if ctx.shape != (cfg.context_tokens,):
        raise ValueError(f"expected {cfg.context_tokens} context tokens, got {ctx.shape}")
    if dyn.shape != (cfg.dynamics_tokens,):
        raise ValueError(f"expected {cfg.dynamics_tokens} dynamics tokens, got {dyn.shape}")
    l_mean = cfg.levels.levels[0]
    p = cfg.dynamics_patch
    rows, cols = cfg.height // p, cfg.width // p
    frame = np.empty((cfg.height, cfg.width), dtype=float)
    for idx, token in enumerate(dyn):
        digit = fsq.decode_index(int(token), cfg.levels).digits[0]
        value = digit / (l_mean - 1) + 0.5
        r, c = divmod(idx, cols)
        frame[r * p:(r + 1) * p, c * p:(c + 1) * p] = value
    return frame


def oracle_predictor(true_tokens: np.ndarray, corruption_prob: float,
                     rng: np.random.Generator, codebook_size: int) -> np.ndarray:
    """Ground-truth tokens with i.i.d. uniform corruption at rate p."""
    if not 0.0 <= corruption_prob <= 1.0:
        raise ValueError(f"corruption probability {corruption_prob} outside [0,1]")
    tokens = np.asarray(true_tokens, dtype=np.int64).copy()
    hit = rng.random(tokens.shape) < corruption_prob
    tokens[hit] = rng.integers(0, codebook_size, size=int(hit.sum()))
    return tokens


class ToyCodec:
    """encode/decode pair over the toy tokenizer, as the rollout engine expects."""

    def __init__(self, cfg: ToyTokenizerConfig):
        self.cfg = cfg

    def encode(self, frame):
        return encode_frame(frame, self.cfg)

    def decode(self, ctx, dyn_blocks):
        return [decode_tokens(ctx, dyn, self.cfg) for dyn in dyn_blocks]


def simulate_trajectory(state: WorldState, actions) -> list[WorldState]:
    """Ground-truth states after each action, starting from ``state``."""
    states = []
    for a in actions:
        state = step(state, a)
        states.append(state)
    return states


def make_drifting_predictor(true_dyn_blocks, base_corruption: float,
                            cfg: ToyTokenizerConfig, action_dims: int = 1):
    """Predictor whose corruption rate grows with generated context length.

    Long prompts of model-generated tokens are treated as progressively
    out-of-distribution: the effective corruption probability is
    ``base * (1 + g)`` where g is the number of previously generated
    dynamics blocks still in the prompt.  A context refresh shortens the
    prompt and therefore resets g, which is what gives sliding-window
    re-encoding its edge in this toy.
    """
    counter = {"step": 0}
    n_c, n_d = cfg.context_tokens, cfg.dynamics_tokens

    def predict(prompt_tokens, rng: np.random.Generator) -> np.ndarray:
        t = counter["step"]
        if t >= len(true_dyn_blocks):
            raise IndexError(f"predictor exhausted at step {t}")
        generated = (len(prompt_tokens) - n_c - n_d - action_dims) // (n_d + action_dims)
        p_eff = min(1.0, base_corruption * (1 + generated))
        counter["step"] = t + 1
        return oracle_predictor(true_dyn_blocks[t], p_eff, rng, cfg.codebook_size)

    return predict
