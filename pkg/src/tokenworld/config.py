"""Run configuration, deterministic seeding, and CSV/PGM plumbing.

A run is fully described by one JSON config; unknown keys are rejected and
every invariant failure names the offending field path.  All randomness
flows from a single master seed through labeled substreams, so identical
config + seed gives byte-identical delimited outputs (timings live in a
separate optional file).
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .fsq import FsqLevels
from .rewards import RewardConfig
from .sequence import ClipSpec

__all__ = [
    "ConfigError",
    "RunConfig",
    "SeedStream",
    "parse_config",
    "config_echo",
    "write_csv",
    "read_csv",
    "write_pgm",
    "read_pgm",
]


class ConfigError(ValueError):
    """Config syntax or invariant violation, carrying the field path."""


@dataclass(frozen=True)
class DecodeConfig:
    window: int = 6  # W
    horizon: int = 30  # rollout length T

    def __post_init__(self) -> None:
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")


@dataclass(frozen=True)
class DriftConfig:
    alpha: float = 0.3
    eps: float = 0.01
    delta_q: float = 0.05
    window_list: tuple[int, ...] = (1, 2, 4, 6, 8, 16)
    horizon: int = 1000
    trials: int = 100

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0,1], got {self.alpha}")
        if self.eps < 0 or self.delta_q < 0:
            raise ValueError("eps and delta_q must be nonnegative")
        if not self.window_list or any(w < 1 for w in self.window_list):
            raise ValueError(f"window_list entries must be >= 1, got {self.window_list}")
        if self.horizon < 1 or self.trials < 1:
            raise ValueError("horizon and trials must be >= 1")


@dataclass(frozen=True)
class WorldConfig:
    height: int = 32
    width: int = 32
    context_patch: int = 4
    dynamics_patch: int = 8
    extent: int = 4
    background: float = 0.25
    corruption: float = 0.02

    def __post_init__(self) -> None:
        if self.height < 1 or self.width < 1:
            raise ValueError("height and width must be positive")
        if self.extent < 0 or self.extent > min(self.height, self.width):
            raise ValueError(f"extent {self.extent} does not fit the grid")
        if not 0.0 <= self.background <= 1.0:
            raise ValueError(f"background must lie in [0,1], got {self.background}")
        if not 0.0 <= self.corruption <= 1.0:
            raise ValueError(f"corruption must lie in [0,1], got {self.corruption}")


@dataclass(frozen=True)
class TrainSection:
    vocab: int = 5
    length: int = 8
    group_size: int = 16
    iterations: int = 200
    learning_rate: float = 0.1
    target_token: int = 0

    def __post_init__(self) -> None:
        if self.vocab < 2:
            raise ValueError(f"vocab must be >= 2, got {self.vocab}")
        if self.length < 1:
            raise ValueError(f"length must be >= 1, got {self.length}")
        if self.group_size < 2:
            raise ValueError(f"group_size must be >= 2, got {self.group_size}")
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")
        if not 0 <= self.target_token < self.vocab:
            raise ValueError(f"target_token {self.target_token} outside vocab")


@dataclass(frozen=True)
class MaskConfig:
    tau: int = 3
    theta: float = 15.0
    kernel: int = 15

    def __post_init__(self) -> None:
        if self.tau < 1:
            raise ValueError(f"tau must be >= 1, got {self.tau}")
        if self.theta < 0:
            raise ValueError(f"theta must be nonnegative, got {self.theta}")
        if self.kernel < 1:
            raise ValueError(f"kernel must be >= 1, got {self.kernel}")


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    output_dir: str = "out"
    levels: FsqLevels = field(default_factory=lambda: FsqLevels((7, 5, 5, 5, 5)))
    action_bins: int = 256
    clip: ClipSpec = field(default_factory=lambda: ClipSpec(
        frames=8, context_frames=1, context_tokens=1280,
        dynamics_tokens=80, action_dims=13))
    decode: DecodeConfig = field(default_factory=DecodeConfig)
    drift: DriftConfig = field(default_factory=DriftConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    train: TrainSection = field(default_factory=TrainSection)
    world: WorldConfig = field(default_factory=WorldConfig)
    mask: MaskConfig = field(default_factory=MaskConfig)


_SECTION_KEYS = {
    "clip": ("clip", ClipSpec),
    "decode": ("decode", DecodeConfig),
    "drift": ("drift", DriftConfig),
    "reward": ("reward", RewardConfig),
    "train": ("train", TrainSection),
    "world": ("world", WorldConfig),
    "mask": ("mask", MaskConfig),
}


def _build_section(cls, data: dict, path: str):
    allowed = {f.name for f in fields(cls)}
    for key in data:
        if key not in allowed:
            raise ConfigError(f"unknown key at {path}.{key}")
    kwargs = dict(data)
    for key, value in kwargs.items():
        if isinstance(value, list):
            kwargs[key] = tuple(value)
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        bad = _offending_field(cls, kwargs, path, exc)
        raise ConfigError(f"invalid value at {bad}: {exc}") from exc


def _offending_field(cls, kwargs: dict, path: str, exc: Exception) -> str:
    # Validation messages name the failing field; fall back to the section.
    message = str(exc)
    for f in fields(cls):
        if f.name in kwargs and f.name in message:
            return f"{path}.{f.name}"
    return path


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON config; defaults fill every omitted field."""
    try:
        data = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config syntax error at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")

    top_allowed = {"seed", "output_dir", "vocab"} | set(_SECTION_KEYS)
    for key in data:
        if key not in top_allowed:
            raise ConfigError(f"unknown key at {key}")

    kwargs: dict = {}
    if "seed" in data:
        if not isinstance(data["seed"], int):
            raise ConfigError("invalid value at seed: must be an integer")
        kwargs["seed"] = data["seed"]
    if "output_dir" in data:
        kwargs["output_dir"] = str(data["output_dir"])
    if "vocab" in data:
        vocab = data["vocab"]
        if not isinstance(vocab, dict):
            raise ConfigError("invalid value at vocab: must be an object")
        for key in vocab:
            if key not in ("levels", "action_bins"):
                raise ConfigError(f"unknown key at vocab.{key}")
        if "levels" in vocab:
            try:
                kwargs["levels"] = FsqLevels.parse(str(vocab["levels"]))
            except ValueError as exc:
                raise ConfigError(f"invalid value at vocab.levels: {exc}") from exc
        if "action_bins" in vocab:
            if not isinstance(vocab["action_bins"], int) or vocab["action_bins"] < 1:
                raise ConfigError("invalid value at vocab.action_bins")
            kwargs["action_bins"] = vocab["action_bins"]
    for key, (attr, cls) in _SECTION_KEYS.items():
        if key in data:
            if not isinstance(data[key], dict):
                raise ConfigError(f"invalid value at {key}: must be an object")
            kwargs[attr] = _build_section(cls, data[key], key)
    return RunConfig(**kwargs)


def config_echo(cfg: RunConfig) -> str:
    """Serialize the effective config; parse(config_echo(cfg)) == cfg."""
    payload = {
        "seed": cfg.seed,
        "output_dir": cfg.output_dir,
        "vocab": {
            "levels": ",".join(str(l) for l in cfg.levels.levels),
            "action_bins": cfg.action_bins,
        },
        "clip": {
            "frames": cfg.clip.frames,
            "context_frames": cfg.clip.context_frames,
            "context_tokens": cfg.clip.context_tokens,
            "dynamics_tokens": cfg.clip.dynamics_tokens,
            "action_dims": cfg.clip.action_dims,
        },
        "decode": _section_dict(cfg.decode),
        "drift": _section_dict(cfg.drift),
        "reward": _section_dict(cfg.reward),
        "train": _section_dict(cfg.train),
        "world": _section_dict(cfg.world),
        "mask": _section_dict(cfg.mask),
    }
    return json.dumps(payload, indent=2) + "\n"


def _section_dict(section) -> dict:
    out = {}
    for f in fields(section):
        value = getattr(section, f.name)
        out[f.name] = list(value) if isinstance(value, tuple) else value
    return out


class SeedStream:
    """Labeled, independent RNG substreams derived from one master seed."""

    def __init__(self, master_seed: int):
        self.master_seed = int(master_seed)

    def derive(self, label: str) -> np.random.Generator:
        digest = hashlib.sha256(f"{self.master_seed}:{label}".encode()).digest()
        return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def write_csv(path, header, rows, seed: int | None = None) -> None:
    """RFC-4180-style CSV with a leading ``# seed=N`` echo line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        if seed is not None:
            fh.write(f"# seed={seed}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def read_csv(path):
    """Read a CSV written by :func:`write_csv`; returns (header, rows, seed)."""
    seed = None
    with Path(path).open(newline="") as fh:
        first = fh.readline()
        if first.startswith("# seed="):
            seed = int(first.strip().split("=", 1)[1])
        else:
            fh.seek(0)
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    return header, rows, seed


def write_pgm(path, frame) -> None:
    """Binary PGM (P5), maxval 255, row-major; values clipped into [0,1]."""
    frame = np.asarray(frame, dtype=float)
    if frame.ndim != 2:
        raise ValueError("PGM frames must be 2-D grayscale")
    data = np.clip(np.round(frame * 255.0), 0, 255).astype(np.uint8)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        fh.write(f"P5\n{data.shape[1]} {data.shape[0]}\n255\n".encode())
        fh.write(data.tobytes())


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM back into a [0,1] float frame."""
    raw = Path(path).read_bytes()
    if raw[:2] != b"P5":
        if raw[:2] == b"P2":
            raise ValueError("unsupported PGM variant P2 (ASCII); expected binary P5")
        raise ValueError(f"malformed PGM header in {path}")
    fields_out = []
    pos = 2
    while len(fields_out) < 3:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":  # comment line
            while pos < len(raw) and raw[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        fields_out.append(raw[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        width, height, maxval = (int(v) for v in fields_out)
    except ValueError as exc:
        raise ValueError(f"malformed PGM header in {path}") from exc
    if maxval != 255:
        raise ValueError(f"unsupported PGM maxval {maxval}; expected 255")
    pixels = np.frombuffer(raw[pos:pos + width * height], dtype=np.uint8)
    if pixels.size != width * height:
        raise ValueError(f"truncated PGM payload in {path}")
    return pixels.reshape(height, width).astype(float) / 255.0
