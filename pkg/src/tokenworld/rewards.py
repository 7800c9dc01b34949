"""Rubric-score normalization, composite reward, distillation loss, and GRPO math.

Six rubric dimensions with maxima (3, 2, 1, 1, 1, 2) are normalized to
[0,1], aggregated by a weighted sum into a scalar reward, and groups of
rollout rewards are turned into mean/std-normalized advantages feeding a
clipped importance-ratio surrogate with KL regularization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RUBRIC_MAX",
    "ScoreVector",
    "RewardConfig",
    "RolloutGroup",
    "normalize_scores",
    "composite_reward",
    "huber",
    "distill_loss",
    "group_advantages",
    "grpo_objective",
]

RUBRIC_MAX = (3.0, 2.0, 1.0, 1.0, 1.0, 2.0)
_RATIO_CLAMP = 20.0  # log-space clamp on the importance ratio


@dataclass(frozen=True)
class ScoreVector:
    """Raw rubric scores, one per dimension, within [0, max_k]."""

    scores: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.scores) != len(RUBRIC_MAX):
            raise ValueError(f"expected {len(RUBRIC_MAX)} scores, got {len(self.scores)}")
        for k, (s, m) in enumerate(zip(self.scores, RUBRIC_MAX)):
            if not 0.0 <= s <= m:
                raise ValueError(f"score {s} outside [0, {m}] in dimension {k}")


@dataclass(frozen=True)
class RewardConfig:
    weights: tuple[float, ...] = tuple(1.0 / 6.0 for _ in range(6))
    distill_weights: tuple[float, ...] = tuple(1.0 for _ in range(6))
    huber_delta: float = 0.5
    clip_eps: float = 0.2
    kl_beta: float = 0.01
    std_guard: float = 1e-8

    def __post_init__(self) -> None:
        if any(w < 0 for w in self.weights + self.distill_weights):
            raise ValueError("weights must be nonnegative")
        if not self.huber_delta > 0:
            raise ValueError("Huber threshold must be positive")
        if not 0.0 < self.clip_eps < 1.0:
            raise ValueError("clip range must lie in (0, 1)")
        if self.kl_beta < 0:
            raise ValueError("KL coefficient must be nonnegative")


@dataclass(frozen=True)
class RolloutGroup:
    """G rollouts with scalar rewards and sequence log-probabilities."""

    rewards: tuple[float, ...]
    logp_new: tuple[float, ...]
    logp_old: tuple[float, ...]
    logp_ref: tuple[float, ...]

    def __post_init__(self) -> None:
        n = len(self.rewards)
        if n < 2:
            raise ValueError("a rollout group needs G >= 2 entries")
        if not len(self.logp_new) == len(self.logp_old) == len(self.logp_ref) == n:
            raise ValueError("group field lengths disagree")
        for vals in (self.logp_new, self.logp_old, self.logp_ref):
            if not all(np.isfinite(vals)):
                raise ValueError("log-probabilities must be finite")

    @property
    def size(self) -> int:
        return len(self.rewards)


def normalize_scores(raw: ScoreVector) -> np.ndarray:
    """Divide each dimension by its rubric maximum."""
    return np.asarray(raw.scores) / np.asarray(RUBRIC_MAX)


def composite_reward(normalized, weights=None) -> float:
    """Weighted sum of the six normalized scores."""
    s = np.asarray(normalized, dtype=float)
    w = np.asarray(weights if weights is not None else RewardConfig().weights)
    if w.shape != s.shape:
        raise ValueError("weights must match score dimensionality")
    return float(w @ s)


def huber(residual: float, delta: float) -> float:
    r = abs(residual)
    if r <= delta:
        return 0.5 * r * r
    return delta * (r - 0.5 * delta)


def distill_loss(student, teacher, weights=None, delta: float = 0.5) -> float:
    """Per-dimension weighted Huber loss between normalized score vectors."""
    s = np.asarray(student, dtype=float)
    t = np.asarray(teacher, dtype=float)
    if s.shape != t.shape:
        raise ValueError("student/teacher shapes disagree")
    w = np.asarray(weights if weights is not None else np.ones_like(s))
    return float(sum(wk * huber(sk - tk, delta) for wk, sk, tk in zip(w, s, t)))


def group_advantages(rewards, std_guard: float = 1e-8) -> np.ndarray:
    """(R - mean) / population std, zeroed for degenerate groups."""
    r = np.asarray(rewards, dtype=float)
    if r.size < 2:
        raise ValueError("advantage normalization needs G >= 2 rewards")
    std = float(r.std())  # population std
    if std <= std_guard:
        return np.zeros_like(r)
    return (r - r.mean()) / std


def grpo_objective(group: RolloutGroup, advantages, cfg: RewardConfig,
                   kl: float | None = None):
    """Clipped surrogate loss plus KL penalty.

    loss = -(1/G) sum_j min(rho_j A_j, clip(rho_j) A_j) + beta * KL, with
    rho = exp(logp_new - logp_old) clamped to [e^-20, e^20].  ``kl`` is the
    exact KL to the reference policy when the caller can compute it (the
    tabular toy policy does); otherwise the per-sequence log-ratio mean
    against the reference is used as a plug-in.
    """
    A = np.asarray(advantages, dtype=float)
    if A.shape != (group.size,):
        raise ValueError("advantages must match group size")
    log_rho = np.clip(
        np.asarray(group.logp_new) - np.asarray(group.logp_old),
        -_RATIO_CLAMP, _RATIO_CLAMP,
    )
    rho = np.exp(log_rho)
    clipped_rho = np.clip(rho, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps)
    terms = np.minimum(rho * A, clipped_rho * A)
    if kl is None:
        kl = float(np.mean(np.asarray(group.logp_new) - np.asarray(group.logp_ref)))
    loss = -float(terms.mean()) + cfg.kl_beta * kl
    return loss, terms, kl
