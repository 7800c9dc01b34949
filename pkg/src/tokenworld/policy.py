"""First-order Markov categorical policy with manual gradients.

The policy is a table: a start-distribution logit vector and a transition
logit matrix (row = previous token).  This is the smallest structure where
next-token prediction, sequence log-probabilities, exact categorical KL,
and the clipped group-relative surrogate are all nontrivial, while keeping
every gradient finite-difference checkable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rewards import RewardConfig, group_advantages

__all__ = [
    "TabularPolicy",
    "TrainConfig",
    "sample_rollout",
    "log_prob",
    "sequence_kl",
    "surrogate_loss",
    "grpo_gradient",
    "train",
]

_RATIO_CLAMP = 20.0


@dataclass
class TabularPolicy:
    start_logits: np.ndarray  # (V,)
    logits: np.ndarray  # (V, V): row = previous token

    @classmethod
    def uniform(cls, vocab: int) -> "TabularPolicy":
        return cls(np.zeros(vocab), np.zeros((vocab, vocab)))

    @property
    def vocab(self) -> int:
        return self.start_logits.shape[0]

    def validate(self) -> None:
        if not (np.all(np.isfinite(self.start_logits))
                and np.all(np.isfinite(self.logits))):
            raise ValueError("policy logits must be finite")

    def copy(self) -> "TabularPolicy":
        return TabularPolicy(self.start_logits.copy(), self.logits.copy())


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def sample_rollout(policy: TabularPolicy, length: int,
                   rng: np.random.Generator):
    """Ancestral sampling; returns (tokens, exact log-probability)."""
    if length < 1:
        raise ValueError("rollout length must be >= 1")
    policy.validate()
    tokens = np.empty(length, dtype=np.int64)
    logp = 0.0
    log_probs = _log_softmax(policy.start_logits)
    for i in range(length):
        probs = np.exp(log_probs)
        tokens[i] = rng.choice(policy.vocab, p=probs / probs.sum())
        logp += float(log_probs[tokens[i]])
        if i + 1 < length:
            log_probs = _log_softmax(policy.logits[tokens[i]])
    return tokens, logp


def log_prob(policy: TabularPolicy, sequence) -> float:
    """Sum of log-softmax terms along the chain; 0 for an empty sequence."""
    seq = np.asarray(sequence, dtype=np.int64)
    if seq.size == 0:
        return 0.0
    if np.any(seq < 0) or np.any(seq >= policy.vocab):
        raise ValueError("token outside vocabulary")
    logp = float(_log_softmax(policy.start_logits)[seq[0]])
    rows = _log_softmax(policy.logits)
    for prev, nxt in zip(seq[:-1], seq[1:]):
        logp += float(rows[prev, nxt])
    return logp


def _visited_states(sequence) -> list[int | None]:
    """Conditioning states along a sequence: start (None) then each prefix token."""
    seq = np.asarray(sequence, dtype=np.int64)
    return [None] + [int(t) for t in seq[:-1]]


def sequence_kl(policy: TabularPolicy, reference: TabularPolicy, sequence) -> float:
    """Exact categorical KL(policy || reference) summed over the sequence's
    conditioning states (start distribution plus each visited row)."""
    logp_rows = _log_softmax(policy.logits)
    logq_rows = _log_softmax(reference.logits)
    logp_start = _log_softmax(policy.start_logits)
    logq_start = _log_softmax(reference.start_logits)
    total = 0.0
    for state in _visited_states(sequence):
        lp = logp_start if state is None else logp_rows[state]
        lq = logq_start if state is None else logq_rows[state]
        total += float(np.exp(lp) @ (lp - lq))
    return total


def _clipped_terms(logp_new, logp_old, advantages, clip_eps):
    log_rho = np.clip(np.asarray(logp_new) - np.asarray(logp_old),
                      -_RATIO_CLAMP, _RATIO_CLAMP)
    rho = np.exp(log_rho)
    clipped = np.clip(rho, 1.0 - clip_eps, 1.0 + clip_eps)
    A = np.asarray(advantages, dtype=float)
    terms = np.minimum(rho * A, clipped * A)
    # Gradient flows through rho only where the unclipped branch is selected
    # and the log-ratio clamp is not saturated.
    active = (rho * A <= clipped * A) & (np.abs(logp_new - logp_old) < _RATIO_CLAMP)
    return terms, rho, active


def surrogate_loss(policy: TabularPolicy, sequences, logp_old, advantages,
                   reference: TabularPolicy, cfg: RewardConfig) -> float:
    """Full GRPO loss as a pure function of the policy parameters.

    Used both by training and by the finite-difference gradient check.
    """
    logp_new = np.array([log_prob(policy, s) for s in sequences])
    terms, _, _ = _clipped_terms(logp_new, logp_old, advantages, cfg.clip_eps)
    kl = float(np.mean([sequence_kl(policy, reference, s) for s in sequences]))
    return -float(terms.mean()) + cfg.kl_beta * kl


def grpo_gradient(policy: TabularPolicy, sequences, logp_old, advantages,
                  reference: TabularPolicy, cfg: RewardConfig):
    """Analytic gradient of :func:`surrogate_loss` w.r.t. both logit tables."""
    policy.validate()
    G = len(sequences)
    V = policy.vocab
    g_start = np.zeros(V)
    g_logits = np.zeros((V, V))

    logp_new = np.array([log_prob(policy, s) for s in sequences])
    if not np.all(np.isfinite(logp_new)):
        raise ValueError("non-finite log-probability")
    _, rho, active = _clipped_terms(logp_new, logp_old, advantages, cfg.clip_eps)

    p_start = np.exp(_log_softmax(policy.start_logits))
    p_rows = np.exp(_log_softmax(policy.logits))

    A = np.asarray(advantages, dtype=float)
    for j, seq in enumerate(sequences):
        seq = np.asarray(seq, dtype=np.int64)
        if not active[j] or A[j] == 0.0:
            continue
        w = rho[j] * A[j] / G  # d(-loss surrogate)/d logp_j
        g_start -= w * (_one_hot(seq[0], V) - p_start)
        for prev, nxt in zip(seq[:-1], seq[1:]):
            g_logits[prev] -= w * (_one_hot(nxt, V) - p_rows[prev])

    if cfg.kl_beta > 0:
        lq_start = _log_softmax(reference.start_logits)
        lq_rows = _log_softmax(reference.logits)
        lp_start = _log_softmax(policy.start_logits)
        lp_rows = _log_softmax(policy.logits)
        for seq in sequences:
            for state in _visited_states(seq):
                if state is None:
                    lp, lq, p = lp_start, lq_start, p_start
                else:
                    lp, lq, p = lp_rows[state], lq_rows[state], p_rows[state]
                diff = lp - lq
                kl_s = float(p @ diff)
                grad_s = p * (diff - kl_s) * (cfg.kl_beta / G)
                if state is None:
                    g_start += grad_s
                else:
                    g_logits[state] += grad_s
    return g_start, g_logits


def _one_hot(i: int, n: int) -> np.ndarray:
    v = np.zeros(n)
    v[i] = 1.0
    return v


@dataclass
class TrainConfig:
    vocab: int = 5
    length: int = 8
    group_size: int = 16
    iterations: int = 200
    learning_rate: float = 0.1
    reward: RewardConfig = field(default_factory=RewardConfig)

    def __post_init__(self) -> None:
        if self.group_size < 2:
            raise ValueError("group size must be >= 2")
        if self.iterations < 0:
            raise ValueError("iteration count must be nonnegative")


def train(policy: TabularPolicy, reward_fn, cfg: TrainConfig, seed: int = 0):
    """GRPO training loop; the old-policy snapshot refreshes every iteration.

    Returns a history of per-iteration records (mean reward, KL to the
    frozen initial reference, gradient norm).
    """
    rng = np.random.default_rng(seed)
    reference = policy.copy()
    history = []
    for it in range(cfg.iterations):
        old = policy.copy()
        sequences, logp_old = [], []
        for _ in range(cfg.group_size):
            seq, lp = sample_rollout(old, cfg.length, rng)
            sequences.append(seq)
            logp_old.append(lp)
        rewards = np.array([reward_fn(s) for s in sequences], dtype=float)
        advantages = group_advantages(rewards, cfg.reward.std_guard)
        g_start, g_logits = grpo_gradient(
            policy, sequences, np.array(logp_old), advantages, reference, cfg.reward
        )
        policy.start_logits -= cfg.learning_rate * g_start
        policy.logits -= cfg.learning_rate * g_logits
        kl = float(np.mean([sequence_kl(policy, reference, s) for s in sequences]))
        grad_norm = float(np.sqrt((g_start ** 2).sum() + (g_logits ** 2).sum()))
        history.append({
            "iteration": it,
            "mean_reward": float(rewards.mean()),
            "kl": kl,
            "grad_norm": grad_norm,
        })
    return history
