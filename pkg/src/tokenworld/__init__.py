"""Token-level core of a robot video world model at desk scale.

Subpackages cover finite scalar quantization, action/vocabulary codecs,
autoregressive vs. sliding-window-re-encoding rollout, the stylized drift
model, GRPO reward-alignment math with a tabular toy policy, and
motion-mask ROI video metrics.
"""

from . import actions, config, drift, fsq, metrics, policy, rewards, rollout, sequence, world

__all__ = [
    "actions",
    "config",
    "drift",
    "fsq",
    "metrics",
    "policy",
    "rewards",
    "rollout",
    "sequence",
    "world",
]

__version__ = "0.1.0"
