"""Figure rendering for the CLI report path.

Each subcommand that writes a CSV also renders a matplotlib figure next to
it; figures are presentation-only and never acceptance-bearing.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

__all__ = [
    "plot_window_sweep",
    "plot_training_history",
    "plot_rollout_comparison",
    "plot_metric_series",
]


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_window_sweep(rows, path) -> Path:
    """Bound vs. empirical max error across window sizes."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ws = [r["W"] for r in rows]
    ax.plot(ws, [r["bound"] for r in rows], "o-", label="analytic bound")
    ax.plot(ws, [r["empirical_max"] for r in rows], "s--", label="empirical max")
    ax.plot(ws, [r["eta_star"] for r in rows], ":", color="gray", label=r"$\eta^*$")
    ax.set_xlabel("window size W")
    ax.set_ylabel("error")
    ax.set_title("Sliding-window error bound vs. empirical envelope")
    ax.legend()
    return _save(fig, path)


def plot_training_history(history, path) -> Path:
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.5))
    its = [h["iteration"] for h in history]
    for ax, key, label in zip(
        axes, ("mean_reward", "kl", "grad_norm"),
        ("mean reward", "KL to reference", "gradient norm"),
    ):
        ax.plot(its, [h[key] for h in history])
        ax.set_xlabel("iteration")
        ax.set_ylabel(label)
    fig.suptitle("GRPO training history")
    return _save(fig, path)


def plot_rollout_comparison(steps, ar_mse, swr_mse, window, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(steps, ar_mse, label="AR")
    ax.plot(steps, swr_mse, label=f"SWR (W={window})")
    ax.set_xlabel("frame")
    ax.set_ylabel("MSE vs ground truth")
    ax.set_title("Per-frame rollout error, AR vs. sliding-window re-encoding")
    ax.legend()
    return _save(fig, path)


def plot_metric_series(frame_indices, series: dict, path) -> Path:
    """One panel per metric over the frame index."""
    keys = list(series)
    fig, axes = plt.subplots(1, len(keys), figsize=(4 * len(keys), 3.5), squeeze=False)
    for ax, key in zip(axes[0], keys):
        ax.plot(frame_indices, series[key])
        ax.set_xlabel("frame")
        ax.set_ylabel(key)
    fig.suptitle("Per-frame metrics")
    return _save(fig, path)
