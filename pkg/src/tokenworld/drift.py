"""Stylized drift-error model: analytic bounds and Monte-Carlo envelopes.

The model tracks a scalar per-step error e_t that contracts by a factor
alpha and absorbs a fresh per-step error bounded by eps.  Without context
refresh the error compounds over the whole horizon; with refresh every W
steps the carried context error follows the linear recurrence
eta_{k+1} = W*eps + alpha^W * eta_k + delta_q, whose fixed point caps the
error independently of the horizon.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "DriftParams",
    "DriftTrajectory",
    "swr_bound",
    "ar_bound",
    "eta_fixed_point",
    "simulate_recurrence",
    "simulate_empirical",
    "sweep_window",
]


@dataclass(frozen=True)
class DriftParams:
    eps: float  # per-step token-space error bound
    delta_q: float  # decode--re-encode quantization error
    alpha: float  # contraction factor in [0, 1]
    window: int  # W
    horizon: int  # T

    def __post_init__(self) -> None:
        if self.eps < 0 or self.delta_q < 0:
            raise ValueError("error magnitudes must be nonnegative")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0,1], got {self.alpha}")
        if self.window < 1 or self.horizon < 1:
            raise ValueError("window and horizon must be >= 1")


@dataclass(frozen=True)
class DriftTrajectory:
    context_errors: np.ndarray  # eta_k per segment
    fixed_point: float  # eta*


def _require_contractive(params: DriftParams) -> None:
    if params.alpha >= 1.0:
        raise ValueError("bound undefined at alpha = 1 (alpha^W is not < 1)")


def swr_bound(params: DriftParams) -> float:
    """W*eps + (W*eps + delta_q) / (1 - alpha^W); horizon-independent."""
    _require_contractive(params)
    w_eps = params.window * params.eps
    return w_eps + (w_eps + params.delta_q) / (1.0 - params.alpha ** params.window)


def ar_bound(params: DriftParams, horizon: int | None = None) -> float:
    """eps*(1 - alpha^T)/(1 - alpha) for alpha < 1, and T*eps at alpha = 1."""
    T = params.horizon if horizon is None else horizon
    if params.alpha == 1.0:
        return T * params.eps
    return params.eps * (1.0 - params.alpha ** T) / (1.0 - params.alpha)


def eta_fixed_point(params: DriftParams) -> float:
    """(W*eps + delta_q) / (1 - alpha^W)."""
    _require_contractive(params)
    return (params.window * params.eps + params.delta_q) / (
        1.0 - params.alpha ** params.window
    )


def simulate_recurrence(params: DriftParams, segments: int) -> DriftTrajectory:
    """Iterate the worst-case recurrence at equality from eta_1 = 0."""
    if segments < 1:
        raise ValueError("need at least one segment")
    _require_contractive(params)
    decay = params.alpha ** params.window
    drive = params.window * params.eps + params.delta_q
    etas = np.empty(segments)
    etas[0] = 0.0
    for k in range(1, segments):
        etas[k] = drive + decay * etas[k - 1]
    return DriftTrajectory(context_errors=etas, fixed_point=eta_fixed_point(params))


def simulate_empirical(params: DriftParams, horizon: int | None = None,
                       trials: int = 100, seed: int = 0):
    """Max-over-trials per-step error envelopes for AR and SWR.

    Noise model: e_t = alpha * e_{t-1} + u_t with u_t ~ U[0, eps].  The
    SWR process restarts each window from the carried context error, which
    is refreshed at segment boundaries as eta' = e_W + delta_q.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    T = params.horizon if horizon is None else horizon
    rng = np.random.default_rng(seed)
    ar_env = np.zeros(T)
    swr_env = np.zeros(T)
    for _ in range(trials):
        noise = rng.uniform(0.0, params.eps, size=T) if params.eps > 0 else np.zeros(T)
        # AR: single unbroken recursion.
        e = 0.0
        for t in range(T):
            e = params.alpha * e + noise[t]
            ar_env[t] = max(ar_env[t], e)
        # SWR: within-window recursion from the carried context error.
        noise = rng.uniform(0.0, params.eps, size=T) if params.eps > 0 else np.zeros(T)
        eta = 0.0
        t = 0
        while t < T:
            e = eta
            for _j in range(min(params.window, T - t)):
                e = params.alpha * e + noise[t]
                swr_env[t] = max(swr_env[t], e)
                t += 1
            if t < T:
                eta = e + params.delta_q
    return ar_env, swr_env


def sweep_window(params: DriftParams, windows, horizon: int | None = None,
                 trials: int = 100, seed: int = 0):
    """One row per window: (W, swr_bound, empirical max, eta*)."""
    windows = list(windows)
    if not windows:
        raise ValueError("window list must be nonempty")
    rows = []
    for w in windows:
        p = replace(params, window=w)
        _, swr_env = simulate_empirical(p, horizon=horizon, trials=trials, seed=seed)
        rows.append({
            "W": w,
            "bound": swr_bound(p),
            "empirical_max": float(swr_env.max()),
            "eta_star": eta_fixed_point(p),
        })
    return rows
