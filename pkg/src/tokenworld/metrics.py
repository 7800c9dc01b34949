"""Pixel-level video metrics and motion-mask ROI metrics.

Global MSE/PSNR/SSIM on frames in [0,1], motion masks from temporal frame
differencing followed by morphological closing and dilation, and the same
metrics restricted to the masked region of interest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import binary_dilation, binary_erosion, correlate1d

__all__ = [
    "MotionMask",
    "mse",
    "psnr",
    "ssim",
    "frame_diff",
    "motion_mask",
    "roi_metric",
    "roi_coverage",
    "disc_kernel",
]

SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5


@dataclass(frozen=True)
class MotionMask:
    """Per-frame binary masks plus the union over the clip."""

    per_frame: np.ndarray  # (T, H, W) bool
    union: np.ndarray  # (H, W) bool
    tau: int
    theta: float
    kernel_size: int


def _check_frames(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape != y.shape:
        raise ValueError(f"frame shapes disagree: {x.shape} vs {y.shape}")


def mse(x, y) -> float:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    _check_frames(x, y)
    return float(np.mean((x - y) ** 2))


def psnr(x, y) -> float:
    """10*log10(1/MSE); +inf for identical frames."""
    err = mse(x, y)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / err)


def _gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    offsets = np.arange(size) - (size - 1) / 2.0
    k = np.exp(-(offsets ** 2) / (2.0 * sigma ** 2))
    return k / k.sum()


def _local_mean(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    out = correlate1d(img, kernel, axis=0, mode="reflect")
    return correlate1d(out, kernel, axis=1, mode="reflect")


def _ssim_single(x: np.ndarray, y: np.ndarray, window: int, sigma: float,
                 c1: float, c2: float) -> np.ndarray:
    kernel = _gaussian_kernel(window, sigma)
    mu_x = _local_mean(x, kernel)
    mu_y = _local_mean(y, kernel)
    var_x = _local_mean(x * x, kernel) - mu_x ** 2
    var_y = _local_mean(y * y, kernel) - mu_y ** 2
    cov = _local_mean(x * y, kernel) - mu_x * mu_y
    num = (2 * mu_x * mu_y + c1) * (2 * cov + c2)
    den = (mu_x ** 2 + mu_y ** 2 + c1) * (var_x + var_y + c2)
    return num / den


def ssim(x, y, window: int = SSIM_WINDOW, c1: float = SSIM_C1,
         c2: float = SSIM_C2, sigma: float = SSIM_SIGMA):
    """Mean structural similarity and its full-image local map.

    Local statistics use a Gaussian window with reflect padding, so the map
    covers the full image and can be averaged inside a region of interest.
    """
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    _check_frames(x, y)
    if min(x.shape[0], x.shape[1]) < window:
        raise ValueError(f"frame smaller than the {window}-pixel SSIM window")
    if x.ndim == 3:
        maps = np.stack([
            _ssim_single(x[..., c], y[..., c], window, sigma, c1, c2)
            for c in range(x.shape[2])
        ], axis=-1)
        local = maps.mean(axis=-1)
    else:
        local = _ssim_single(x, y, window, sigma, c1, c2)
    return float(local.mean()), local


def _channel_mean_absdiff(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = np.abs(a - b)
    return d.mean(axis=-1) if d.ndim == 3 else d


def frame_diff(clip, t: int, tau: int = 3) -> np.ndarray:
    """Mean absolute pixel difference of frame t against its tau-neighborhood.

    ``t`` is 1-based; boundary frames use the truncated neighborhood.
    """
    clip = np.asarray(clip, dtype=float)
    T = clip.shape[0]
    if not 1 <= t <= T:
        raise ValueError(f"frame index {t} outside [1, {T}]")
    if tau < 1:
        raise ValueError("temporal window must be >= 1")
    neighbors = [tp for tp in range(1, T + 1) if 0 < abs(tp - t) <= tau]
    if not neighbors:
        raise ValueError("empty temporal neighborhood (single-frame clip)")
    diffs = [_channel_mean_absdiff(clip[t - 1], clip[tp - 1]) for tp in neighbors]
    return np.mean(diffs, axis=0)


def disc_kernel(size: int) -> np.ndarray:
    """Discrete disc of diameter ``size`` (elliptical structuring element)."""
    if size < 1:
        raise ValueError("kernel size must be >= 1")
    r = size // 2
    if r == 0:
        return np.ones((1, 1), dtype=bool)
    di, dj = np.mgrid[-r:r + 1, -r:r + 1]
    half = size / 2.0
    return (di / half) ** 2 + (dj / half) ** 2 <= 1.0


def _closing(mask: np.ndarray, structure: np.ndarray) -> np.ndarray:
    # Dilation pads with background so masks cannot grow past the image;
    # erosion pads with foreground so closing never shrinks the input.
    dilated = binary_dilation(mask, structure=structure, border_value=0)
    return binary_erosion(dilated, structure=structure, border_value=1)


def motion_mask(clip, tau: int = 3, theta: float = 15.0,
                kernel_size: int = 15) -> MotionMask:
    """Threshold frame differences on the 0-255 scale, close, then dilate."""
    clip = np.asarray(clip, dtype=float)
    if clip.shape[0] < 2:
        raise ValueError("motion mask needs at least two frames")
    structure = disc_kernel(kernel_size)
    masks = []
    for t in range(1, clip.shape[0] + 1):
        raw = frame_diff(clip, t, tau) * 255.0 > theta
        closed = _closing(raw, structure)
        masks.append(binary_dilation(closed, structure=structure, border_value=0))
    per_frame = np.stack(masks)
    return MotionMask(
        per_frame=per_frame,
        union=per_frame.any(axis=0),
        tau=tau,
        theta=theta,
        kernel_size=kernel_size,
    )


def roi_metric(x, y, mask, kind: str = "mse") -> float:
    """Masked MSE / PSNR / mean of the local SSIM map."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    _check_frames(x, y)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != x.shape[:2]:
        raise ValueError(f"mask shape {mask.shape} does not match frames")
    if not mask.any():
        raise ValueError("empty ROI")
    kind = kind.lower()
    if kind in ("mse", "psnr"):
        sq = (x - y) ** 2
        if sq.ndim == 3:
            sq = sq.mean(axis=-1)
        roi_mse = float(sq[mask].mean())
        if kind == "mse":
            return roi_mse
        return math.inf if roi_mse == 0.0 else 10.0 * math.log10(1.0 / roi_mse)
    if kind == "ssim":
        _, local = ssim(x, y)
        return float(local[mask].mean())
    raise ValueError(f"unknown ROI metric kind {kind!r}")


def roi_coverage(union_mask) -> float:
    """Fraction of pixels inside the union mask."""
    m = np.asarray(union_mask, dtype=bool)
    return float(m.sum() / m.size)
