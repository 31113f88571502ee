"""Image quality metrics on real (magnitude) images.

Both metrics first normalize the pair by the reference maximum, so the peak
value and SSIM dynamic range are 1 regardless of input scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = ["MetricReport", "psnr", "ssim", "PSNR_CAP"]

PSNR_CAP = 99.0

_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03


@dataclass(frozen=True)
class MetricReport:
    """One evaluated reconstruction: scores plus how they were produced."""

    method: str
    psnr: float
    ssim: float
    mask: str = ""
    config: dict = field(default_factory=dict)


def _normalized_pair(x: np.ndarray, ref: np.ndarray, what: str):
    x = np.asarray(x, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if x.shape != ref.shape:
        raise ValueError(f"{what}: shapes differ, {x.shape} vs {ref.shape}")
    if x.ndim != 2:
        raise ValueError(f"{what}: expected 2-D real images, got shape {x.shape}")
    if not (np.isfinite(x).all() and np.isfinite(ref).all()):
        raise ValueError(f"{what}: images must be finite")
    peak = float(ref.max())
    if peak <= 0:
        if np.array_equal(x, ref):
            return ref.copy(), ref.copy()
        raise ValueError(f"{what}: reference maximum must be positive, got {peak}")
    return x / peak, ref / peak


def psnr(x: np.ndarray, ref: np.ndarray) -> float:
    """10*log10(1 / MSE) with peak 1 after normalization, capped at 99.0 dB."""
    xn, rn = _normalized_pair(x, ref, "psnr")
    mse = float(np.mean((xn - rn) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return float(min(PSNR_CAP, 10.0 * np.log10(1.0 / mse)))


def _gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    offs = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(offs**2) / (2.0 * sigma**2))
    k = np.outer(g, g)
    return k / k.sum()


def _windowed_mean(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    views = sliding_window_view(img, kernel.shape)
    return np.einsum("xyij,ij->xy", views, kernel)


def ssim(x: np.ndarray, ref: np.ndarray) -> float:
    """Single-scale structural similarity, mean over valid 11x11 windows.

    Gaussian window sigma 1.5, stability constants (0.01*L)^2 and (0.03*L)^2
    with dynamic range L = 1 after normalization.
    """
    xn, rn = _normalized_pair(x, ref, "ssim")
    if min(xn.shape) < _SSIM_WINDOW:
        raise ValueError(
            f"ssim needs images at least {_SSIM_WINDOW} pixels per side, got {xn.shape}"
        )
    kernel = _gaussian_kernel(_SSIM_WINDOW, _SSIM_SIGMA)
    c1 = _SSIM_K1**2
    c2 = _SSIM_K2**2
    mu_x = _windowed_mean(xn, kernel)
    mu_r = _windowed_mean(rn, kernel)
    var_x = _windowed_mean(xn * xn, kernel) - mu_x**2
    var_r = _windowed_mean(rn * rn, kernel) - mu_r**2
    cov = _windowed_mean(xn * rn, kernel) - mu_x * mu_r
    num = (2.0 * mu_x * mu_r + c1) * (2.0 * cov + c2)
    den = (mu_x**2 + mu_r**2 + c1) * (var_x + var_r + c2)
    return float(np.mean(num / den))
