"""Undersampling mask generation and the masked acquisition model."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import as_volume, complex_normal

__all__ = [
    "SamplingMask",
    "make_mask",
    "apply_mask",
    "mask_grid",
    "poisson_radius_map",
]

MASK_PATTERNS = ("poisson", "random2d", "partial-fourier")

# Variable-density radius law r(d) = scale * (FLOOR + d / dmax): small exclusion
# radius at the grid center, growing linearly toward the corners.
_POISSON_RADIUS_FLOOR = 0.25


@dataclass(frozen=True)
class SamplingMask:
    """Binary acquisition grid plus the parameters that generated it."""

    grid: np.ndarray  # bool, (nx, ny)
    pattern: str
    R: float
    acs: int = 0
    seed: int = 0
    poisson_scale: float | None = None  # calibrated dart radius scale (poisson only)

    @property
    def nx(self) -> int:
        return self.grid.shape[0]

    @property
    def ny(self) -> int:
        return self.grid.shape[1]

    @property
    def fraction(self) -> float:
        return float(self.grid.mean())


def _acs_slices(nx: int, ny: int, acs: int):
    sx = (nx - acs) // 2
    sy = (ny - acs) // 2
    return slice(sx, sx + acs), slice(sy, sy + acs)


def poisson_radius_map(nx: int, ny: int, scale: float) -> np.ndarray:
    """Per-location exclusion radius of the variable-density dart thrower."""
    cx, cy = (nx - 1) / 2.0, (ny - 1) / 2.0
    x = np.arange(nx)[:, None] - cx
    y = np.arange(ny)[None, :] - cy
    d = np.sqrt(x * x + y * y)
    dmax = d.max()
    return scale * (_POISSON_RADIUS_FLOOR + d / (dmax if dmax > 0 else 1.0))


def _poisson_throw(nx: int, ny: int, order: np.ndarray, scale: float) -> np.ndarray:
    """Greedy dart throw over the whole grid in ``order``.

    Each accepted point blocks every cell strictly inside its own exclusion
    radius, so any two accepted points p, q end up separated by at least
    min(r(p), r(q)).
    """
    radius = poisson_radius_map(nx, ny, scale)
    blocked = np.zeros((nx, ny), dtype=bool)
    grid = np.zeros((nx, ny), dtype=bool)
    for flat in order:
        x0, y0 = divmod(int(flat), ny)
        if blocked[x0, y0]:
            continue
        grid[x0, y0] = True
        r = radius[x0, y0]
        rad = int(math.ceil(r))
        xs = slice(max(0, x0 - rad), min(nx, x0 + rad + 1))
        ys = slice(max(0, y0 - rad), min(ny, y0 + rad + 1))
        dx = np.arange(xs.start, xs.stop)[:, None] - x0
        dy = np.arange(ys.start, ys.stop)[None, :] - y0
        blocked[xs, ys] |= dx * dx + dy * dy < r * r
    return grid


def _make_poisson(nx, ny, R, acs, rng) -> tuple[np.ndarray, float]:
    """Calibrate the dart radius scale so the sampled fraction lands near 1/R."""
    target = max(1, int(math.floor(nx * ny / R)))
    order = rng.permutation(nx * ny)
    ax, ay = _acs_slices(nx, ny, acs)

    def count_at(scale):
        grid = _poisson_throw(nx, ny, order, scale)
        if acs > 0:
            grid[ax, ay] = True
        return grid, int(grid.sum())

    # exponential search for an upper bracket, then bisection on the scale
    lo, hi = 0.0, 1.0
    grid, n = count_at(hi)
    best = (abs(n - target), hi, grid)
    while n > target and hi < 64:
        lo, hi = hi, hi * 2.0
        grid, n = count_at(hi)
        if abs(n - target) < best[0]:
            best = (abs(n - target), hi, grid)
    for _ in range(18):
        mid = 0.5 * (lo + hi)
        grid, n = count_at(mid)
        if abs(n - target) < best[0]:
            best = (abs(n - target), mid, grid)
        if abs(n - target) <= max(1, 0.01 * target):
            break
        if n > target:
            lo = mid
        else:
            hi = mid
    _, scale, grid = best
    return grid, scale


def _make_random2d(nx, ny, R, acs, rng) -> np.ndarray:
    """Bernoulli(1/R) draw corrected to exactly floor(nx*ny/R) samples."""
    target = int(math.floor(nx * ny / R))
    grid = rng.random((nx, ny)) < 1.0 / R
    if acs > 0:
        ax, ay = _acs_slices(nx, ny, acs)
        grid[ax, ay] = True
    excess = int(grid.sum()) - target
    protected = np.zeros((nx, ny), dtype=bool)
    if acs > 0:
        protected[_acs_slices(nx, ny, acs)] = True
    if excess > 0:
        candidates = np.flatnonzero(grid & ~protected)
        drop = rng.choice(candidates, size=excess, replace=False)
        grid.flat[drop] = False
    elif excess < 0:
        candidates = np.flatnonzero(~grid)
        add = rng.choice(candidates, size=-excess, replace=False)
        grid.flat[add] = True
    return grid


def _make_partial_fourier(nx, ny, R, acs) -> np.ndarray:
    """Centered fully-sampled row band covering fraction 1/R, plus the ACS block."""
    n_band = max(1, int(round(nx / R)))
    grid = np.zeros((nx, ny), dtype=bool)
    start = (nx - n_band) // 2
    grid[start : start + n_band, :] = True
    if acs > 0:
        ax, ay = _acs_slices(nx, ny, acs)
        grid[ax, ay] = True
    return grid


def make_mask(pattern: str, nx: int, ny: int, R: float, acs: int = 0, seed=0) -> SamplingMask:
    """Generate a deterministic undersampling mask.

    Patterns: variable-density poisson-disc darts, exact-count 2-D random,
    and a centered partial-Fourier row band. ``acs`` forces a centered
    acs x acs fully-sampled block.
    """
    if pattern not in MASK_PATTERNS:
        raise ValueError(f"unknown pattern {pattern!r}, expected one of {MASK_PATTERNS}")
    if not R > 1:
        raise ValueError(f"acceleration R must exceed 1, got {R}")
    if acs < 0 or acs >= min(nx, ny):
        raise ValueError(f"acs {acs} out of range for {nx}x{ny} grid")
    if acs * acs > nx * ny / R:
        raise ValueError(
            f"acs block {acs}x{acs} alone exceeds the sampling budget at R={R}"
        )
    rng = np.random.default_rng(seed)
    scale = None
    if pattern == "poisson":
        grid, scale = _make_poisson(nx, ny, R, acs, rng)
    elif pattern == "random2d":
        grid = _make_random2d(nx, ny, R, acs, rng)
    else:
        grid = _make_partial_fourier(nx, ny, R, acs)
    return SamplingMask(
        grid=grid, pattern=pattern, R=float(R), acs=int(acs), seed=seed, poisson_scale=scale
    )


def mask_grid(mask) -> np.ndarray:
    """Coerce a SamplingMask or a bare 2-D array to a boolean sampling grid."""
    grid = mask.grid if isinstance(mask, SamplingMask) else np.asarray(mask)
    if grid.ndim != 2:
        raise ValueError(f"sampling grid must be 2-D, got shape {grid.shape}")
    return grid.astype(bool)


def apply_mask(k: np.ndarray, mask, noise_std: float = 0.0, rng=None) -> np.ndarray:
    """Masked acquisition: keep sampled entries, zero the rest, same mask per coil.

    ``noise_std`` adds complex Gaussian measurement noise (independent
    N(0, noise_std^2) real and imaginary parts) on the sampled entries only.
    """
    k = as_volume(k, "k-space")
    grid = mask_grid(mask)
    if k.shape[1:] != grid.shape:
        raise ValueError(f"mask {grid.shape} does not match volume {k.shape}")
    y = np.where(grid[np.newaxis], k, 0.0 + 0.0j)
    if noise_std > 0.0:
        rng = np.random.default_rng(rng)
        noise = complex_normal(rng, k.shape, noise_std)
        y = y + np.where(grid[np.newaxis], noise, 0.0 + 0.0j)
    return y
