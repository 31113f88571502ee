"""Block-Hankel lifting of multi-coil k-space and its pseudo-inverse.

The lift slides a (w, w) window over every coil of an (nc, nx, ny) volume and
stacks each window as one column of a large structured matrix. Index order is
canonical and load-bearing for checkpoint and test portability:

* column index: ``i * (ny - w + 1) + j`` for window origin (i, j),
* row index: ``coil * w^2 + lr * w + lc`` for the in-window offset (lr, lc).

The pseudo-inverse maps a matrix back to k-space by averaging every matrix
cell that targets the same k-space location (multiplicity-weighted mean, the
least-squares inverse of the lift).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import as_volume

__all__ = [
    "HankelMatrix",
    "PatchSet",
    "lift",
    "unlift",
    "count_multiplicity",
    "extract_patches",
]


@dataclass(frozen=True)
class HankelMatrix:
    """A lifted data matrix together with the source-volume geometry."""

    data: np.ndarray  # complex, (w^2 * nc, (nx - w + 1) * (ny - w + 1))
    window: int
    nx: int
    ny: int
    nc: int

    def __post_init__(self):
        w = self.window
        if not 1 <= w <= min(self.nx, self.ny):
            raise ValueError(f"window {w} out of range for {self.nx}x{self.ny} grid")
        expect = (w * w * self.nc, (self.nx - w + 1) * (self.ny - w + 1))
        if self.data.shape != expect:
            raise ValueError(
                f"matrix shape {self.data.shape} does not match geometry {expect}"
            )

    @property
    def shape(self):
        return self.data.shape

    def with_data(self, data: np.ndarray) -> "HankelMatrix":
        """Same geometry, new matrix entries."""
        return replace(self, data=data)


@dataclass(frozen=True)
class PatchSet:
    """Square crops from a Hankel matrix plus their crop origins."""

    patches: np.ndarray  # complex, (n, p, p)
    coords: tuple  # ((row, col), ...) crop origins
    def __post_init__(self):
        if self.patches.ndim != 3 or self.patches.shape[1] != self.patches.shape[2]:
            raise ValueError(f"patches must be (n, p, p), got {self.patches.shape}")
        if len(self.patches) != len(self.coords) or len(self.patches) == 0:
            raise ValueError("patch array and coordinate list sizes disagree or are empty")

    @property
    def count(self) -> int:
        return len(self.patches)

    @property
    def patch_size(self) -> int:
        return self.patches.shape[1]


def lift(k: np.ndarray, window: int) -> HankelMatrix:
    """Lift an (nc, nx, ny) volume into its block-Hankel data matrix."""
    k = as_volume(k, "k-space")
    nc, nx, ny = k.shape
    w = int(window)
    if not 1 <= w <= min(nx, ny):
        raise ValueError(f"window {w} out of range for {nx}x{ny} grid")
    # (nc, nx-w+1, ny-w+1, w, w) view, then rows = (coil, lr, lc), cols = (i, j)
    v = sliding_window_view(k, (w, w), axis=(1, 2))
    ox, oy = nx - w + 1, ny - w + 1
    data = v.transpose(0, 3, 4, 1, 2).reshape(nc * w * w, ox * oy)
    return HankelMatrix(data=data, window=w, nx=nx, ny=ny, nc=nc)


def count_multiplicity(nx: int, ny: int, window: int) -> np.ndarray:
    """Number of lift windows covering each k-space location, shape (nx, ny).

    Separable closed form: entry (x, y) equals
    min(x+1, w, nx-x, nx-w+1) * min(y+1, w, ny-y, ny-w+1). Interior entries
    equal w^2.
    """
    w = int(window)
    if not 1 <= w <= min(nx, ny):
        raise ValueError(f"window {w} out of range for {nx}x{ny} grid")

    def axis_counts(n):
        x = np.arange(n)
        return np.minimum.reduce([x + 1, np.full(n, w), n - x, np.full(n, n - w + 1)])

    return np.outer(axis_counts(nx), axis_counts(ny))


def unlift(H: HankelMatrix) -> np.ndarray:
    """Map a data matrix back to (nc, nx, ny) k-space by multiplicity-weighted averaging.

    For matrices in the range of :func:`lift` this inverts the lift exactly;
    for arbitrary matrices it is the least-squares pseudo-inverse.
    """
    w, nx, ny, nc = H.window, H.nx, H.ny, H.nc
    ox, oy = nx - w + 1, ny - w + 1
    blocks = H.data.reshape(nc, w, w, ox, oy)
    acc = np.zeros((nc, nx, ny), dtype=np.complex128)
    for lr in range(w):
        for lc in range(w):
            acc[:, lr : lr + ox, lc : lc + oy] += blocks[:, lr, lc]
    return acc / count_multiplicity(nx, ny, w)


def extract_patches(H: HankelMatrix, patch_size: int, count: int, seed=0) -> PatchSet:
    """Crop ``count`` random (p, p) patches from the matrix, uniform with replacement.

    Deterministic for a fixed seed. Crop origins are drawn independently over
    the full valid range, so patches may overlap.
    """
    p = int(patch_size)
    rows, cols = H.data.shape
    if p < 1 or p > rows or p > cols:
        raise ValueError(f"patch size {p} does not fit a {rows}x{cols} matrix")
    if count < 1:
        raise ValueError("patch count must be >= 1")
    rng = np.random.default_rng(seed)
    rr = rng.integers(0, rows - p + 1, size=count)
    cc = rng.integers(0, cols - p + 1, size=count)
    patches = np.stack([H.data[r : r + p, c : c + p] for r, c in zip(rr, cc)])
    return PatchSet(patches=patches, coords=tuple((int(r), int(c)) for r, c in zip(rr, cc)))
