"""Complex multi-coil array primitives: centered FFTs, coil combination, channel packing.

Conventions used throughout the package:

* a k-space or image volume is a complex ndarray of shape ``(nc, nx, ny)``
  (coil slowest, row, column fastest),
* all Fourier transforms are centered (zero frequency at the grid center)
  and orthonormal, so they preserve the l2 norm,
* internal math runs in double precision; single precision appears only in
  file formats and score-model weights.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "fft2c",
    "ifft2c",
    "sos",
    "pack_channels",
    "unpack_channels",
    "as_volume",
    "complex_normal",
]


def as_volume(data, name: str = "volume") -> np.ndarray:
    """Validate and return a complex (nc, nx, ny) volume.

    Accepts a 2-D array as a single-coil volume. Rejects non-finite entries
    and empty axes.
    """
    a = np.asarray(data)
    if a.ndim == 2:
        a = a[np.newaxis]
    if a.ndim != 3:
        raise ValueError(f"{name} must be (nc, nx, ny), got shape {a.shape}")
    if min(a.shape) < 1:
        raise ValueError(f"{name} has an empty axis: {a.shape}")
    a = np.ascontiguousarray(a, dtype=np.result_type(a.dtype, np.complex128))
    if not np.all(np.isfinite(a.view(np.float64))):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return a


def fft2c(img: np.ndarray) -> np.ndarray:
    """Centered orthonormal 2-D FFT over the last two axes, per coil."""
    img = np.asarray(img)
    if not np.all(np.isfinite(np.abs(img))):
        raise ValueError("fft2c input contains NaN or Inf entries")
    axes = (-2, -1)
    return np.fft.fftshift(
        np.fft.fft2(np.fft.ifftshift(img, axes=axes), axes=axes, norm="ortho"),
        axes=axes,
    )


def ifft2c(k: np.ndarray) -> np.ndarray:
    """Inverse of :func:`fft2c` (centered, orthonormal)."""
    k = np.asarray(k)
    if not np.all(np.isfinite(np.abs(k))):
        raise ValueError("ifft2c input contains NaN or Inf entries")
    axes = (-2, -1)
    return np.fft.fftshift(
        np.fft.ifft2(np.fft.ifftshift(k, axes=axes), axes=axes, norm="ortho"),
        axes=axes,
    )


def sos(img: np.ndarray) -> np.ndarray:
    """Sum-of-squares coil combination.

    Returns the real (nx, ny) image sqrt(sum_c |img_c|^2). Invariant under a
    global phase rotation of any coil.
    """
    img = np.asarray(img)
    if img.ndim == 2:
        img = img[np.newaxis]
    if img.ndim != 3:
        raise ValueError(f"sos expects (nc, nx, ny), got shape {img.shape}")
    return np.sqrt(np.sum(np.abs(img) ** 2, axis=0))


def pack_channels(field: np.ndarray) -> np.ndarray:
    """Pack a complex 2-D field into a real (2, nx, ny) channel field.

    Channel 0 holds the real part, channel 1 the imaginary part. Lossless.
    """
    field = np.asarray(field)
    if field.ndim != 2:
        raise ValueError(f"pack_channels expects a 2-D field, got shape {field.shape}")
    return np.stack([field.real.astype(np.float64), field.imag.astype(np.float64)])


def unpack_channels(channels: np.ndarray) -> np.ndarray:
    """Inverse of :func:`pack_channels`. Rejects channel counts other than 2."""
    channels = np.asarray(channels)
    if channels.ndim != 3 or channels.shape[0] != 2:
        raise ValueError(
            f"unpack_channels expects (2, nx, ny), got shape {channels.shape}"
        )
    return channels[0] + 1j * channels[1]


def complex_normal(rng: np.random.Generator, shape, std: float = 1.0) -> np.ndarray:
    """Complex Gaussian noise with independent N(0, std^2) real and imaginary parts."""
    return std * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
