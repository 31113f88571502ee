"""Bit-exact file formats for k-space volumes and masks, plus PNG export.

K-space file, little-endian: magic b"KSPC", u32 version = 1, u32 nx, ny, nc,
then nc*nx*ny samples as f32 (real, imag) pairs, coil slowest, row, then
column fastest. Mask file: magic b"MASK", u32 version = 1, u32 nx, ny, then
nx*ny bytes in {0, 1}, row-major. PNG output is 8-bit grayscale and lossy by
design; the binary formats round-trip bit-exactly at f32 precision.
"""

from __future__ import annotations

import struct

import numpy as np
from PIL import Image

from .core import as_volume
from .masks import mask_grid

__all__ = [
    "FileFormatError",
    "save_kspace",
    "load_kspace",
    "save_mask",
    "load_mask",
    "save_png",
    "load_png",
]

KSPACE_MAGIC = b"KSPC"
MASK_MAGIC = b"MASK"
KSPACE_VERSION = 1
MASK_VERSION = 1


class FileFormatError(ValueError):
    """Raised for unreadable, truncated, or incompatible data files."""


def _read_exact(blob: bytes, pos: int, nbytes: int, path, what: str):
    if pos + nbytes > len(blob):
        raise FileFormatError(f"{path}: truncated while reading {what}")
    return blob[pos : pos + nbytes], pos + nbytes


def save_kspace(k: np.ndarray, path) -> None:
    k = as_volume(k, "k-space")
    nc, nx, ny = k.shape
    pairs = np.empty((nc, nx, ny, 2), dtype="<f4")
    pairs[..., 0] = k.real
    pairs[..., 1] = k.imag
    with open(path, "wb") as fh:
        fh.write(KSPACE_MAGIC)
        fh.write(struct.pack("<IIII", KSPACE_VERSION, nx, ny, nc))
        fh.write(pairs.tobytes())


def load_kspace(path) -> np.ndarray:
    """Read a k-space volume; values are exact f32, returned as complex128."""
    with open(path, "rb") as fh:
        blob = fh.read()
    head, pos = _read_exact(blob, 0, 20, path, "header")
    if head[:4] != KSPACE_MAGIC:
        raise FileFormatError(f"{path}: bad magic, not a k-space file")
    version, nx, ny, nc = struct.unpack("<IIII", head[4:])
    if version != KSPACE_VERSION:
        raise FileFormatError(f"{path}: unsupported k-space file version {version}")
    payload, pos = _read_exact(blob, pos, nc * nx * ny * 8, path, "samples")
    if pos != len(blob):
        raise FileFormatError(f"{path}: {len(blob) - pos} trailing bytes after samples")
    pairs = np.frombuffer(payload, dtype="<f4").reshape(nc, nx, ny, 2)
    return pairs[..., 0].astype(np.complex128) + 1j * pairs[..., 1].astype(np.complex128)


def save_mask(mask, path) -> None:
    grid = mask_grid(mask)
    nx, ny = grid.shape
    with open(path, "wb") as fh:
        fh.write(MASK_MAGIC)
        fh.write(struct.pack("<III", MASK_VERSION, nx, ny))
        fh.write(grid.astype(np.uint8).tobytes())


def load_mask(path) -> np.ndarray:
    """Read a sampling grid as a boolean (nx, ny) array."""
    with open(path, "rb") as fh:
        blob = fh.read()
    head, pos = _read_exact(blob, 0, 16, path, "header")
    if head[:4] != MASK_MAGIC:
        raise FileFormatError(f"{path}: bad magic, not a mask file")
    version, nx, ny = struct.unpack("<III", head[4:])
    if version != MASK_VERSION:
        raise FileFormatError(f"{path}: unsupported mask file version {version}")
    payload, pos = _read_exact(blob, pos, nx * ny, path, "grid bytes")
    if pos != len(blob):
        raise FileFormatError(f"{path}: {len(blob) - pos} trailing bytes after grid")
    grid = np.frombuffer(payload, dtype=np.uint8).reshape(nx, ny)
    bad = np.unique(grid[(grid != 0) & (grid != 1)])
    if bad.size:
        raise FileFormatError(f"{path}: grid bytes must be 0 or 1, found {bad[:4].tolist()}")
    return grid.astype(bool)


def save_png(img: np.ndarray, path, vmax: float = 1.0) -> None:
    """Write a real image as 8-bit grayscale.

    Values are mapped linearly from [0, vmax] to [0, 255] with round half up
    and clipping, so a constant 0.5 image at vmax = 1 lands on pixel 128.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"PNG export needs a 2-D real image, got shape {img.shape}")
    if not np.isfinite(img).all():
        raise ValueError("PNG export needs finite pixel values")
    if vmax <= 0:
        raise ValueError(f"vmax must be positive, got {vmax}")
    levels = np.floor(img / vmax * 255.0 + 0.5)
    data = np.clip(levels, 0, 255).astype(np.uint8)
    Image.fromarray(data, mode="L").save(path, format="PNG")


def load_png(path) -> np.ndarray:
    """Read an 8-bit grayscale PNG back to floats in [0, 1]."""
    with Image.open(path) as im:
        data = np.asarray(im.convert("L"), dtype=np.float64)
    return data / 255.0
