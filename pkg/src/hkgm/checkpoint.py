"""Binary score-model checkpoints.

Layout, all little-endian: magic b"HKGM", u32 version, u32 layer count, then
one record per layer (u32 kind: 0 = conv3x3 with u32 c_in, u32 c_out;
1 = relu), f64 sigma_min, f64 sigma_max, u32 N, then for each conv layer in
order its kernel (c_out*c_in*3*3 f32, C order) followed by its bias
(c_out f32). Weights are stored and loaded as f32, so a round trip is
bit-exact.
"""

from __future__ import annotations

import struct

import numpy as np

from .schedule import NoiseSchedule
from .scorenet import ScoreModel, freeze_model

__all__ = ["CheckpointError", "save_model", "load_model", "MAGIC", "VERSION"]

MAGIC = b"HKGM"
VERSION = 1

_KIND_CONV3X3 = 0
_KIND_RELU = 1


class CheckpointError(ValueError):
    """Raised for unreadable, truncated, or incompatible checkpoint files."""


def save_model(model: ScoreModel, path) -> None:
    parts = [MAGIC, struct.pack("<I", VERSION), struct.pack("<I", len(model.arch))]
    for layer in model.arch:
        if layer[0] == "conv3x3":
            parts.append(struct.pack("<III", _KIND_CONV3X3, layer[1], layer[2]))
        elif layer[0] == "relu":
            parts.append(struct.pack("<I", _KIND_RELU))
        else:
            raise CheckpointError(f"cannot serialize layer kind {layer[0]!r}")
    sched = model.schedule
    parts.append(struct.pack("<ddI", sched.sigma_min, sched.sigma_max, sched.n))
    for W, b in model.weights:
        parts.append(np.ascontiguousarray(W, dtype="<f4").tobytes())
        parts.append(np.ascontiguousarray(b, dtype="<f4").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


class _Reader:
    def __init__(self, blob: bytes, path):
        self.blob = blob
        self.path = path
        self.pos = 0

    def take(self, nbytes: int, what: str) -> bytes:
        if self.pos + nbytes > len(self.blob):
            raise CheckpointError(f"{self.path}: truncated while reading {what}")
        out = self.blob[self.pos : self.pos + nbytes]
        self.pos += nbytes
        return out

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]


def load_model(path) -> ScoreModel:
    with open(path, "rb") as fh:
        blob = fh.read()
    r = _Reader(blob, path)
    if r.take(4, "magic") != MAGIC:
        raise CheckpointError(f"{path}: bad magic, not a score-model checkpoint")
    version = r.u32("version")
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    n_layers = r.u32("layer count")
    arch = []
    for i in range(n_layers):
        kind = r.u32(f"layer {i} kind")
        if kind == _KIND_CONV3X3:
            c_in = r.u32(f"layer {i} c_in")
            c_out = r.u32(f"layer {i} c_out")
            arch.append(("conv3x3", c_in, c_out))
        elif kind == _KIND_RELU:
            arch.append(("relu",))
        else:
            raise CheckpointError(f"{path}: unknown layer kind {kind}")
    sigma_min, sigma_max, n_sigma = struct.unpack("<ddI", r.take(20, "noise schedule"))
    try:
        schedule = NoiseSchedule(sigma_min=sigma_min, sigma_max=sigma_max, n=n_sigma)
    except ValueError as exc:
        raise CheckpointError(f"{path}: invalid noise schedule: {exc}") from exc
    weights = []
    for layer in arch:
        if layer[0] != "conv3x3":
            continue
        _, c_in, c_out = layer
        W = np.frombuffer(
            r.take(c_out * c_in * 9 * 4, "conv kernel"), dtype="<f4"
        ).reshape(c_out, c_in, 3, 3)
        b = np.frombuffer(r.take(c_out * 4, "conv bias"), dtype="<f4")
        weights.append((W, b))
    if r.pos != len(blob):
        raise CheckpointError(f"{path}: {len(blob) - r.pos} trailing bytes after weights")
    try:
        return freeze_model(arch, weights, schedule, meta={"source": str(path)})
    except ValueError as exc:
        raise CheckpointError(f"{path}: inconsistent architecture: {exc}") from exc
