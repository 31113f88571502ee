"""A small convolutional score network with explicit numpy forward and backward passes.

The reference architecture is three zero-padded 3x3 convolutions
(2 -> 32 -> 32 -> 2 channels) with ReLU between them; the noise level enters
only by dividing the network output by sigma. The layer list is data, so a
larger conv/relu stack can be dropped in without touching the training or
checkpoint code.

Weights are kept in float32 (the checkpoint precision); all forward math for
reconstruction runs in float64 on float64 casts of the weights.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .schedule import NoiseSchedule

__all__ = ["ScoreModel", "REFERENCE_ARCH", "score_apply", "init_weights", "validate_arch"]

REFERENCE_ARCH = (
    ("conv3x3", 2, 32),
    ("relu",),
    ("conv3x3", 32, 32),
    ("relu",),
    ("conv3x3", 32, 2),
)


def validate_arch(arch) -> tuple[int, int]:
    """Check layer chaining and return (input channels, output channels)."""
    arch = tuple(tuple(layer) for layer in arch)
    convs = [l for l in arch if l[0] == "conv3x3"]
    if not convs:
        raise ValueError("architecture needs at least one conv3x3 layer")
    for layer in arch:
        if layer[0] not in ("conv3x3", "relu"):
            raise ValueError(f"unknown layer kind {layer[0]!r}")
    for a, b in zip(convs, convs[1:]):
        if a[2] != b[1]:
            raise ValueError(f"channel mismatch between conv layers: {a} -> {b}")
    return convs[0][1], convs[-1][2]


def init_weights(arch, rng: np.random.Generator, dtype=np.float64):
    """He-normal conv kernels and zero biases, one (W, b) pair per conv layer."""
    weights = []
    for layer in arch:
        if layer[0] != "conv3x3":
            continue
        _, c_in, c_out = layer
        std = np.sqrt(2.0 / (9.0 * c_in))
        W = (std * rng.standard_normal((c_out, c_in, 3, 3))).astype(dtype)
        weights.append((W, np.zeros(c_out, dtype=dtype)))
    return weights


def _im2col(x: np.ndarray) -> np.ndarray:
    """(B, C, H, W) -> (C*9, B*H*W) patch matrix for a zero-padded 3x3 conv."""
    B, C, H, W = x.shape
    xp = np.zeros((B, C, H + 2, W + 2), dtype=x.dtype)
    xp[:, :, 1:-1, 1:-1] = x
    v = sliding_window_view(xp, (3, 3), axis=(2, 3))  # (B, C, H, W, 3, 3)
    return v.transpose(1, 4, 5, 0, 2, 3).reshape(C * 9, B * H * W)


def _col2im(cols: np.ndarray, shape) -> np.ndarray:
    """Adjoint of :func:`_im2col`: scatter-add patch columns back to an image batch."""
    B, C, H, W = shape
    blocks = cols.reshape(C, 3, 3, B, H, W)
    xp = np.zeros((C, H + 2, W + 2, B), dtype=cols.dtype)
    for ky in range(3):
        for kx in range(3):
            xp[:, ky : ky + H, kx : kx + W] += blocks[:, ky, kx].transpose(0, 2, 3, 1)
    return xp[:, 1 : 1 + H, 1 : 1 + W].transpose(3, 0, 1, 2)


def forward_batch(arch, weights, x: np.ndarray, want_cache: bool = False):
    """Run the conv/relu stack on a (B, C, H, W) batch.

    Returns (output, cache); the cache holds what the backward pass needs and
    is None unless requested.
    """
    B, C, H, W = x.shape
    cache = [] if want_cache else None
    cur = x
    wi = 0
    for layer in arch:
        if layer[0] == "conv3x3":
            Wk, b = weights[wi]
            wi += 1
            c_out = Wk.shape[0]
            cols = _im2col(cur)
            out = Wk.reshape(c_out, -1) @ cols + b[:, None]
            cur = out.reshape(c_out, B, H, W).transpose(1, 0, 2, 3)
            if want_cache:
                cache.append(("conv3x3", cols))
        else:  # relu
            mask = cur > 0
            cur = np.where(mask, cur, 0.0)
            if want_cache:
                cache.append(("relu", mask))
    return cur, cache


def backward_batch(arch, weights, cache, d_out: np.ndarray):
    """Gradients of a scalar loss w.r.t. every conv weight, given d(loss)/d(output).

    Returns [(dW, db), ...] in forward conv order.
    """
    conv_idx = [i for i, l in enumerate(arch) if l[0] == "conv3x3"]
    grads = [None] * len(conv_idx)
    cur = d_out
    wi = len(conv_idx)
    for li in range(len(arch) - 1, -1, -1):
        kind = arch[li][0]
        entry = cache[li]
        if kind == "relu":
            cur = np.where(entry[1], cur, 0.0)
        else:
            wi -= 1
            Wk, _ = weights[wi]
            c_out, c_in = Wk.shape[0], Wk.shape[1]
            B, _, H, W = cur.shape
            d_mat = cur.transpose(1, 0, 2, 3).reshape(c_out, -1)
            cols = entry[1]
            dW = (d_mat @ cols.T).reshape(Wk.shape)
            db = d_mat.sum(axis=1)
            grads[wi] = (dW, db)
            if wi > 0:
                d_cols = Wk.reshape(c_out, -1).T @ d_mat
                cur = _col2im(d_cols, (B, c_in, H, W))
    return grads


@dataclass(frozen=True)
class ScoreModel:
    """Trained score estimator s(x, sigma) = net(x) / sigma on 2-channel real fields."""

    arch: tuple
    weights: tuple  # ((W, b), ...) float32, read-only after training
    schedule: NoiseSchedule
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        validate_arch(self.arch)

    def __call__(self, x: np.ndarray, sigma: float) -> np.ndarray:
        return score_apply(self, x, sigma)


def freeze_model(arch, weights, schedule: NoiseSchedule, meta=None) -> ScoreModel:
    """Round weights to float32, mark them read-only, and wrap them up."""
    frozen = []
    for W, b in weights:
        W32 = np.ascontiguousarray(W, dtype=np.float32)
        b32 = np.ascontiguousarray(b, dtype=np.float32)
        W32.flags.writeable = False
        b32.flags.writeable = False
        frozen.append((W32, b32))
    return ScoreModel(
        arch=tuple(tuple(l) for l in arch),
        weights=tuple(frozen),
        schedule=schedule,
        meta=dict(meta or {}),
    )


def score_apply(model: ScoreModel, x: np.ndarray, sigma: float) -> np.ndarray:
    """Evaluate the score estimate on one 2-channel field, in float64."""
    x = np.asarray(x, dtype=np.float64)
    c_in, _ = validate_arch(model.arch)
    if x.ndim != 3 or x.shape[0] != c_in:
        raise ValueError(f"expected ({c_in}, nx, ny) field, got shape {x.shape}")
    if sigma <= 0:
        raise ValueError(f"noise level must be positive, got {sigma}")
    sched = model.schedule
    if not sched.sigma_min <= sigma <= sched.sigma_max:
        warnings.warn(
            f"noise level {sigma:.4g} outside the trained range "
            f"[{sched.sigma_min:.4g}, {sched.sigma_max:.4g}], extrapolating",
            stacklevel=2,
        )
    weights64 = [(W.astype(np.float64), b.astype(np.float64)) for W, b in model.weights]
    out, _ = forward_batch(model.arch, weights64, x[np.newaxis])
    return out[0] / sigma
