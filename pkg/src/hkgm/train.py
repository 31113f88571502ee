"""Denoising score matching on 2-channel patch fields.

The objective is mean_b || sigma_b * s(x_b + sigma_b * z_b, sigma_b) + z_b ||^2
with sigma drawn uniformly from the schedule's index set, which equals the
sigma^2-weighted score-matching loss against the Gaussian-kernel target
-z / sigma. Optimization is plain Adam over the explicit conv-net gradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import pack_channels
from .schedule import NoiseSchedule
from .scorenet import (
    REFERENCE_ARCH,
    ScoreModel,
    backward_batch,
    forward_batch,
    freeze_model,
    init_weights,
    validate_arch,
)

__all__ = ["TrainConfig", "TrainingError", "perturb", "dsm_loss", "train"]

_ADAM_EPS = 1e-8


class TrainingError(RuntimeError):
    """Raised when optimization produces a non-finite loss."""


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 2
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    seed: int = 0
    arch: tuple = REFERENCE_ARCH

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError(f"epochs must be non-negative, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be at least 1, got {self.batch_size}")
        if self.lr < 0:
            raise ValueError(f"learning rate must be non-negative, got {self.lr}")
        for name in ("beta1", "beta2"):
            val = getattr(self, name)
            if not 0.0 < val < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {val}")
        validate_arch(self.arch)


def perturb(x: np.ndarray, sigma: float, seed=0):
    """Add scaled standard-normal noise: returns (x + sigma * z, z)."""
    if sigma <= 0:
        raise ValueError(f"noise level must be positive, got {sigma}")
    x = np.asarray(x, dtype=np.float64)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(x.shape)
    return x + sigma * z, z


def _as_fields(batch) -> np.ndarray:
    fields = np.asarray(batch, dtype=np.float64)
    if fields.ndim == 3:
        fields = fields[np.newaxis]
    if fields.ndim != 4:
        raise ValueError(f"expected a batch of (2, nx, ny) fields, got shape {fields.shape}")
    return fields


def dsm_loss(model, batch, schedule: NoiseSchedule, seed=0, draws=None) -> float:
    """Monte-Carlo denoising score matching loss of `model` on a clean batch.

    `model` is any callable (x, sigma) -> score field. Noise levels are drawn
    uniformly from the schedule's index set and z per entry, one (index, z)
    pair per batch item in order; pass `draws = (indices, z)` to pin them.
    """
    fields = _as_fields(batch)
    n = fields.shape[0]
    if n == 0:
        raise ValueError("batch must contain at least one field")
    if draws is None:
        rng = np.random.default_rng(seed)
        idx = rng.integers(schedule.n, size=n)
        z = rng.standard_normal(fields.shape)
    else:
        idx, z = draws
        idx = np.asarray(idx)
        z = np.asarray(z, dtype=np.float64)
    sigmas = schedule.sigmas
    total = 0.0
    for b in range(n):
        sigma = float(sigmas[idx[b]])
        noisy = fields[b] + sigma * z[b]
        score = model(noisy, sigma)
        total += float(np.sum((sigma * score + z[b]) ** 2))
    return total / n


def _normalized_fields(patches) -> np.ndarray:
    """Pack complex patches as 2-channel fields, each scaled to unit max magnitude."""
    raw = patches.patches if hasattr(patches, "patches") else np.asarray(patches)
    raw = np.asarray(raw, dtype=np.complex128)
    if raw.ndim == 2:
        raw = raw[np.newaxis]
    if raw.ndim != 3 or raw.shape[0] == 0:
        raise ValueError(f"expected at least one 2-D patch, got shape {raw.shape}")
    if not np.all(np.isfinite(raw)):
        raise ValueError("patches contain NaN or Inf entries")
    fields = np.empty((raw.shape[0], 2, raw.shape[1], raw.shape[2]), dtype=np.float64)
    for b in range(raw.shape[0]):
        peak = float(np.abs(raw[b]).max())
        fields[b] = pack_channels(raw[b] / peak if peak > 0 else raw[b])
    return fields


def train(patches, cfg: TrainConfig, schedule: NoiseSchedule) -> ScoreModel:
    """Fit the conv score net to a patch set; returns the frozen model.

    The model's meta dict carries the seed, epoch count, per-epoch mean loss
    history, and its running-minimum smoothing.
    """
    fields = _normalized_fields(patches)
    n = fields.shape[0]
    sigmas = schedule.sigmas
    rng = np.random.default_rng(cfg.seed)
    weights = init_weights(cfg.arch, rng)
    m_state = [(np.zeros_like(W), np.zeros_like(b)) for W, b in weights]
    v_state = [(np.zeros_like(W), np.zeros_like(b)) for W, b in weights]
    step = 0
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        loss_sum = 0.0
        for start in range(0, n, cfg.batch_size):
            xb = fields[order[start : start + cfg.batch_size]]
            bsz = xb.shape[0]
            idx = rng.integers(schedule.n, size=bsz)
            z = rng.standard_normal(xb.shape)
            noisy = xb + sigmas[idx][:, None, None, None] * z
            out, cache = forward_batch(cfg.arch, weights, noisy, want_cache=True)
            resid = out + z
            loss_sum += float(np.sum(resid**2))
            grads = backward_batch(cfg.arch, weights, cache, (2.0 / bsz) * resid)
            step += 1
            bias1 = 1.0 - cfg.beta1**step
            bias2 = 1.0 - cfg.beta2**step
            for li, (gW, gb) in enumerate(grads):
                W, b = weights[li]
                mW, mb = m_state[li]
                vW, vb = v_state[li]
                mW += (1.0 - cfg.beta1) * (gW - mW)
                mb += (1.0 - cfg.beta1) * (gb - mb)
                vW += (1.0 - cfg.beta2) * (gW**2 - vW)
                vb += (1.0 - cfg.beta2) * (gb**2 - vb)
                W -= cfg.lr * (mW / bias1) / (np.sqrt(vW / bias2) + _ADAM_EPS)
                b -= cfg.lr * (mb / bias1) / (np.sqrt(vb / bias2) + _ADAM_EPS)
        epoch_loss = loss_sum / n
        if not np.isfinite(epoch_loss):
            raise TrainingError(
                f"non-finite loss {epoch_loss} at epoch {epoch} (step {step}); "
                "lower the learning rate or check the patch scaling"
            )
        history.append(epoch_loss)
    smoothed = np.minimum.accumulate(history).tolist() if history else []
    meta = {
        "seed": cfg.seed,
        "epochs": cfg.epochs,
        "batch_size": cfg.batch_size,
        "lr": cfg.lr,
        "n_patches": n,
        "loss_history": tuple(history),
        "loss_smoothed": tuple(smoothed),
    }
    return freeze_model(cfg.arch, weights, schedule, meta)
