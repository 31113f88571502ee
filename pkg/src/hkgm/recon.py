"""Iterative k-space reconstruction.

The main solver alternates three operations per outer step, from high noise
to low: a reverse-diffusion predictor driven by the learned score, a low-rank
projection of the block-Hankel lifting, and data consistency against the
measured samples; an annealed Langevin corrector (with its own projection and
consistency pass) runs M times after each predictor step. The classic
structured low-rank baseline iterates projection and consistency alone from
the zero-filled input.

All solvers work on a copy of the measurements normalized to unit maximum
magnitude and denormalize at the end; with hard data consistency the sampled
entries of the returned volume are bit-equal to the input measurements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import as_volume, complex_normal, ifft2c, pack_channels, sos, unpack_channels
from .lowrank import ThresholdPolicy, lowrank_project
from .masks import mask_grid
from .metrics import psnr, ssim
from .schedule import NoiseSchedule

__all__ = [
    "HkgmConfig",
    "ReconError",
    "ReconTrace",
    "predictor_step",
    "corrector_step",
    "data_consistency",
    "reconstruct_hkgm",
    "reconstruct_sake",
    "reconstruct_zero_fill",
]


class ReconError(RuntimeError):
    """Raised when a reconstruction produces non-finite values or bad inputs."""


@dataclass(frozen=True)
class ReconTrace:
    """Per-outer-iteration convergence records (iteration, psnr, ssim, residual).

    psnr/ssim are NaN when no reference image was supplied; residual is the
    data-fidelity norm ||M k - y||_2 at the end of the iteration.
    """

    rows: tuple = ()

    def to_csv(self, path) -> None:
        lines = ["iter,psnr,ssim,residual"]
        for it, p, s, r in self.rows:
            lines.append(f"{it},{p!r},{s!r},{r!r}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


@dataclass(frozen=True)
class HkgmConfig:
    """Solver settings: n outer steps, m corrector passes per step, lifting
    window, singular-value threshold policy, corrector signal-to-noise ratio,
    and data-consistency weight (inf = hard replacement)."""

    n: int = 1000
    m: int = 1
    window: int = 8
    policy: ThresholdPolicy = field(default_factory=lambda: ThresholdPolicy.absolute(0.8))
    r_snr: float = 0.075
    lam: float = math.inf
    seed: int = 0
    schedule: NoiseSchedule | None = None  # None: model's sigma range with n steps
    fast: bool = False  # skip the corrector's low-rank pass when m == 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"need at least one outer step, got {self.n}")
        if self.m < 0:
            raise ValueError(f"corrector steps must be non-negative, got {self.m}")
        if self.window < 2:
            raise ValueError(f"window must be at least 2, got {self.window}")
        if not isinstance(self.policy, ThresholdPolicy):
            raise TypeError(f"policy must be a ThresholdPolicy, got {type(self.policy)}")
        if self.r_snr <= 0:
            raise ValueError(f"corrector signal-to-noise ratio must be positive, got {self.r_snr}")
        if not self.lam > 0:
            raise ValueError(f"data-consistency weight must be positive, got {self.lam}")

    def effective_schedule(self, model) -> NoiseSchedule:
        if self.schedule is not None:
            return self.schedule
        base = model.schedule
        return NoiseSchedule(sigma_min=base.sigma_min, sigma_max=base.sigma_max, n=self.n)


def _score_volume(model, k: np.ndarray, sigma: float) -> np.ndarray:
    """Apply the 2-channel score model coil-by-coil; never mixes coils."""
    out = np.empty_like(k)
    for c in range(k.shape[0]):
        out[c] = unpack_channels(np.asarray(model(pack_channels(k[c]), sigma)))
    return out


def predictor_step(k, model, sigma_lo: float, sigma_hi: float, seed=0, noise_draw=None):
    """One reverse-diffusion step from noise level sigma_hi down to sigma_lo:
    k + (sigma_hi^2 - sigma_lo^2) * s(k, sigma_hi) + sqrt(sigma_hi^2 - sigma_lo^2) * z."""
    k = as_volume(k, "k-space")
    if not 0.0 <= sigma_lo < sigma_hi:
        raise ValueError(f"need sigma_hi > sigma_lo >= 0, got {sigma_lo}, {sigma_hi}")
    rng = np.random.default_rng(seed)
    draw = noise_draw or complex_normal
    score = _score_volume(model, k, sigma_hi)
    z = draw(rng, k.shape, 1.0)
    var = sigma_hi**2 - sigma_lo**2
    return k + var * score + np.sqrt(var) * z


def corrector_step(k, model, sigma: float, r_snr: float = 0.075, seed=0, noise_draw=None):
    """One annealed Langevin step at fixed noise level: k + eps * s + sqrt(2 eps) * z
    with eps = 2 * (r_snr * ||z|| / ||s||)^2; identity when the score vanishes."""
    k = as_volume(k, "k-space")
    if sigma <= 0:
        raise ValueError(f"noise level must be positive, got {sigma}")
    rng = np.random.default_rng(seed)
    draw = noise_draw or complex_normal
    score = _score_volume(model, k, sigma)
    z = draw(rng, k.shape, 1.0)
    s_norm = float(np.linalg.norm(score))
    if s_norm == 0.0:
        return k.copy()
    eps = 2.0 * (r_snr * float(np.linalg.norm(z)) / s_norm) ** 2
    return k + eps * score + np.sqrt(2.0 * eps) * z


def data_consistency(k_lr, y, mask, lam: float = math.inf) -> np.ndarray:
    """Blend the estimate with the measurements on the sampled set.

    Hard mode (lam = inf) copies the measured entries bit-exactly; finite lam
    replaces them with (k_lr + lam * y) / (1 + lam). Unsampled entries pass
    through unchanged.
    """
    k_lr = as_volume(k_lr, "estimate")
    y = as_volume(y, "measurements")
    grid = mask_grid(mask)
    if k_lr.shape != y.shape or k_lr.shape[1:] != grid.shape:
        raise ValueError(
            f"shape mismatch: estimate {k_lr.shape}, measurements {y.shape}, mask {grid.shape}"
        )
    if not lam > 0:
        raise ValueError(f"data-consistency weight must be positive, got {lam}")
    if math.isinf(lam):
        return np.where(grid[np.newaxis], y, k_lr)
    return np.where(grid[np.newaxis], (k_lr + lam * y) / (1.0 + lam), k_lr)


def _normalize_input(y: np.ndarray):
    scale = float(np.abs(y).max())
    if scale <= 0 or not np.isfinite(scale):
        raise ReconError(f"measurements have invalid peak magnitude {scale}")
    return y / scale, scale


def _trace_row(it, k, scale, grid, y, reference):
    residual = float(np.linalg.norm(k[:, grid] * scale - y[:, grid]))
    if reference is None:
        return (it, float("nan"), float("nan"), residual)
    img = sos(ifft2c(k)) * scale
    return (it, psnr(img, reference), ssim(img, reference), residual)


def _check_hard_dc(k, yn, grid, lam, iteration):
    if math.isinf(lam) and not np.array_equal(k[:, grid], yn[:, grid]):
        raise ReconError(f"sampled entries drifted from the measurements at iteration {iteration}")


def _check_finite(k, iteration):
    if not np.isfinite(k).all():
        raise ReconError(f"non-finite values in the iterate at iteration {iteration}")


def _finish(k, y, grid, scale, lam):
    k = k * scale
    if math.isinf(lam):
        # float renormalization is not exact; restore measured entries bit-exactly
        k = np.where(grid[np.newaxis], y, k)
    return k


def reconstruct_hkgm(
    y,
    mask,
    model,
    cfg: HkgmConfig,
    reference=None,
    callback=None,
    init=None,
    noise_draw=None,
):
    """Score-guided low-rank reconstruction of undersampled k-space.

    `y` holds the measurements with unsampled entries zero. Returns the
    reconstructed volume and a per-outer-iteration trace. `reference` (a real
    SOS image) enables psnr/ssim in the trace; `callback(iteration, k)` runs
    after every outer iteration on the normalized iterate; `init` overrides
    the Gaussian initialization; `noise_draw(rng, shape, std)` overrides the
    sampler's noise source (test hook).
    """
    y = as_volume(y, "measurements")
    grid = mask_grid(mask)
    if y.shape[1:] != grid.shape:
        raise ValueError(f"mask {grid.shape} does not match measurements {y.shape}")
    yn, scale = _normalize_input(y)
    sched = cfg.effective_schedule(model)
    levels = sched.sigmas
    rng = np.random.default_rng(cfg.seed)
    draw = noise_draw or complex_normal
    k = as_volume(init, "init") if init is not None else draw(rng, y.shape, levels[-1])
    rows = []
    for step, t in enumerate(range(sched.n - 1, -1, -1)):
        sigma_hi = levels[t]
        sigma_lo = levels[t - 1] if t > 0 else 0.0
        k = predictor_step(k, model, sigma_lo, sigma_hi, rng, noise_draw=draw)
        k = lowrank_project(k, cfg.window, cfg.policy)
        k = data_consistency(k, yn, grid, cfg.lam)
        _check_hard_dc(k, yn, grid, cfg.lam, step)
        sigma_corr = levels[max(t - 1, 0)]
        for _ in range(cfg.m):
            k = corrector_step(k, model, sigma_corr, cfg.r_snr, rng, noise_draw=draw)
            if not (cfg.fast and cfg.m == 1):
                k = lowrank_project(k, cfg.window, cfg.policy)
            k = data_consistency(k, yn, grid, cfg.lam)
            _check_hard_dc(k, yn, grid, cfg.lam, step)
        _check_finite(k, step)
        rows.append(_trace_row(step, k, scale, grid, y, reference))
        if callback is not None:
            callback(step, k)
    return _finish(k, y, grid, scale, cfg.lam), ReconTrace(tuple(rows))


def reconstruct_sake(y, mask, window: int, policy, iters: int = 100, reference=None, callback=None):
    """Structured low-rank baseline: alternate low-rank projection and hard
    data consistency, starting from the zero-filled measurements.

    `policy` is a ThresholdPolicy or an integer rank.
    """
    y = as_volume(y, "measurements")
    grid = mask_grid(mask)
    if y.shape[1:] != grid.shape:
        raise ValueError(f"mask {grid.shape} does not match measurements {y.shape}")
    if isinstance(policy, (int, np.integer)):
        policy = ThresholdPolicy.fixed_rank(int(policy))
    if iters < 0:
        raise ValueError(f"iteration count must be non-negative, got {iters}")
    if iters == 0:
        return y.copy(), ReconTrace()
    yn, scale = _normalize_input(y)
    k = yn.copy()
    rows = []
    for step in range(iters):
        k = lowrank_project(k, window, policy)
        k = data_consistency(k, yn, grid, math.inf)
        _check_hard_dc(k, yn, grid, math.inf, step)
        _check_finite(k, step)
        rows.append(_trace_row(step, k, scale, grid, y, reference))
        if callback is not None:
            callback(step, k)
    return _finish(k, y, grid, scale, math.inf), ReconTrace(tuple(rows))


def reconstruct_zero_fill(y) -> np.ndarray:
    """Root-sum-of-squares image of the measurements as given."""
    return sos(ifft2c(as_volume(y, "measurements")))
