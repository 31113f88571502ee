"""Command-line workflow: simulate, mask, train, reconstruct, evaluate, sweep.

All subcommands are deterministic for fixed seeds; the environment variable
HKGM_THREADS caps the linear-algebra thread pool (best effort, set it before
the interpreter starts for a hard cap).
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from .checkpoint import CheckpointError, load_model, save_model
from .core import ifft2c, sos
from .fileio import (
    FileFormatError,
    load_kspace,
    load_mask,
    load_png,
    save_kspace,
    save_mask,
    save_png,
)
from .hankel import extract_patches, lift
from .lowrank import ThresholdPolicy
from .masks import apply_mask, make_mask
from .metrics import MetricReport, psnr, ssim
from .phantom import PhantomSpec, make_phantom
from .recon import (
    HkgmConfig,
    ReconError,
    reconstruct_hkgm,
    reconstruct_sake,
    reconstruct_zero_fill,
)
from .schedule import NoiseSchedule
from .train import TrainConfig, TrainingError, train

__all__ = ["main"]

REPORT_HEADER = "method,pattern,R,window,thresh,npatch,psnr,ssim"

_PATTERN_ALIASES = {
    "poisson": "poisson",
    "random2d": "random2d",
    "partial": "partial-fourier",
    "partial-fourier": "partial-fourier",
}


def _apply_thread_cap() -> None:
    cap = os.environ.get("HKGM_THREADS")
    if not cap:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, cap)


def _load_image(path) -> np.ndarray:
    """Read a real image from a PNG or the SOS image of a k-space file."""
    text = str(path)
    if text.endswith(".png"):
        return load_png(path)
    return sos(ifft2c(load_kspace(path)))


def _report_rows(path, rows) -> None:
    lines = [REPORT_HEADER]
    for r in rows:
        lines.append(
            f"{r.method},{r.config.get('pattern', '')},{r.config.get('R', '')},"
            f"{r.config.get('window', '')},{r.config.get('thresh', '')},"
            f"{r.config.get('npatch', '')},{r.psnr!r},{r.ssim!r}"
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_phantom(args) -> int:
    spec = PhantomSpec(nx=args.nx, ny=args.ny, nc=args.nc, seed=args.seed)
    _, k = make_phantom(spec)
    save_kspace(k, args.out)
    print(f"phantom k-space {k.shape[1]}x{k.shape[2]}x{k.shape[0]} -> {args.out}")
    return 0


def cmd_mask(args) -> int:
    pattern = _PATTERN_ALIASES[args.pattern]
    mask = make_mask(pattern, args.nx, args.ny, args.R, acs=args.acs, seed=args.seed)
    save_mask(mask, args.out)
    print(f"{pattern} mask, sampled fraction {mask.fraction:.4f} -> {args.out}")
    return 0


def cmd_train(args) -> int:
    k = load_kspace(args.kspace)
    patches = extract_patches(lift(k, args.window), args.patch, args.npatch, seed=args.seed)
    schedule = NoiseSchedule(sigma_min=args.sigma_min, sigma_max=args.sigma_max, n=args.n_sigmas)
    cfg = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch,
        lr=args.lr,
        seed=args.seed,
    )
    model = train(patches, cfg, schedule)
    save_model(model, args.out)
    hist = model.meta.get("loss_history", ())
    tail = f", final loss {hist[-1]:.4g}" if hist else ""
    print(f"trained on {patches.count} patches for {args.epochs} epochs{tail} -> {args.out}")
    return 0


def _save_image(img: np.ndarray, path) -> None:
    peak = float(img.max())
    save_png(img, path, vmax=peak if peak > 0 else 1.0)


def cmd_recon(args) -> int:
    y = load_kspace(args.kspace)
    reference = sos(ifft2c(load_kspace(args.ref))) if args.ref else None
    if args.method == "zerofill":
        img = reconstruct_zero_fill(y)
        k_rec, trace = y, None
    else:
        if not args.mask:
            raise ValueError(f"--mask is required for method {args.method}")
        grid = load_mask(args.mask)
        y = apply_mask(y, grid)
        if args.method == "hkgm":
            if not args.model:
                raise ValueError("--model is required for method hkgm")
            model = load_model(args.model)
            cfg = HkgmConfig(
                n=args.N,
                m=args.M,
                window=args.window,
                policy=ThresholdPolicy.absolute(args.thresh),
                r_snr=args.snr,
                lam=args.lam,
                seed=args.seed,
            )
            k_rec, trace = reconstruct_hkgm(y, grid, model, cfg, reference=reference)
        else:  # sake
            if args.rank is None:
                raise ValueError("--rank is required for method sake")
            k_rec, trace = reconstruct_sake(
                y, grid, args.window, args.rank, iters=args.iters, reference=reference
            )
        img = reconstruct_zero_fill(k_rec)
    _save_image(img, args.out)
    if args.out_kspace:
        save_kspace(k_rec, args.out_kspace)
    if args.trace:
        if trace is None:
            raise ValueError("method zerofill has no iteration trace")
        trace.to_csv(args.trace)
    print(f"{args.method} reconstruction -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    img = _load_image(args.recon)
    ref = _load_image(args.ref)
    report = MetricReport(method=args.method, psnr=psnr(img, ref), ssim=ssim(img, ref))
    _report_rows(args.report, [report])
    print(f"psnr {report.psnr:.2f} dB, ssim {report.ssim:.4f} -> {args.report}")
    return 0


def _sweep_cell(args, k_full, reference, grid, window_train, window_recon, thresh, npatch, cache):
    key = (window_train, npatch)
    if key not in cache:
        patches = extract_patches(lift(k_full, window_train), args.patch, npatch, seed=args.seed)
        cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch, lr=args.lr, seed=args.seed)
        cache[key] = train(patches, cfg, NoiseSchedule())
    model = cache[key]
    y = apply_mask(k_full, grid)
    cfg = HkgmConfig(
        n=args.N,
        m=args.M,
        window=window_recon,
        policy=ThresholdPolicy.absolute(thresh),
        r_snr=args.snr,
        seed=args.seed,
    )
    k_rec, _ = reconstruct_hkgm(y, grid, model, cfg)
    img = reconstruct_zero_fill(k_rec)
    return MetricReport(
        method="hkgm",
        psnr=psnr(img, reference),
        ssim=ssim(img, reference),
        mask=args.pattern,
        config={
            "pattern": _PATTERN_ALIASES[args.pattern],
            "R": args.R,
            "window": window_recon,
            "thresh": thresh,
            "npatch": npatch,
        },
    )


def cmd_sweep(args) -> int:
    pattern = _PATTERN_ALIASES[args.pattern]
    spec = PhantomSpec(nx=args.nx, ny=args.ny, nc=args.nc, seed=args.seed)
    _, k_full = make_phantom(spec)
    reference = sos(ifft2c(k_full))
    grid = make_mask(pattern, args.nx, args.ny, args.R, acs=args.acs, seed=args.seed)
    if args.axis == "window":
        values = [int(v) for v in args.values.split(",")]
    elif args.axis == "npatch":
        values = [int(v) for v in args.values.split(",")]
    else:
        values = [float(v) for v in args.values.split(",")]
    cache = {}
    rows = []
    for v in values:
        window_train = args.train_window or args.window
        window_recon, thresh, npatch = args.window, args.thresh, args.npatch
        if args.axis == "window":
            window_recon = v
            if args.train_window is None:
                window_train = v
        elif args.axis == "thresh":
            thresh = v
        else:
            npatch = v
        rows.append(
            _sweep_cell(
                args, k_full, reference, grid, window_train, window_recon, thresh, npatch, cache
            )
        )
        print(f"{args.axis}={v}: psnr {rows[-1].psnr:.2f} dB, ssim {rows[-1].ssim:.4f}")
    _report_rows(args.out, rows)
    print(f"{len(rows)} rows -> {args.out}")
    return 0


def _add_common_phantom_flags(p) -> None:
    p.add_argument("--nx", type=int, default=64)
    p.add_argument("--ny", type=int, default=64)
    p.add_argument("--nc", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hkgm",
        description="Hankel-space generative-prior reconstruction for undersampled multi-coil MRI",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="write a synthetic multi-coil k-space volume")
    _add_common_phantom_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("mask", help="write an undersampling mask")
    p.add_argument("--pattern", choices=sorted(_PATTERN_ALIASES), default="poisson")
    p.add_argument("--nx", type=int, default=64)
    p.add_argument("--ny", type=int, default=64)
    p.add_argument("--R", type=float, default=4.0)
    p.add_argument("--acs", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("train", help="fit the score prior to one k-space dataset")
    p.add_argument("--kspace", required=True)
    p.add_argument("--window", type=int, default=8)
    p.add_argument("--patch", type=int, default=256)
    p.add_argument("--npatch", type=int, default=484)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch", type=int, default=2)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--sigma-min", type=float, default=0.01)
    p.add_argument("--sigma-max", type=float, default=1.0)
    p.add_argument("--n-sigmas", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("recon", help="reconstruct undersampled k-space")
    p.add_argument("--method", choices=("hkgm", "sake", "zerofill"), required=True)
    p.add_argument("--kspace", required=True, help="measured (or full, pre-mask) k-space file")
    p.add_argument("--mask")
    p.add_argument("--model")
    p.add_argument("--N", type=int, default=1000, help="outer steps")
    p.add_argument("--M", type=int, default=1, help="corrector steps per outer step")
    p.add_argument("--window", type=int, default=8)
    p.add_argument("--thresh", type=float, default=0.8)
    p.add_argument("--snr", type=float, default=0.075)
    p.add_argument("--lambda", dest="lam", type=float, default=math.inf)
    p.add_argument("--rank", type=int, help="fixed rank for the low-rank baseline")
    p.add_argument("--iters", type=int, default=100, help="baseline iteration count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ref", help="fully sampled k-space for trace metrics")
    p.add_argument("--trace", help="write per-iteration CSV here")
    p.add_argument("--out", required=True, help="output PNG image")
    p.add_argument("--out-kspace", help="write reconstructed k-space here")
    p.set_defaults(func=cmd_recon)

    p = sub.add_parser("eval", help="score a reconstruction against a reference")
    p.add_argument("--recon", required=True, help="PNG or k-space file")
    p.add_argument("--ref", required=True, help="PNG or k-space file")
    p.add_argument("--method", default="recon", help="label for the report row")
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="ablation grid over one axis, one report row per cell")
    p.add_argument("--axis", choices=("window", "thresh", "npatch"), required=True)
    p.add_argument("--values", required=True, help="comma-separated axis values")
    _add_common_phantom_flags(p)
    p.add_argument("--pattern", choices=sorted(_PATTERN_ALIASES), default="poisson")
    p.add_argument("--R", type=float, default=4.0)
    p.add_argument("--acs", type=int, default=0)
    p.add_argument("--window", type=int, default=8)
    p.add_argument("--thresh", type=float, default=0.8)
    p.add_argument("--npatch", type=int, default=128)
    p.add_argument("--patch", type=int, default=32)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch", type=int, default=2)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--N", type=int, default=100)
    p.add_argument("--M", type=int, default=1)
    p.add_argument("--snr", type=float, default=0.075)
    p.add_argument(
        "--train-window",
        type=int,
        help="train once at this window and vary only the reconstruction window",
    )
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    _apply_thread_cap()
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (
        OSError,
        ValueError,
        TypeError,
        FileFormatError,
        CheckpointError,
        ReconError,
        TrainingError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
