"""Generative-prior reconstruction of undersampled multi-coil MRI k-space.

The pipeline: lift one k-space dataset to a block-Hankel matrix, learn a
denoising score prior on its patches, then reconstruct new undersampled
acquisitions by predictor-corrector sampling interleaved with singular-value
thresholding of the lifted iterate and data consistency. A structured
low-rank baseline, synthetic phantoms, undersampling masks, bit-exact file
formats, and PSNR/SSIM metrics round out the toolkit; `hkgm --help` shows the
command-line workflow.
"""

from .checkpoint import CheckpointError, load_model, save_model
from .core import (
    as_volume,
    complex_normal,
    fft2c,
    ifft2c,
    pack_channels,
    sos,
    unpack_channels,
)
from .fileio import (
    FileFormatError,
    load_kspace,
    load_mask,
    load_png,
    save_kspace,
    save_mask,
    save_png,
)
from .hankel import (
    HankelMatrix,
    PatchSet,
    count_multiplicity,
    extract_patches,
    lift,
    unlift,
)
from .lowrank import SvdFactors, ThresholdPolicy, hard_threshold, lowrank_project, svd
from .masks import SamplingMask, apply_mask, make_mask, mask_grid, poisson_radius_map
from .metrics import MetricReport, psnr, ssim
from .phantom import DEFAULT_ELLIPSES, PhantomSpec, make_phantom
from .recon import (
    HkgmConfig,
    ReconError,
    ReconTrace,
    corrector_step,
    data_consistency,
    predictor_step,
    reconstruct_hkgm,
    reconstruct_sake,
    reconstruct_zero_fill,
)
from .schedule import NoiseSchedule
from .scorenet import REFERENCE_ARCH, ScoreModel, score_apply
from .train import TrainConfig, TrainingError, dsm_loss, perturb, train

__version__ = "0.1.0"

__all__ = [
    "CheckpointError",
    "DEFAULT_ELLIPSES",
    "FileFormatError",
    "HankelMatrix",
    "HkgmConfig",
    "MetricReport",
    "NoiseSchedule",
    "PatchSet",
    "PhantomSpec",
    "REFERENCE_ARCH",
    "ReconError",
    "ReconTrace",
    "SamplingMask",
    "ScoreModel",
    "SvdFactors",
    "ThresholdPolicy",
    "TrainConfig",
    "TrainingError",
    "apply_mask",
    "as_volume",
    "complex_normal",
    "corrector_step",
    "count_multiplicity",
    "data_consistency",
    "dsm_loss",
    "extract_patches",
    "fft2c",
    "hard_threshold",
    "ifft2c",
    "lift",
    "load_kspace",
    "load_mask",
    "load_model",
    "load_png",
    "lowrank_project",
    "make_mask",
    "make_phantom",
    "mask_grid",
    "pack_channels",
    "perturb",
    "poisson_radius_map",
    "predictor_step",
    "psnr",
    "reconstruct_hkgm",
    "reconstruct_sake",
    "reconstruct_zero_fill",
    "save_kspace",
    "save_mask",
    "save_model",
    "save_png",
    "score_apply",
    "sos",
    "ssim",
    "svd",
    "train",
    "unlift",
    "unpack_channels",
    "__version__",
]
