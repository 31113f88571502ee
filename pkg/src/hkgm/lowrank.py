"""SVD, singular-value hard thresholding, and the Hankel low-rank projection."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hankel import lift, unlift

__all__ = ["SvdFactors", "ThresholdPolicy", "svd", "hard_threshold", "lowrank_project"]

#: Threshold modes: "absolute" compares singular values against the raw
#: threshold, "relative" against threshold * largest singular value, and
#: "rank" keeps a fixed number of leading singular values.
THRESHOLD_MODES = ("absolute", "relative", "rank")


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD H = U diag(S) V^H with l = min(m, n) factors.

    U is (m, l) and V is (n, l), both column-orthonormal; S is non-negative
    and sorted non-increasing.
    """

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray

    def assemble(self, s: np.ndarray | None = None) -> np.ndarray:
        """Reassemble U diag(s) V^H, with S replaced by ``s`` when given."""
        vals = self.S if s is None else s
        return (self.U * vals) @ self.V.conj().T


@dataclass(frozen=True)
class ThresholdPolicy:
    """How singular values are kept or zeroed during the low-rank step."""

    mode: str
    value: float

    def __post_init__(self):
        if self.mode not in THRESHOLD_MODES:
            raise ValueError(f"unknown threshold mode {self.mode!r}")
        if self.mode == "rank":
            if self.value != int(self.value) or self.value < 1:
                raise ValueError("rank budget must be a positive integer")
        elif self.value < 0:
            raise ValueError("threshold must be non-negative")

    @classmethod
    def absolute(cls, r: float) -> "ThresholdPolicy":
        return cls("absolute", float(r))

    @classmethod
    def relative(cls, r: float) -> "ThresholdPolicy":
        return cls("relative", float(r))

    @classmethod
    def fixed_rank(cls, k: int) -> "ThresholdPolicy":
        return cls("rank", int(k))


def svd(H: np.ndarray) -> SvdFactors:
    """Thin SVD of a complex matrix.

    Raises a numerical error carrying matrix diagnostics if the backend fails
    to converge.
    """
    H = np.asarray(H)
    if H.ndim != 2:
        raise ValueError(f"svd expects a matrix, got shape {H.shape}")
    if not np.all(np.isfinite(np.abs(H))):
        raise ValueError("svd input contains NaN or Inf entries")
    try:
        U, S, Vh = np.linalg.svd(H, full_matrices=False)
    except np.linalg.LinAlgError as e:
        fro = float(np.linalg.norm(H))
        raise np.linalg.LinAlgError(
            f"SVD did not converge for {H.shape[0]}x{H.shape[1]} matrix "
            f"(frobenius norm {fro:.3e})"
        ) from e
    return SvdFactors(U=U, S=S, V=Vh.conj().T)


def _effective_cut(S: np.ndarray, policy: ThresholdPolicy):
    """Return the boolean keep-mask for singular values under a policy."""
    if policy.mode == "rank":
        k = int(policy.value)
        if k > len(S):
            raise ValueError(f"rank budget {k} exceeds factor count {len(S)}")
        keep = np.zeros(len(S), dtype=bool)
        keep[:k] = True
        return keep
    r = policy.value if policy.mode == "absolute" else policy.value * (S[0] if len(S) else 0.0)
    # ties at the threshold are kept
    return S >= r


def hard_threshold(factors: SvdFactors, policy: ThresholdPolicy) -> np.ndarray:
    """Zero singular values below the policy cut and reassemble the matrix."""
    keep = _effective_cut(factors.S, policy)
    s = np.where(keep, factors.S, 0.0)
    return factors.assemble(s)


def lowrank_project(k: np.ndarray, window: int, policy: ThresholdPolicy) -> np.ndarray:
    """One Hankel low-rank step: lift, threshold the spectrum, map back to k-space."""
    H = lift(k, window)
    return unlift(H.with_data(hard_threshold(svd(H.data), policy)))
