"""Geometric noise schedule for the variance-exploding diffusion chain."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["NoiseSchedule"]


@dataclass(frozen=True)
class NoiseSchedule:
    """Strictly increasing noise levels sigma_i = sigma_min * (sigma_max/sigma_min)^(i/(N-1)).

    A single-level schedule (n == 1) degenerates to [sigma_max].
    """

    sigma_min: float = 0.01
    sigma_max: float = 1.0
    n: int = 1000

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("schedule length must be >= 1")
        if not 0 < self.sigma_min <= self.sigma_max:
            raise ValueError(
                f"need 0 < sigma_min <= sigma_max, got ({self.sigma_min}, {self.sigma_max})"
            )
        if self.n > 1 and self.sigma_min == self.sigma_max:
            raise ValueError("sigma_min must be strictly below sigma_max for n > 1")

    @property
    def sigmas(self) -> np.ndarray:
        """The increasing level array, endpoints exact."""
        if self.n == 1:
            return np.array([self.sigma_max])
        s = np.geomspace(self.sigma_min, self.sigma_max, self.n)
        s[0], s[-1] = self.sigma_min, self.sigma_max
        return s
