"""Uniform time grid on [0, T]."""

from dataclasses import dataclass

import numpy as np

from ..errors import ContractError


@dataclass(frozen=True)
class TimeGrid:
    """Horizon T split into N equal steps of length dt = T / N."""

    horizon: float
    steps: int

    def __post_init__(self):
        if not isinstance(self.steps, (int, np.integer)) or self.steps < 1:
            raise ContractError(f"steps must be a positive integer, got {self.steps!r}")
        if not np.isfinite(self.horizon) or self.horizon <= 0:
            raise ContractError(f"horizon must be positive and finite, got {self.horizon!r}")

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    @property
    def sqrt_dt(self) -> float:
        return float(np.sqrt(self.dt))

    @property
    def times(self) -> np.ndarray:
        """t_k = k * dt for k = 0..N"""
        return np.arange(self.steps + 1) * self.dt

    def time(self, k: int) -> float:
        return k * self.dt
