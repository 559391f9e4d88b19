"""Periodic coefficients for seasonally forced population models.

Every time-dependent coefficient in this package has the same shape: a
nonnegative mean value modulated by a single sinusoidal harmonic,

    favorable seasonality    c(t) = mean * (1 + amplitude * sin(2*pi*t/period))
    unfavorable seasonality  c(t) = mean * (1 + amplitude * cos(2*pi*t/period))
    constant                 c(t) = mean

A "favorable" coefficient starts the year at its mean and peaks a quarter
period in; an "unfavorable" one peaks at t = 0.  The amplitude is a relative
excursion in [0, 1], so c(t) stays within [mean*(1-amplitude),
mean*(1+amplitude)] and in particular keeps its sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

__all__ = ["Phase", "SeasonalCoefficient", "constant"]


class Phase(str, Enum):
    """Alignment of the seasonal peak within the year."""

    FAVORABLE = "favorable"      # sin forcing, peak at t = period/4
    UNFAVORABLE = "unfavorable"  # cos forcing, peak at t = 0
    CONSTANT = "constant"        # no modulation


@dataclass(frozen=True)
class SeasonalCoefficient:
    """One scalar model coefficient with optional sinusoidal seasonality.

    Attributes:
        mean: nonnegative mean value (the value itself when constant).
        amplitude: relative seasonal excursion, in [0, 1].
        phase: peak alignment; CONSTANT ignores the amplitude.
        period: forcing period, in the same time unit as the model (days).
    """

    mean: float
    amplitude: float = 0.0
    phase: Phase = Phase.CONSTANT
    period: float = 365.0

    def __post_init__(self) -> None:
        if not self.mean >= 0.0:
            raise ValueError(f"coefficient mean must be nonnegative, got {self.mean}")
        if not 0.0 <= self.amplitude <= 1.0:
            raise ValueError(f"seasonal amplitude must lie in [0, 1], got {self.amplitude}")
        if not self.period > 0.0:
            raise ValueError(f"period must be positive, got {self.period}")

    def __call__(self, t: float) -> float:
        """Evaluate the coefficient at time t."""
        if self.phase is Phase.CONSTANT:
            return self.mean
        angle = 2.0 * math.pi * t / self.period
        if self.phase is Phase.FAVORABLE:
            return self.mean * (1.0 + self.amplitude * math.sin(angle))
        return self.mean * (1.0 + self.amplitude * math.cos(angle))

    def compiled(self):
        """Return a plain closure t -> c(t) with all parameters bound.

        The returned function avoids attribute and enum dispatch per call,
        which matters inside right-hand-side evaluations.
        """
        mean = self.mean
        if self.phase is Phase.CONSTANT or self.amplitude == 0.0:
            return lambda t: mean
        omega = 2.0 * math.pi / self.period
        amp = self.amplitude
        sin = math.sin
        cos = math.cos
        if self.phase is Phase.FAVORABLE:
            return lambda t: mean * (1.0 + amp * sin(omega * t))
        return lambda t: mean * (1.0 + amp * cos(omega * t))

    @property
    def lo(self) -> float:
        """Minimum of c over one period."""
        if self.phase is Phase.CONSTANT:
            return self.mean
        return self.mean * (1.0 - self.amplitude)

    @property
    def hi(self) -> float:
        """Maximum of c over one period."""
        if self.phase is Phase.CONSTANT:
            return self.mean
        return self.mean * (1.0 + self.amplitude)

    @property
    def is_constant(self) -> bool:
        return self.phase is Phase.CONSTANT or self.amplitude == 0.0


def constant(value: float, period: float = 365.0) -> SeasonalCoefficient:
    """Shorthand for a constant coefficient sharing the model period."""
    return SeasonalCoefficient(mean=value, amplitude=0.0, phase=Phase.CONSTANT, period=period)
