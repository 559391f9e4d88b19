"""Seasonal coefficient shapes, bounds and validation."""

import math

import numpy as np
import pytest

from floquet_allee import Phase, SeasonalCoefficient, constant


class TestSeasonalCoefficient:

    def test_constant_ignores_time(self):
        c = constant(0.39, period=365.0)
        assert c.is_constant
        for t in (0.0, 91.25, 400.0, -12.0):
            assert c(t) == 0.39
        assert c.lo == c.hi == 0.39

    def test_favorable_starts_at_mean_and_peaks_quarter_in(self):
        c = SeasonalCoefficient(2.0, 0.25, Phase.FAVORABLE, period=100.0)
        assert c(0.0) == pytest.approx(2.0, abs=1e-15)
        assert c(25.0) == pytest.approx(2.0 * 1.25, rel=1e-15)
        assert c(75.0) == pytest.approx(2.0 * 0.75, rel=1e-15)

    def test_unfavorable_peaks_at_year_start(self):
        c = SeasonalCoefficient(0.19, 0.1, Phase.UNFAVORABLE, period=365.0)
        assert c(0.0) == pytest.approx(0.19 * 1.1, rel=1e-15)
        assert c(182.5) == pytest.approx(0.19 * 0.9, rel=1e-15)

    def test_periodicity(self):
        c = SeasonalCoefficient(1.0, 0.5, Phase.FAVORABLE, period=7.0)
        ts = np.linspace(0.0, 7.0, 23)
        for t in ts:
            assert c(t + 7.0) == pytest.approx(c(t), abs=1e-12)

    def test_bounds_attained(self):
        c = SeasonalCoefficient(3.0, 0.4, Phase.FAVORABLE, period=10.0)
        ts = np.linspace(0.0, 10.0, 2001)
        vals = np.array([c(t) for t in ts])
        assert c.lo == pytest.approx(3.0 * 0.6, rel=1e-15)
        assert c.hi == pytest.approx(3.0 * 1.4, rel=1e-15)
        assert vals.min() >= c.lo - 1e-12
        assert vals.max() <= c.hi + 1e-12
        assert vals.min() == pytest.approx(c.lo, rel=1e-5)
        assert vals.max() == pytest.approx(c.hi, rel=1e-5)

    def test_mean_over_period_is_mean(self):
        # The single-harmonic modulation integrates to zero over a period.
        c = SeasonalCoefficient(0.88, 0.3, Phase.UNFAVORABLE, period=365.0)
        ts = np.linspace(0.0, 365.0, 100000, endpoint=False)
        avg = np.mean([c(t) for t in ts])
        assert avg == pytest.approx(0.88, rel=1e-8)

    def test_compiled_matches_call(self):
        rng = np.random.default_rng(7)
        for phase in Phase:
            c = SeasonalCoefficient(1.7, 0.35, phase, period=42.0)
            fn = c.compiled()
            for t in rng.uniform(-50.0, 150.0, size=40):
                assert fn(t) == c(t)

    def test_zero_amplitude_is_constant(self):
        c = SeasonalCoefficient(5.0, 0.0, Phase.FAVORABLE, period=10.0)
        assert c.is_constant
        assert c(2.5) == 5.0

    def test_validation(self):
        with pytest.raises(ValueError, match="amplitude"):
            SeasonalCoefficient(1.0, 1.5, Phase.FAVORABLE)
        with pytest.raises(ValueError, match="amplitude"):
            SeasonalCoefficient(1.0, -0.1, Phase.FAVORABLE)
        with pytest.raises(ValueError, match="mean"):
            SeasonalCoefficient(-1.0, 0.1, Phase.FAVORABLE)
        with pytest.raises(ValueError, match="mean"):
            SeasonalCoefficient(math.nan, 0.1, Phase.FAVORABLE)
        with pytest.raises(ValueError, match="period"):
            SeasonalCoefficient(1.0, 0.1, Phase.FAVORABLE, period=0.0)

    def test_amplitude_one_keeps_sign(self):
        c = SeasonalCoefficient(2.0, 1.0, Phase.FAVORABLE, period=4.0)
        ts = np.linspace(0.0, 4.0, 4001)
        assert min(c(t) for t in ts) >= -1e-12
