"""Shared fixtures: reference models and orbits reused across test modules.

Session scope keeps the expensive solves (boundary orbits of the reference
parameter sets) to one run for the whole suite.
"""

import numpy as np
import pytest

from floquet_allee import (DEFAULT_SETTINGS, Family, FunctionalResponse,
                           GrowthFunction, GrowthKind, ModelSystem, Phase,
                           ResponseKind, SeasonalCoefficient, constant,
                           find_orbit_newton, prey_only_orbits_strong,
                           table1_model, table2_model)


def weak_reference_model(p_mean: float = 1.3, period: float = 365.0) -> ModelSystem:
    """Weak-Allee model whose prey-only orbit is exactly N(t) = 1.

    The carrying capacity is the constant 1, and seasonality enters the
    growth only through the factor r(t), so the positive root of the growth
    rate never moves.  That makes every boundary quantity a closed form:

        lambda1 = exp(-(1 + m)/2 * integral of r)   (here m = 0.1)
        lambda2 = exp(T * (gamma*b*p/(1+p) - delta1))  via the means
        R0      = gamma*b*p / ((1+p) * delta1)

    since each seasonal factor integrates to its mean over a full period.
    """
    return ModelSystem(
        family=Family.PREDATOR_PREY,
        growth=GrowthFunction(
            kind=GrowthKind.RATIONAL_WEAK,
            r=SeasonalCoefficient(0.11, 0.1, Phase.FAVORABLE, period),
            k_plus=constant(1.0, period),
            offset=constant(0.1, period)),
        response=FunctionalResponse(
            kind=ResponseKind.HOLLING_II,
            b=SeasonalCoefficient(0.88, 0.1, Phase.FAVORABLE, period),
            p=constant(p_mean, period)),
        gamma=constant(0.39, period),
        delta1=SeasonalCoefficient(0.19, 0.1, Phase.UNFAVORABLE, period),
        period=period)


def fast_strong_model(period: float = 2.0) -> ModelSystem:
    """Small-period strong-Allee system for cheap integration tests."""
    return ModelSystem(
        family=Family.PREDATOR_PREY,
        growth=GrowthFunction(
            kind=GrowthKind.GILPIN_STRONG,
            r=constant(1.0, period),
            k_minus=SeasonalCoefficient(0.2, 0.3, Phase.UNFAVORABLE, period),
            k_plus=SeasonalCoefficient(1.0, 0.2, Phase.FAVORABLE, period)),
        response=FunctionalResponse(
            kind=ResponseKind.HOLLING_II,
            b=constant(1.0, period),
            p=SeasonalCoefficient(0.8, 0.25, Phase.FAVORABLE, period)),
        gamma=constant(0.7, period),
        delta1=constant(0.3, period),
        period=period)


@pytest.fixture(scope="session")
def table1():
    return table1_model()


@pytest.fixture(scope="session")
def table2():
    return table2_model()


@pytest.fixture(scope="session")
def weak_model():
    return weak_reference_model()


@pytest.fixture(scope="session")
def small_model():
    return fast_strong_model()


@pytest.fixture(scope="session")
def table1_prey_orbits(table1):
    """(N*_- orbit, N*_+ orbit) of the reference strong-Allee system."""
    return prey_only_orbits_strong(table1, settings=DEFAULT_SETTINGS)


@pytest.fixture(scope="session")
def table1_interior(table1):
    """The stable interior T-orbit near the carrying capacity at p = 1.3."""
    orbit = find_orbit_newton(table1, np.array([0.98, 1e-4]),
                              settings=DEFAULT_SETTINGS)
    assert orbit.location == "interior"
    return orbit
