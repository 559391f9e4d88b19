"""Seasonally forced planar predator-prey models with an Allee effect.

Three model families share the prey equation

    dN/dt = k(t, N) * N - f(t, N, P) * P

where k is the per-capita prey growth rate (subject to a weak or strong
Allee effect) and f is the functional response of predation.  They differ
in the predator equation:

    predator-prey       dP/dt = gamma(t)*f(t,N,P)*P - delta1(t)*P - delta2(t)*P^2
    leslie-gower        dP/dt = c2(t)*P*(1 - P/(N + c(t)))
    leslie-gower-pm     dP/dt = P*(a(t) - P/(N + n(t)))

In the Leslie-Gower families the predator grows logistically toward a
prey-dependent carrying capacity; the refuge coefficient (c or n) keeps the
capacity positive when prey is extinct, so a predator-only regime exists.

All coefficients are `SeasonalCoefficient` values sharing one period T, so
the right-hand side is T-periodic in time.  Growth rates come in three
shapes: a strong-Allee quadratic with two positive roots K_minus < K_plus
(negative growth below the survival threshold K_minus), a normalized
variant of the same quadratic, and a weak-Allee rational form that is
positive on (0, K_plus) but has small low-density growth.  Jacobians are
analytic for the built-in shapes and fall back to central differences for
custom callables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .seasonal import Phase, SeasonalCoefficient, constant

__all__ = [
    "DomainError",
    "GrowthKind",
    "GrowthFunction",
    "ResponseKind",
    "FunctionalResponse",
    "Family",
    "ModelSystem",
    "invariant_box",
    "in_invariant_set",
]


class DomainError(ValueError):
    """State left the domain where the model is defined (e.g. N + c(t) <= 0)."""


# ---------------------------------------------------------------------------
# Prey growth rate k(t, N)
# ---------------------------------------------------------------------------

class GrowthKind(str, Enum):
    """Shape of the per-capita prey growth rate."""

    GILPIN_STRONG = "gilpin-strong"                # r(t) * (N - K-(t)) * (K+(t) - N)
    GILPIN_STRONG_SCALED = "gilpin-strong-scaled"  # r(t) * (N - K-(t)) * (1 - N/K+(t))
    RATIONAL_WEAK = "rational-weak"                # r(t) * (N + m(t)) * (K+(t) - N) / (1 + N)
    CUSTOM = "custom"


@dataclass(frozen=True)
class GrowthFunction:
    """Per-capita prey growth rate k(t, N).

    Strong-Allee shapes have two positive roots: growth is negative below
    K_minus (the survival threshold) and above K_plus (the carrying
    capacity).  The weak shape keeps k(t, 0) > 0 provided the low-density
    offset m(t) is positive, but still saturates at K_plus; it satisfies
    the weak-Allee conditions (hump-shaped per-capita rate) whenever
    m < K_plus / (1 + K_plus).
    """

    kind: GrowthKind
    r: Optional[SeasonalCoefficient] = None
    k_minus: Optional[SeasonalCoefficient] = None
    k_plus: Optional[SeasonalCoefficient] = None
    offset: Optional[SeasonalCoefficient] = None
    fn: Optional[Callable[[float, float], float]] = None
    fn_dN: Optional[Callable[[float, float], float]] = None

    def __post_init__(self) -> None:
        if self.kind in (GrowthKind.GILPIN_STRONG, GrowthKind.GILPIN_STRONG_SCALED):
            if self.r is None or self.k_minus is None or self.k_plus is None:
                raise ValueError(f"{self.kind.value} growth needs r, k_minus and k_plus")
        elif self.kind is GrowthKind.RATIONAL_WEAK:
            if self.r is None or self.k_plus is None or self.offset is None:
                raise ValueError("rational-weak growth needs r, k_plus and offset")
        elif self.kind is GrowthKind.CUSTOM:
            if self.fn is None:
                raise ValueError("custom growth needs a callable fn(t, N)")

    @property
    def is_strong(self) -> bool:
        """True when the growth rate is negative at zero density (strong Allee)."""
        if self.kind in (GrowthKind.GILPIN_STRONG, GrowthKind.GILPIN_STRONG_SCALED):
            return True
        if self.kind is GrowthKind.RATIONAL_WEAK:
            return False
        return self.rate(0.0, 0.0) < 0.0

    def rate(self, t: float, N: float) -> float:
        """Evaluate k(t, N)."""
        return _growth_compiled(self)[0](t, N)

    def rate_dN(self, t: float, N: float) -> float:
        """Evaluate the partial derivative of k with respect to N."""
        return _growth_compiled(self)[1](t, N)

    def zeros(self, t: float) -> tuple[Optional[float], float]:
        """Roots of k(t, .) on the positive axis: (K_minus or None, K_plus)."""
        if self.kind in (GrowthKind.GILPIN_STRONG, GrowthKind.GILPIN_STRONG_SCALED):
            return self.k_minus(t), self.k_plus(t)
        if self.kind is GrowthKind.RATIONAL_WEAK:
            return None, self.k_plus(t)
        return self._zeros_numeric(t)

    def _zeros_numeric(self, t: float) -> tuple[Optional[float], float]:
        """Locate positive roots of a custom rate by scanning and bisection."""
        from scipy.optimize import brentq

        k = _growth_compiled(self)[0]
        grid = np.linspace(0.0, 1.0, 401)
        # Expand the scan range until the rate is negative at the far end.
        hi = 1.0
        for _ in range(60):
            if k(t, hi) < 0.0:
                break
            hi *= 2.0
        else:
            raise ValueError("custom growth rate has no positive carrying capacity")
        grid = np.linspace(0.0, hi, 801)
        vals = np.array([k(t, x) for x in grid])
        roots = []
        for i in range(len(grid) - 1):
            if vals[i] == 0.0:
                roots.append(grid[i])
            elif vals[i] * vals[i + 1] < 0.0:
                roots.append(brentq(lambda x: k(t, x), grid[i], grid[i + 1], xtol=1e-13))
        roots = [x for x in roots if x > 0.0]
        if not roots:
            raise ValueError("custom growth rate has no positive root")
        if k(t, 0.0) < 0.0:
            if len(roots) < 2:
                raise ValueError("strong-Allee custom growth should have two positive roots")
            return roots[0], roots[-1]
        return None, roots[-1]

    def optimal_density(self, t: float) -> float:
        """Density xi(t) >= 0 where the per-capita rate k(t, .) peaks."""
        if self.kind in (GrowthKind.GILPIN_STRONG, GrowthKind.GILPIN_STRONG_SCALED):
            return 0.5 * (self.k_minus(t) + self.k_plus(t))
        if self.kind is GrowthKind.RATIONAL_WEAK:
            K = self.k_plus(t)
            m = self.offset(t)
            radicand = 1.0 + K - m * (1.0 + K)
            if radicand <= 1.0:
                return 0.0  # rate is monotone decreasing on [0, inf)
            return math.sqrt(radicand) - 1.0
        return self._optimal_density_numeric(t)

    def _optimal_density_numeric(self, t: float) -> float:
        from scipy.optimize import minimize_scalar

        k = _growth_compiled(self)[0]
        _, k_plus = self.zeros(t)
        grid = np.linspace(0.0, k_plus, 201)
        vals = np.array([k(t, x) for x in grid])
        i = int(np.argmax(vals))
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, len(grid) - 1)]
        if lo == hi:
            return lo
        res = minimize_scalar(lambda x: -k(t, x), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        return max(res.x, 0.0)


@lru_cache(maxsize=256)
def _growth_compiled(g: GrowthFunction):
    """Closure pair (rate, rate_dN) with all coefficients bound as locals."""
    if g.kind is GrowthKind.GILPIN_STRONG:
        r = g.r.compiled()
        km = g.k_minus.compiled()
        kp = g.k_plus.compiled()

        def rate(t, N):
            return r(t) * (N - km(t)) * (kp(t) - N)

        def rate_dN(t, N):
            return r(t) * (kp(t) + km(t) - 2.0 * N)

        return rate, rate_dN

    if g.kind is GrowthKind.GILPIN_STRONG_SCALED:
        r = g.r.compiled()
        km = g.k_minus.compiled()
        kp = g.k_plus.compiled()

        def rate(t, N):
            return r(t) * (N - km(t)) * (1.0 - N / kp(t))

        def rate_dN(t, N):
            return r(t) * (1.0 - (2.0 * N - km(t)) / kp(t))

        return rate, rate_dN

    if g.kind is GrowthKind.RATIONAL_WEAK:
        r = g.r.compiled()
        kp = g.k_plus.compiled()
        m = g.offset.compiled()

        def rate(t, N):
            return r(t) * (N + m(t)) * (kp(t) - N) / (1.0 + N)

        def rate_dN(t, N):
            K = kp(t)
            u = 1.0 + N
            return r(t) * ((1.0 + K - m(t) * (1.0 + K)) - u * u) / (u * u)

        return rate, rate_dN

    fn = g.fn
    if g.fn_dN is not None:
        return fn, g.fn_dN

    def rate_dN_fd(t, N):
        h = 1e-6 * max(1.0, abs(N))
        return (fn(t, N + h) - fn(t, N - h)) / (2.0 * h)

    return fn, rate_dN_fd


# ---------------------------------------------------------------------------
# Functional response f(t, N, P)
# ---------------------------------------------------------------------------

class ResponseKind(str, Enum):
    """Shape of the functional response of predation."""

    HOLLING_II = "holling-ii"                      # b(t) p(t) N / (1 + p(t) N)
    BEDDINGTON_DEANGELIS = "beddington-deangelis"  # b(t) N / (1 + h(t) N + p(t) P)
    CUSTOM = "custom"


@dataclass(frozen=True)
class FunctionalResponse:
    """Per-predator consumption rate f(t, N, P).

    Vanishes exactly at N = 0, increases with prey density and does not
    increase with predator density.  The slope f(t, N, P)/N at N -> 0 is the
    search efficiency; it is what the predator sees when prey is rare, so it
    controls invasion of prey-only regimes.
    """

    kind: ResponseKind
    b: Optional[SeasonalCoefficient] = None
    p: Optional[SeasonalCoefficient] = None
    h: Optional[SeasonalCoefficient] = None
    fn: Optional[Callable[[float, float, float], float]] = None
    fn_dN: Optional[Callable[[float, float, float], float]] = None
    fn_dP: Optional[Callable[[float, float, float], float]] = None

    def __post_init__(self) -> None:
        if self.kind is ResponseKind.HOLLING_II:
            if self.b is None or self.p is None:
                raise ValueError("holling-ii response needs b and p")
        elif self.kind is ResponseKind.BEDDINGTON_DEANGELIS:
            if self.b is None or self.h is None or self.p is None:
                raise ValueError("beddington-deangelis response needs b, h and p")
        elif self.kind is ResponseKind.CUSTOM:
            if self.fn is None:
                raise ValueError("custom response needs a callable fn(t, N, P)")

    def value(self, t: float, N: float, P: float) -> float:
        return _response_compiled(self)[0](t, N, P)

    def dN(self, t: float, N: float, P: float) -> float:
        return _response_compiled(self)[1](t, N, P)

    def dP(self, t: float, N: float, P: float) -> float:
        return _response_compiled(self)[2](t, N, P)

    def near_zero_slope(self, t: float, P: float) -> Optional[float]:
        """Limit of f(t, N, P)/N as N -> 0+, or None when not known analytically."""
        if self.kind is ResponseKind.HOLLING_II:
            return self.b(t) * self.p(t)
        if self.kind is ResponseKind.BEDDINGTON_DEANGELIS:
            return self.b(t) / (1.0 + self.p(t) * P)
        return None


@lru_cache(maxsize=256)
def _response_compiled(rsp: FunctionalResponse):
    """Closure triple (value, dN, dP) with all coefficients bound as locals."""
    if rsp.kind is ResponseKind.HOLLING_II:
        b = rsp.b.compiled()
        p = rsp.p.compiled()

        def value(t, N, P):
            pv = p(t)
            return b(t) * pv * N / (1.0 + pv * N)

        def dN(t, N, P):
            pv = p(t)
            den = 1.0 + pv * N
            return b(t) * pv / (den * den)

        def dP(t, N, P):
            return 0.0

        return value, dN, dP

    if rsp.kind is ResponseKind.BEDDINGTON_DEANGELIS:
        b = rsp.b.compiled()
        h = rsp.h.compiled()
        p = rsp.p.compiled()

        def value(t, N, P):
            return b(t) * N / (1.0 + h(t) * N + p(t) * P)

        def dN(t, N, P):
            den = 1.0 + h(t) * N + p(t) * P
            return b(t) * (1.0 + p(t) * P) / (den * den)

        def dP(t, N, P):
            den = 1.0 + h(t) * N + p(t) * P
            return -b(t) * N * p(t) / (den * den)

        return value, dN, dP

    fn = rsp.fn
    dN = rsp.fn_dN
    dP = rsp.fn_dP
    if dN is None:
        def dN(t, N, P):
            step = 1e-6 * max(1.0, abs(N))
            lo = max(N - step, 0.0)
            return (fn(t, N + step, P) - fn(t, lo, P)) / (N + step - lo)
    if dP is None:
        def dP(t, N, P):
            step = 1e-6 * max(1.0, abs(P))
            lo = max(P - step, 0.0)
            return (fn(t, N, P + step) - fn(t, N, lo)) / (P + step - lo)
    return fn, dN, dP


# ---------------------------------------------------------------------------
# Model system
# ---------------------------------------------------------------------------

class Family(str, Enum):
    """Predator equation family."""

    PREDATOR_PREY = "predator-prey"
    LESLIE_GOWER = "leslie-gower"
    LESLIE_GOWER_PM = "leslie-gower-pm"


@dataclass(frozen=True)
class ModelSystem:
    """A complete seasonally forced planar model.

    The predator-prey family uses gamma (conversion efficiency), delta1
    (linear predator mortality) and delta2 (quadratic predator mortality,
    may be identically zero).  The Leslie-Gower families use pred_growth
    (the logistic rate c2, or the rate a in the prey-dependent-capacity
    variant) and pred_refuge (the capacity offset c, or n).

    Instances are immutable; build variants with `dataclasses.replace`.
    """

    family: Family
    growth: GrowthFunction
    response: FunctionalResponse
    period: float = 365.0
    gamma: Optional[SeasonalCoefficient] = None
    delta1: Optional[SeasonalCoefficient] = None
    delta2: Optional[SeasonalCoefficient] = None
    pred_growth: Optional[SeasonalCoefficient] = None
    pred_refuge: Optional[SeasonalCoefficient] = None

    def __post_init__(self) -> None:
        if not self.period > 0.0:
            raise ValueError("period must be positive")
        if self.family is Family.PREDATOR_PREY:
            if self.gamma is None or self.delta1 is None:
                raise ValueError("predator-prey family needs gamma and delta1")
            if self.delta2 is None:
                object.__setattr__(self, "delta2", constant(0.0, self.period))
        else:
            if self.pred_growth is None or self.pred_refuge is None:
                raise ValueError("leslie-gower families need pred_growth and pred_refuge")
        for name, coef in self.coefficients():
            if coef.period != self.period and not coef.is_constant:
                raise ValueError(
                    f"coefficient {name} has period {coef.period}, model has {self.period}")

    def coefficients(self) -> list[tuple[str, SeasonalCoefficient]]:
        """All seasonal coefficients of the model, with dotted path names."""
        out = []
        for attr in ("r", "k_minus", "k_plus", "offset"):
            coef = getattr(self.growth, attr)
            if coef is not None:
                out.append((f"growth.{attr}", coef))
        for attr in ("b", "p", "h"):
            coef = getattr(self.response, attr)
            if coef is not None:
                out.append((f"response.{attr}", coef))
        for attr in ("gamma", "delta1", "delta2", "pred_growth", "pred_refuge"):
            coef = getattr(self, attr)
            if coef is not None:
                out.append((attr, coef))
        return out

    # -- vector field ------------------------------------------------------

    def rhs(self, t: float, state) -> np.ndarray:
        """Right-hand side (dN/dt, dP/dt) at time t."""
        dN, dP = _system_compiled(self)[0](t, state[0], state[1])
        return np.array([dN, dP])

    def jacobian(self, t: float, state) -> np.ndarray:
        """Jacobian of the right-hand side with respect to (N, P)."""
        j11, j12, j21, j22 = _system_compiled(self)[1](t, state[0], state[1])
        return np.array([[j11, j12], [j21, j22]])

    def rhs_compiled(self):
        """(t, N, P) -> (dN, dP) closure used by the integrator hot loop."""
        return _system_compiled(self)[0]

    def jacobian_compiled(self):
        """(t, N, P) -> (j11, j12, j21, j22) closure."""
        return _system_compiled(self)[1]

    def prey_axis_compiled(self):
        """Scalar prey-only flow: (rate(t, N), d rate/dN) with P = 0."""
        return _prey_axis_compiled(self)

    def pred_axis_compiled(self):
        """Scalar predator-only flow for Leslie-Gower families."""
        if self.family is Family.PREDATOR_PREY:
            raise ValueError("predator-only dynamics collapse for the predator-prey family")
        return _pred_axis_compiled(self)


@lru_cache(maxsize=256)
def _system_compiled(m: ModelSystem):
    k, kdN = _growth_compiled(m.growth)
    f, fdN, fdP = _response_compiled(m.response)

    if m.family is Family.PREDATOR_PREY:
        g = m.gamma.compiled()
        d1 = m.delta1.compiled()
        d2 = m.delta2.compiled()

        def rhs(t, N, P):
            fv = f(t, N, P)
            return k(t, N) * N - fv * P, (g(t) * fv - d1(t) - d2(t) * P) * P

        def jac(t, N, P):
            fv = f(t, N, P)
            fn = fdN(t, N, P)
            fp = fdP(t, N, P)
            gv = g(t)
            j11 = k(t, N) + N * kdN(t, N) - P * fn
            j12 = -fv - P * fp
            j21 = gv * P * fn
            j22 = gv * fv + gv * P * fp - d1(t) - 2.0 * d2(t) * P
            return j11, j12, j21, j22

        return rhs, jac

    pg = m.pred_growth.compiled()
    pr = m.pred_refuge.compiled()

    if m.family is Family.LESLIE_GOWER:

        def rhs(t, N, P):
            den = N + pr(t)
            if den <= 0.0:
                raise DomainError(f"predator capacity N + c(t) = {den} is not positive")
            return k(t, N) * N - f(t, N, P) * P, pg(t) * P * (1.0 - P / den)

        def jac(t, N, P):
            den = N + pr(t)
            if den <= 0.0:
                raise DomainError(f"predator capacity N + c(t) = {den} is not positive")
            fv = f(t, N, P)
            fn = fdN(t, N, P)
            fp = fdP(t, N, P)
            c2v = pg(t)
            j11 = k(t, N) + N * kdN(t, N) - P * fn
            j12 = -fv - P * fp
            j21 = c2v * P * P / (den * den)
            j22 = c2v * (1.0 - 2.0 * P / den)
            return j11, j12, j21, j22

        return rhs, jac

    def rhs(t, N, P):
        den = N + pr(t)
        if den <= 0.0:
            raise DomainError(f"predator capacity N + n(t) = {den} is not positive")
        return k(t, N) * N - f(t, N, P) * P, P * (pg(t) - P / den)

    def jac(t, N, P):
        den = N + pr(t)
        if den <= 0.0:
            raise DomainError(f"predator capacity N + n(t) = {den} is not positive")
        fv = f(t, N, P)
        fn = fdN(t, N, P)
        fp = fdP(t, N, P)
        j11 = k(t, N) + N * kdN(t, N) - P * fn
        j12 = -fv - P * fp
        j21 = P * P / (den * den)
        j22 = pg(t) - 2.0 * P / den
        return j11, j12, j21, j22

    return rhs, jac


@lru_cache(maxsize=256)
def _prey_axis_compiled(m: ModelSystem):
    k, kdN = _growth_compiled(m.growth)

    def rate(t, N):
        return k(t, N) * N

    def rate_dN(t, N):
        return k(t, N) + N * kdN(t, N)

    return rate, rate_dN


@lru_cache(maxsize=256)
def _pred_axis_compiled(m: ModelSystem):
    pg = m.pred_growth.compiled()
    pr = m.pred_refuge.compiled()

    if m.family is Family.LESLIE_GOWER:

        def rate(t, P):
            return pg(t) * P * (1.0 - P / pr(t))

        def rate_dP(t, P):
            return pg(t) * (1.0 - 2.0 * P / pr(t))

        return rate, rate_dP

    def rate(t, P):
        return P * (pg(t) - P / pr(t))

    def rate_dP(t, P):
        return pg(t) - 2.0 * P / pr(t)

    return rate, rate_dP


# ---------------------------------------------------------------------------
# Invariant region
# ---------------------------------------------------------------------------

@lru_cache(maxsize=256)
def _max_percapita_rate(m: ModelSystem, samples: int = 1000) -> float:
    """max over t of k(t, xi(t)): the best per-capita growth the prey ever sees."""
    ts = np.linspace(0.0, m.period, samples, endpoint=False)
    best = -math.inf
    for t in ts:
        xi = m.growth.optimal_density(t)
        best = max(best, m.growth.rate(t, xi))
    return best


@lru_cache(maxsize=256)
def _k_plus_max(m: ModelSystem) -> float:
    if m.growth.k_plus is not None:
        return m.growth.k_plus.hi
    return max(m.growth.zeros(t)[1]
               for t in np.linspace(0.0, m.period, 64, endpoint=False))


def invariant_box(m: ModelSystem, eps_rel: float = 0.01) -> tuple[float, float]:
    """Bounding rectangle (N_max, P_max) of the absorbing region.

    For the predator-prey family this is the rectangle enclosing the
    forward-invariant set {0 <= N <= N_max, N + P/gamma_max <= N_max * (1 +
    r_max/delta1_min)}.  For the Leslie-Gower families the predator bound
    comes from its logistic capacity evaluated at the prey bound.
    """
    n_max = _k_plus_max(m) * (1.0 + eps_rel)
    if m.family is Family.PREDATOR_PREY:
        if m.delta1.lo <= 0.0:
            raise ValueError("the absorbing region needs min over t of delta1 > 0")
        r_max = _max_percapita_rate(m)
        p_max = m.gamma.hi * n_max * (1.0 + max(r_max, 0.0) / m.delta1.lo)
        return n_max, p_max
    if m.family is Family.LESLIE_GOWER:
        return n_max, 1.1 * (n_max + m.pred_refuge.hi)
    return n_max, 1.1 * m.pred_growth.hi * (n_max + m.pred_refuge.hi)


def in_invariant_set(m: ModelSystem, state, eps_rel: float = 0.01,
                     slack: float = 0.0) -> bool:
    """Membership test for the forward-invariant absorbing set (predator-prey).

    The set is {0 <= N <= N_max, 0 <= P, N + P/gamma_max <= N_max * (1 +
    r_max/delta1_min)} with N_max = (1 + eps_rel) * max K_plus.  `slack`
    loosens every inequality by an absolute margin.
    """
    if m.family is not Family.PREDATOR_PREY:
        raise ValueError("the absorbing set in this form applies to the predator-prey family")
    if m.delta1.lo <= 0.0:
        raise ValueError("the absorbing region needs min over t of delta1 > 0")
    N, P = float(state[0]), float(state[1])
    n_max = _k_plus_max(m) * (1.0 + eps_rel)
    r_max = _max_percapita_rate(m)
    height = n_max * (1.0 + max(r_max, 0.0) / m.delta1.lo)
    return (-slack <= N <= n_max + slack
            and P >= -slack
            and N + P / m.gamma.hi <= height + slack)
