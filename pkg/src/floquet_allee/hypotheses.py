"""Numerical verification of the structural hypotheses behind the theory.

The persistence and extinction results for these models do not depend on
the particular formulas chosen for the prey growth rate k(t, N) and the
functional response f(t, N, P); they depend on a short list of structural
properties.  For the growth rate, weak-Allee shapes must be positive at
zero density, vanish at a single carrying capacity and have one interior
maximum (gw1-gw4), while strong-Allee shapes must be negative below a
survival threshold K_minus, positive between K_minus and K_plus, negative
above, again with one interior maximum (gs1-gs4).  For the response, f
must vanish exactly when prey is absent, be positive otherwise, be
monotone in each variable, and behave linearly in N near zero so the
slope f0(t, P) = lim f(t, N, P)/N exists (f1-f5).

`verify_hypotheses` checks every property on a sampled grid and returns a
report instead of raising, so a failing model can still be inspected.
Callers that require a valid model (regime classification, the command
line) raise `HypothesisFailure` carrying the report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .models import ModelSystem, invariant_box

__all__ = [
    "HypothesisCheck",
    "HypothesisReport",
    "HypothesisFailure",
    "verify_hypotheses",
]

# Convergence thresholds for the low-density slope extrapolation.
_F0_START = 1e-4
_F0_ABS_TOL = 1e-9
_F0_REL_TOL = 1e-6
# Quartering steps allowed when the Richardson extrapolants have not yet
# stabilized; 8 steps reach h ~ 1.5e-9, deep enough for any curvature scale
# a population model can carry while staying far above float cancellation.
_F0_REFINEMENTS = 8


@dataclass(frozen=True)
class HypothesisCheck:
    """Outcome of one structural hypothesis on the sampled grid."""

    name: str
    passed: bool
    detail: str
    warning: bool = False

    @property
    def status(self) -> str:
        if not self.passed:
            return "FAIL"
        return "WARN" if self.warning else "PASS"


@dataclass(frozen=True)
class HypothesisReport:
    """Collected hypothesis checks for one model."""

    family: str
    growth_kind: str
    response_kind: str
    grid_size: int
    checks: tuple[HypothesisCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> tuple[HypothesisCheck, ...]:
        return tuple(c for c in self.checks if not c.passed)

    @property
    def warnings(self) -> tuple[HypothesisCheck, ...]:
        return tuple(c for c in self.checks if c.passed and c.warning)

    def __iter__(self) -> Iterator[HypothesisCheck]:
        return iter(self.checks)

    def __getitem__(self, name: str) -> HypothesisCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def summary(self) -> str:
        head = (f"hypothesis report: family={self.family} growth={self.growth_kind} "
                f"response={self.response_kind} grid={self.grid_size}")
        lines = [head]
        for c in self.checks:
            lines.append(f"  [{c.status}] ({c.name}) {c.detail}")
        verdict = "all hypotheses hold" if self.passed else \
            "FAILED: " + ", ".join(c.name for c in self.failures)
        lines.append(f"  => {verdict}")
        return "\n".join(lines)


class HypothesisFailure(RuntimeError):
    """A model violated the structural hypotheses required by the caller."""

    def __init__(self, report: HypothesisReport):
        names = ", ".join(c.name for c in report.failures) or "unknown"
        super().__init__(f"structural hypotheses failed: {names}")
        self.report = report


def verify_hypotheses(m: ModelSystem, grid_size: int = 32) -> HypothesisReport:
    """Check the growth and response hypotheses on a sampled grid.

    Samples time over one period and state over the invariant box.  Strict
    inequalities are tested away from the known roots of the growth rate
    (within one grid spacing counts as "at the root").  Failures become
    report entries, never exceptions; only a malformed grid_size raises.
    """
    if grid_size < 16:
        raise ValueError(f"grid_size must be at least 16, got {grid_size}")

    n_max, p_max = invariant_box(m)
    ts = np.linspace(0.0, m.period, grid_size)
    ns = np.linspace(n_max / grid_size, n_max, grid_size)
    ps = np.linspace(0.0, p_max, grid_size)

    checks: list[HypothesisCheck] = []
    strong = m.growth.is_strong
    checks.extend(_check_growth_strong(m, ts, ns) if strong
                  else _check_growth_weak(m, ts, ns))
    checks.extend(_check_response(m, ts, ns, ps))

    return HypothesisReport(
        family=m.family.value,
        growth_kind=m.growth.kind.value,
        response_kind=m.response.kind.value,
        grid_size=grid_size,
        checks=tuple(checks),
    )


# ---------------------------------------------------------------------------
# Growth-rate hypotheses
# ---------------------------------------------------------------------------

def _growth_roots(m: ModelSystem, ts: np.ndarray):
    """Per-sample roots of k(t, .), or an error message when they fail to exist."""
    k_minus, k_plus = [], []
    for t in ts:
        try:
            lo, hi = m.growth.zeros(t)
        except ValueError as exc:
            return None, None, str(exc)
        k_minus.append(lo)
        k_plus.append(hi)
    return k_minus, k_plus, None


def _check_growth_weak(m: ModelSystem, ts: np.ndarray,
                       ns: np.ndarray) -> list[HypothesisCheck]:
    k = m.growth.rate
    k_minus, k_plus, err = _growth_roots(m, ts)

    # (gw1) a positive carrying capacity K_plus(t) exists for every t.
    if err is not None:
        checks = [HypothesisCheck("gw1", False, f"no carrying capacity: {err}")]
        checks.append(HypothesisCheck(
            "gw2", k(0.0, 0.0) > 0.0, f"k(0,0) = {k(0.0, 0.0):.6g}"))
        checks.extend(_skipped(("gw3", "gw4"), "skipped: no carrying capacity"))
        return checks
    kp = np.array(k_plus, dtype=float)
    residual = max(abs(k(t, K)) for t, K in zip(ts, kp))
    ok1 = bool(np.all(kp > 0.0)) and residual <= 1e-7 * _rate_scale(m, ts, ns)
    checks = [HypothesisCheck(
        "gw1", ok1,
        f"K_plus in [{kp.min():.6g}, {kp.max():.6g}], max |k(t, K_plus)| = {residual:.2g}")]
    if any(km is not None for km in k_minus):
        checks[0] = HypothesisCheck(
            "gw1", False, "growth rate has a second positive root: not a weak Allee shape")

    # (gw2) positive growth at zero density.
    k0 = np.array([k(t, 0.0) for t in ts])
    checks.append(HypothesisCheck(
        "gw2", bool(np.all(k0 > 0.0)), f"min over t of k(t, 0) = {k0.min():.6g}"))

    # (gw3) an optimal density xi(t) in [0, min K_plus] where dk/dN vanishes.
    # xi(t) = 0 (monotone-decreasing rate, the pure-logistic boundary case)
    # is allowed but flagged as a warning.
    checks.extend(_check_xi(m, ts, ns, lo=None, hi=float(kp.min()), prefix="gw"))
    return checks


def _check_growth_strong(m: ModelSystem, ts: np.ndarray,
                         ns: np.ndarray) -> list[HypothesisCheck]:
    k = m.growth.rate
    k_minus, k_plus, err = _growth_roots(m, ts)

    # (gs1) two positive roots with max K_minus strictly below min K_plus.
    if err is not None or any(km is None for km in (k_minus or [None])):
        msg = err or "growth rate has a single positive root: not a strong Allee shape"
        checks = [HypothesisCheck("gs1", False, f"roots missing: {msg}")]
        checks.append(HypothesisCheck(
            "gs2", k(0.0, 0.0) < 0.0, f"k(0,0) = {k(0.0, 0.0):.6g}"))
        checks.extend(_skipped(("gs3", "gs4"), "skipped: roots missing"))
        return checks
    km = np.array(k_minus, dtype=float)
    kp = np.array(k_plus, dtype=float)
    km_bar, kp_under = float(km.max()), float(kp.min())
    ok1 = bool(np.all(km > 0.0)) and bool(np.all(kp > 0.0)) and km_bar < kp_under
    checks = [HypothesisCheck(
        "gs1", ok1,
        f"K_minus in [{km.min():.6g}, {km_bar:.6g}], K_plus in "
        f"[{kp_under:.6g}, {kp.max():.6g}], need max K_minus < min K_plus")]

    # (gs2) k(t,0) < 0 and k(t,N)(N - K_minus)(K_plus - N) > 0 away from roots.
    k0 = np.array([k(t, 0.0) for t in ts])
    spacing = float(ns[1] - ns[0])
    bad = 0
    for t, lo, hi in zip(ts, km, kp):
        for N in ns:
            if min(abs(N - lo), abs(N - hi)) < spacing:
                continue
            if k(t, N) * (N - lo) * (hi - N) <= 0.0:
                bad += 1
    checks.append(HypothesisCheck(
        "gs2", bool(np.all(k0 < 0.0)) and bad == 0,
        f"max over t of k(t, 0) = {k0.max():.6g}, sign violations away from roots: {bad}"))

    # (gs3)/(gs4) optimal density strictly between the root bands.
    checks.extend(_check_xi(m, ts, ns, lo=km_bar, hi=kp_under, prefix="gs"))
    return checks


def _check_xi(m: ModelSystem, ts: np.ndarray, ns: np.ndarray,
              lo: Optional[float], hi: float, prefix: str) -> list[HypothesisCheck]:
    """(gw3)/(gs3): xi(t) exists in the required band; (gw4)/(gs4): dk/dN
    changes sign only at xi(t)."""
    kdN = m.growth.rate_dN
    xis = np.array([m.growth.optimal_density(t) for t in ts])
    scale = _rate_scale(m, ts, ns)
    stationary = max(abs(kdN(t, xi)) for t, xi in zip(ts, xis) if xi > 0.0) \
        if np.any(xis > 0.0) else 0.0

    if lo is None:  # weak: xi in [0, min K_plus]
        in_band = bool(np.all(xis >= 0.0)) and bool(np.all(xis <= hi + 1e-9))
        band = f"[0, {hi:.6g}]"
    else:  # strong: xi strictly inside (max K_minus, min K_plus)
        in_band = bool(np.all(xis > lo)) and bool(np.all(xis < hi))
        band = f"({lo:.6g}, {hi:.6g})"
    ok3 = in_band and stationary <= 1e-5 * (1.0 + scale)
    boundary = bool(np.any(xis == 0.0))
    detail3 = (f"xi in [{xis.min():.6g}, {xis.max():.6g}], band {band}, "
               f"max |dk/dN(t, xi)| = {stationary:.2g}")
    if boundary and prefix == "gw":
        detail3 += "; xi(t) = 0 for some t: rate is monotone decreasing (boundary case)"
    checks = [HypothesisCheck(f"{prefix}3", ok3, detail3,
                              warning=boundary and prefix == "gw")]

    spacing = float(ns[1] - ns[0])
    bad = 0
    for t, xi in zip(ts, xis):
        for N in ns:
            if abs(N - xi) < spacing:
                continue
            if kdN(t, N) * (N - xi) >= 0.0:
                bad += 1
    checks.append(HypothesisCheck(
        f"{prefix}4", bad == 0,
        f"sign violations of dk/dN * (N - xi) < 0 away from xi: {bad}"))
    return checks


def _rate_scale(m: ModelSystem, ts: np.ndarray, ns: np.ndarray) -> float:
    k = m.growth.rate
    sample = [abs(k(t, N)) for t in ts[:: max(len(ts) // 8, 1)]
              for N in ns[:: max(len(ns) // 8, 1)]]
    return max(sample) if sample else 1.0


def _skipped(names, detail: str) -> list[HypothesisCheck]:
    return [HypothesisCheck(name, False, detail) for name in names]


# ---------------------------------------------------------------------------
# Functional-response hypotheses
# ---------------------------------------------------------------------------

def _check_response(m: ModelSystem, ts: np.ndarray, ns: np.ndarray,
                    ps: np.ndarray) -> list[HypothesisCheck]:
    f = m.response.value
    checks = []

    # (f1) no predation without prey, exactly.
    worst = max(abs(f(t, 0.0, P)) for t in ts for P in ps)
    checks.append(HypothesisCheck(
        "f1", worst == 0.0, f"max |f(t, 0, P)| = {worst:.3g} (must be exactly 0)"))

    # Tabulate f over the grid once; (f2)-(f4) read the table.
    F = np.empty((len(ts), len(ns), len(ps)))
    for i, t in enumerate(ts):
        for j, N in enumerate(ns):
            for l, P in enumerate(ps):
                F[i, j, l] = f(t, N, P)

    fmin = float(F.min())
    checks.append(HypothesisCheck(
        "f2", fmin > 0.0, f"min over grid of f(t, N, P) = {fmin:.6g} at N > 0"))

    slack = 1e-12 * (1.0 + float(np.abs(F).max()))
    dP = np.diff(F, axis=2)
    bad_p = int(np.count_nonzero(dP > slack))
    checks.append(HypothesisCheck(
        "f3", bad_p == 0,
        f"increases along P at {bad_p} grid edges (must be non-increasing)"))

    dN = np.diff(F, axis=1)
    bad_n = int(np.count_nonzero(dN < -slack))
    checks.append(HypothesisCheck(
        "f4", bad_n == 0,
        f"decreases along N at {bad_n} grid edges (must be non-decreasing)"))

    checks.append(_check_low_density_slope(m, ts, ps))
    return checks


def _check_low_density_slope(m: ModelSystem, ts: np.ndarray,
                             ps: np.ndarray) -> HypothesisCheck:
    """(f5) the slope f0(t, P) = lim f(t, N, P)/N exists.

    The quotient f/N is sampled at three halving densities and extrapolated
    with one Richardson step, which removes the O(N) term.  The probe scale
    is refined until the two extrapolants agree (a sharply saturating
    response needs probes below its own curvature scale), so the check only
    fails when the quotient never stabilizes or the limit is negative.
    """
    f = m.response.value
    worst = 0.0
    f0_lo, f0_hi = math.inf, -math.inf
    ok = True
    for t in ts:
        for P in ps:
            h1 = _F0_START
            disc, r2 = math.inf, math.nan
            for _ in range(_F0_REFINEMENTS):
                q1 = f(t, h1, P) / h1
                q2 = f(t, 0.5 * h1, P) / (0.5 * h1)
                q3 = f(t, 0.25 * h1, P) / (0.25 * h1)
                r1 = 2.0 * q2 - q1
                r2 = 2.0 * q3 - q2
                disc = abs(r2 - r1)
                if (math.isfinite(r2)
                        and disc <= max(_F0_ABS_TOL,
                                        _F0_REL_TOL * max(1.0, abs(r2)))):
                    break
                h1 *= 0.25
            else:
                ok = False
            worst = max(worst, disc / max(1.0, abs(r2)) if math.isfinite(r2)
                        else math.inf)
            if not math.isfinite(r2) or r2 < -_F0_ABS_TOL:
                ok = False
            f0_lo = min(f0_lo, r2)
            f0_hi = max(f0_hi, r2)
    return HypothesisCheck(
        "f5", ok,
        f"f0 estimated in [{f0_lo:.6g}, {f0_hi:.6g}], "
        f"worst Richardson disagreement = {worst:.2g} relative")
