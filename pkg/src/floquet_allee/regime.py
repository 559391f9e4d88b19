"""Regime classification and bifurcation thresholds.

The long-run fate of the seasonal models is decided by a handful of
scalar quantities evaluated along the boundary periodic orbits:

* the basic reproduction number R0 of the predator at the prey-only
  orbit (weak Allee effect): R0 > 1 means the predator invades and both
  populations persist, R0 < 1 means the predator dies out;
* the four boundary multipliers lambda1/lambda2 at the two prey-only
  orbits N*_- and N*_+ (strong Allee effect), whose positions relative
  to 1 split the dynamics into case A (predator extinction), case B (at
  least one positive T-periodic orbit) and case C (no verdict from the
  theory; predator extinction conjectured);
* the instability integral alpha of an interior orbit, whose exponential
  equals the product of its Floquet multipliers (Liouville identity).

Every multiplier is evaluated twice, by an exponential-integral formula
quadratured along the boundary orbit and by the monodromy matrix of the
variational equations, and the two must agree to 1e-6 in log space.

`sweep_parameter` walks one scalar coefficient field across a range,
reclassifies at every sample and brackets each crossing of a decision
quantity through its critical value by bisection on the parameter.
Boundary orbits are cached per growth function, so sweeps over predation
or mortality coefficients reuse the prey-only orbits across all samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad

from .hypotheses import HypothesisFailure, HypothesisReport, verify_hypotheses
from .integrate import (
    DEFAULT_SETTINGS,
    IntegrationError,
    IntegratorSettings,
    integrate,
    integrate_pred_axis,
    integrate_prey_axis,
)
from .models import (
    DomainError,
    Family,
    GrowthKind,
    ModelSystem,
    ResponseKind,
    _max_percapita_rate,
)
from .orbits import (
    IndexLedger,
    OrbitError,
    PeriodicOrbit,
    ScalarOrbit,
    _continuation_orbits,
    _exp_guard,
    _PREY_DEP_TOL,
    embed_on_prey_axis,
    grid_search_orbits,
    index_ledger,
    mean_low_density_growth,
    predator_only_orbit_lg,
    prey_only_orbit_weak,
    prey_only_orbits_strong,
)

__all__ = [
    "AlleeKind",
    "CaseLabel",
    "MultiplierMismatch",
    "ResponseNotPreyDependentAtAxis",
    "InteriorOrbitReport",
    "RegimeReport",
    "LGBoundaryReport",
    "SweepSample",
    "SweepResult",
    "compute_R0",
    "compute_boundary_multipliers",
    "classify_regime",
    "compute_alpha",
    "lg_boundary_analysis",
    "sweep_parameter",
    "get_parameter",
    "with_parameter",
    "peak_growth_rate",
    "write_sweep_csv",
]


# Adaptive quadrature tolerance for the decision integrals, log-space
# agreement demanded between formula and monodromy multipliers, agreement
# between the two algebraic forms of alpha, and the parameter tolerance of
# threshold bisection.
_QUAD_TOL = 1e-10
_FORMULA_TOL = 1e-6
_ALPHA_FORM_TOL = 1e-8
_BISECT_TOL = 1e-3


class MultiplierMismatch(OrbitError):
    """Two independent evaluations of the same multiplier disagree."""


class ResponseNotPreyDependentAtAxis(OrbitError):
    """df/dP does not vanish at N = 0: triangular formulas do not apply."""


class AlleeKind(str, Enum):
    WEAK = "weak"
    STRONG = "strong"


class CaseLabel(str, Enum):
    A = "A"
    B = "B"
    C = "C"


# ---------------------------------------------------------------------------
# Quadrature helpers
# ---------------------------------------------------------------------------

def _quad_span(g: Callable[[float], float], span: float) -> float:
    val, _ = quad(g, 0.0, span, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=400)
    return val


def _quad_interval(g: Callable[[float], float], a: float, b: float) -> float:
    val, _ = quad(g, a, b, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=400)
    return val


def _check_formula(name: str, q_formula: float, q_monodromy: float) -> None:
    # Multipliers are exponentials, so relative agreement between them is
    # absolute agreement between their logs.
    if abs(q_formula - q_monodromy) > _FORMULA_TOL:
        raise MultiplierMismatch(
            f"{name}: integral formula gives exp({q_formula:.12g}), the "
            f"monodromy matrix exp({q_monodromy:.12g}); log difference "
            f"{abs(q_formula - q_monodromy):.3g} exceeds {_FORMULA_TOL:g}")


def peak_growth_rate(m: ModelSystem) -> float:
    """Largest per-capita prey growth rate ever available.

    max over t of k(t, xi(t)) with xi the maximizing density, evaluated on
    a 1000-point time grid; this is the rate constant in the predator bound
    of the absorbing box.
    """
    return _max_percapita_rate(m)


# ---------------------------------------------------------------------------
# Decision quantities: R0, boundary multipliers, alpha
# ---------------------------------------------------------------------------

def compute_R0(m: ModelSystem, settings: IntegratorSettings = DEFAULT_SETTINGS,
               orbit: Optional[ScalarOrbit] = None) -> float:
    """Predator reproduction number at the prey-only orbit (weak effect).

    The ratio of the predator's mean production to its mean mortality over
    one period, both quadratured along the globally stable prey-only orbit:
    R0 > 1 predicts invasion and persistence of both populations, R0 < 1
    predicts predator extinction.
    """
    if m.family is not Family.PREDATOR_PREY:
        raise ValueError("R0 is defined for the predator-prey family")
    if m.growth.is_strong:
        raise ValueError("R0 needs a weak-Allee growth rate (one prey-only orbit)")
    if orbit is None:
        orbit = prey_only_orbit_weak(m, settings=settings)
    gam, f = m.gamma, m.response.value
    production = _quad_span(lambda t: gam(t) * f(t, orbit(t), 0.0), m.period)
    mortality = _quad_span(lambda t: m.delta1(t), m.period)
    return production / mortality


@dataclass(frozen=True)
class _StrongBoundary:
    """Prey-only orbit pair with cross-checked log multipliers."""

    minus: PeriodicOrbit
    plus: PeriodicOrbit
    logs: tuple[float, float, float, float]  # q1-, q1+, q2-, q2+


def _prey_axis_formula_logs(m: ModelSystem, nodes: Sequence[float],
                            settings: IntegratorSettings) -> tuple[float, float]:
    """Log multipliers of a prey-only orbit from the integral formulas.

    lambda1 integrates the derivative of the per-capita balance (the k term
    itself integrates to zero along a periodic orbit), lambda2 the predator's
    invasion balance gamma*f - delta1 evaluated at zero predator density.
    `nodes` holds the orbit's densities at uniform section times; each
    segment is re-integrated from its own node, so the formulas stay usable
    for orbits too unstable to track from a single start value.
    """
    nodes = np.asarray(nodes, dtype=float)
    edges = np.linspace(0.0, m.period, len(nodes) + 1)
    q1 = 0.0
    q2 = 0.0
    for i in range(len(nodes)):
        run = integrate_prey_axis(m, float(nodes[i]), edges[i], edges[i + 1],
                                  settings, dense=True)
        sol = run.solution

        def N(t: float) -> float:
            return float(sol.at(t)[0])

        q1 += _quad_interval(lambda t: m.growth.rate_dN(t, N(t)) * N(t),
                             edges[i], edges[i + 1])
        q2 += _quad_interval(
            lambda t: m.gamma(t) * m.response.value(t, N(t), 0.0) - m.delta1(t),
            edges[i], edges[i + 1])
    return q1, q2


def _orbit_nodes(orb: PeriodicOrbit) -> np.ndarray:
    if orb.nodes is not None:
        return orb.nodes
    return np.array([float(orb.initial_state[0])])


def _strong_boundary(m: ModelSystem,
                     settings: IntegratorSettings) -> _StrongBoundary:
    minus, plus = prey_only_orbits_strong(m, settings=settings)
    logs = []
    for tag, orb in (("N*_-", minus), ("N*_+", plus)):
        q1f, q2f = _prey_axis_formula_logs(m, _orbit_nodes(orb), settings)
        q1v, q2v = orb.log_multipliers
        _check_formula(f"lambda1 at {tag}", q1f, q1v)
        _check_formula(f"lambda2 at {tag}", q2f, q2v)
        logs.append((q1f, q2f))
    (q1m, q2m), (q1p, q2p) = logs
    return _StrongBoundary(minus=minus, plus=plus, logs=(q1m, q1p, q2m, q2p))


def compute_boundary_multipliers(
        m: ModelSystem, settings: IntegratorSettings = DEFAULT_SETTINGS
) -> tuple[float, float, float, float]:
    """(lambda1-, lambda1+, lambda2-, lambda2+) at the prey-only orbits.

    Strong-Allee models only.  Each multiplier is the exponential of an
    integral along the corresponding orbit, cross-checked against the
    monodromy eigenvalues to 1e-6 in log space; lambda1- > 1 > lambda1+
    always, and the position of lambda2-+ relative to 1 decides the regime.
    """
    if not m.growth.is_strong:
        raise ValueError("boundary multiplier pair needs a strong-Allee growth "
                         "rate; weak models have a single prey-only orbit")
    bd = _strong_boundary(m, settings)
    return tuple(_exp_guard(q) for q in bd.logs)


def compute_alpha(m: ModelSystem, orbit: PeriodicOrbit,
                  settings: IntegratorSettings = DEFAULT_SETTINGS) -> float:
    """Instability integral of a positive interior orbit.

    Quadrature of the trace of the Jacobian along the orbit, reduced by
    the orbit identities (the per-capita balances integrate to zero over a
    period), so exp(alpha) equals the product of the Floquet multipliers.
    alpha > 0 forces instability.  For the quadratic growth rate with a
    saturating prey-only response the reduced integrand collapses to a
    polynomial form, which is evaluated as well and must agree with the
    general form within 1e-8; the Liouville identity against the orbit's
    determinant is verified within 1e-6.
    """
    if orbit.location != "interior":
        raise ValueError("alpha is defined for positive interior orbits")
    span = orbit.period_multiple * m.period
    sol = integrate(m, orbit.initial_state, 0.0, span, settings, dense=True)

    kN = m.growth.rate_dN
    f, fN, fP = m.response.value, m.response.dN, m.response.dP

    def prey_part(t: float, N: float, P: float) -> float:
        return kN(t, N) * N - fN(t, N, P) * P + f(t, N, P) * P / N

    if m.family is Family.PREDATOR_PREY:
        gam, d2 = m.gamma, m.delta2

        def integrand(t: float) -> float:
            N, P = sol.at(t)
            return prey_part(t, N, P) + gam(t) * fP(t, N, P) * P - d2(t) * P
    elif m.family is Family.LESLIE_GOWER:
        c2, cref = m.pred_growth, m.pred_refuge

        # Reduced predator term: the trace contributes c2 - 2*c2*P/(N+c),
        # and the orbit identity int c2*(1 - P/(N+c)) dt = 0 removes one
        # c2*P/(N+c) share, leaving a single one with a minus sign.
        def integrand(t: float) -> float:
            N, P = sol.at(t)
            return prey_part(t, N, P) - c2(t) * P / (N + cref(t))
    else:
        nref = m.pred_refuge

        def integrand(t: float) -> float:
            N, P = sol.at(t)
            return prey_part(t, N, P) - P / (N + nref(t))

    alpha = _quad_span(integrand, span)

    if (m.family is Family.PREDATOR_PREY
            and m.growth.kind is GrowthKind.GILPIN_STRONG
            and m.response.kind is ResponseKind.HOLLING_II):
        r, km, kp = m.growth.r, m.growth.k_minus, m.growth.k_plus
        b, p, d2 = m.response.b, m.response.p, m.delta2

        def special(t: float) -> float:
            N, P = sol.at(t)
            den = 1.0 + p(t) * N
            return (r(t) * (kp(t) + km(t) - 2.0 * N) * N
                    + b(t) * p(t) ** 2 * N * P / (den * den) - d2(t) * P)

        alpha_special = _quad_span(special, span)
        if abs(alpha_special - alpha) > _ALPHA_FORM_TOL:
            raise MultiplierMismatch(
                f"alpha forms disagree: general {alpha:.12g}, quadratic-growth "
                f"form {alpha_special:.12g}")
        alpha = alpha_special

    # Liouville: exp(alpha) must be the determinant of the monodromy matrix.
    if abs(alpha - orbit.log_det) > _FORMULA_TOL:
        raise MultiplierMismatch(
            f"exp(alpha) = exp({alpha:.12g}) does not match the monodromy "
            f"determinant exp({orbit.log_det:.12g}) within {_FORMULA_TOL:g}")
    return alpha


# ---------------------------------------------------------------------------
# Regime report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InteriorOrbitReport:
    """An interior orbit together with its instability integral."""

    orbit: PeriodicOrbit
    alpha: float


@dataclass(frozen=True)
class RegimeReport:
    """Classification of one model: decision quantities, orbits, ledger.

    For a weak Allee effect the single prey-only orbit fills the `plus`
    multiplier slots and the `minus` slots are NaN; R0 carries the verdict.
    For a strong effect the case label follows the boundary multipliers:
    A when lambda2+ < 1, B when lambda2- < 1 < lambda2+, C when
    lambda2- >= 1 (no verdict; `conjecture` states the expected outcome).
    """

    allee_kind: AlleeKind
    lambda1_minus: float
    lambda1_plus: float
    lambda2_minus: float
    lambda2_plus: float
    nu_star: float
    verdict: str
    R0: Optional[float] = None
    case_label: Optional[CaseLabel] = None
    conjecture: Optional[str] = None
    interior_orbits: tuple[InteriorOrbitReport, ...] = ()
    ledger: Optional[IndexLedger] = None
    hypothesis_report: Optional[HypothesisReport] = None

    def __post_init__(self) -> None:
        if self.allee_kind is AlleeKind.STRONG:
            if not self.lambda2_minus < self.lambda2_plus:
                raise ValueError(
                    f"strong case requires lambda2- < lambda2+, got "
                    f"{self.lambda2_minus:.8g} and {self.lambda2_plus:.8g}")
            expected = (CaseLabel.A if self.lambda2_plus < 1.0 else
                        CaseLabel.B if self.lambda2_minus < 1.0 else
                        CaseLabel.C)
            if self.case_label is not expected:
                raise ValueError(
                    f"case label {self.case_label} inconsistent with "
                    f"multipliers (expected {expected})")
        elif self.case_label is not None:
            raise ValueError("case labels apply to the strong effect only")

    def summary(self) -> str:
        lines = [f"regime report: allee={self.allee_kind.value}"]
        lines.append(f"  nu* (mean growth rate at zero density) = "
                     f"{self.nu_star:.6g}")
        if self.R0 is not None:
            lines.append(f"  R0 = {self.R0:.6g}")
        if not math.isnan(self.lambda1_minus):
            lines.append(f"  lambda1- = {self.lambda1_minus:<12.6g} "
                         f"lambda2- = {self.lambda2_minus:.6g}")
        lines.append(f"  lambda1+ = {self.lambda1_plus:<12.6g} "
                     f"lambda2+ = {self.lambda2_plus:.6g}")
        if self.case_label is not None:
            lines.append(f"  case {self.case_label.value}")
        lines.append(f"  verdict: {self.verdict}")
        if self.conjecture:
            lines.append(f"  conjecture: {self.conjecture}")
        if self.interior_orbits:
            lines.append(f"  interior orbits ({len(self.interior_orbits)}):")
            for rep in self.interior_orbits:
                lines.append(f"    {rep.orbit}  alpha = {rep.alpha:.6g}")
        else:
            lines.append("  interior orbits: none found")
        if self.ledger is not None:
            lines.extend("  " + ln for ln in self.ledger.summary().splitlines())
        return "\n".join(lines)

    def as_dict(self) -> dict:
        """JSON-ready document (NaN and infinities become strings)."""

        def num(x):
            if x is None:
                return None
            x = float(x)
            return x if math.isfinite(x) else repr(x)

        def orbit_doc(o: PeriodicOrbit) -> dict:
            return {
                "initial_state": [num(o.initial_state[0]),
                                  num(o.initial_state[1])],
                "period_multiple": o.period_multiple,
                "multipliers": [[num(l.real), num(l.imag)]
                                for l in o.multipliers],
                "stability": o.stability.value,
                "residual": num(o.residual),
                "location": o.location,
            }

        doc = {
            "allee_kind": self.allee_kind.value,
            "R0": num(self.R0),
            "lambda1_minus": num(self.lambda1_minus),
            "lambda1_plus": num(self.lambda1_plus),
            "lambda2_minus": num(self.lambda2_minus),
            "lambda2_plus": num(self.lambda2_plus),
            "nu_star": num(self.nu_star),
            "case_label": self.case_label.value if self.case_label else None,
            "verdict": self.verdict,
            "conjecture": self.conjecture,
            "interior_orbits": [
                {**orbit_doc(rep.orbit), "alpha": num(rep.alpha)}
                for rep in self.interior_orbits],
        }
        if self.ledger is not None:
            doc["ledger"] = {
                "entries": [
                    {"location": e.location,
                     "initial_state": [num(e.orbit.initial_state[0]),
                                       num(e.orbit.initial_state[1])],
                     "index": e.index,
                     "multiplicity": e.multiplicity}
                    for e in self.ledger.entries],
                "total": self.ledger.total,
                "consistent": self.ledger.consistent,
                "notes": self.ledger.notes,
            }
        if self.hypothesis_report is not None:
            doc["hypotheses"] = {
                "passed": self.hypothesis_report.passed,
                "grid_size": self.hypothesis_report.grid_size,
                "warnings": [c.name for c in self.hypothesis_report.warnings],
            }
        return doc


def _interior_orbits(m: ModelSystem, settings: IntegratorSettings,
                     grid: Optional[tuple[int, int]],
                     expect_orbit: bool) -> list[PeriodicOrbit]:
    """Interior orbit census for the classifier.

    Default path: Newton from the autonomous-equilibrium seeds (with
    multiple shooting and amplitude continuation as fallbacks).  When the
    theory guarantees an orbit and the fast path found none, a coarse grid
    search runs before concluding; an explicit grid forces the full search.
    """
    if grid is not None:
        found = grid_search_orbits(m, grid=grid, settings=settings)
    else:
        found = _continuation_orbits(m, 1, 1e-9, settings)
        if not found and expect_orbit:
            found = grid_search_orbits(m, grid=(8, 8), settings=settings,
                                       continuation=False)
    return [o for o in found if o.location == "interior"]


def classify_regime(m: ModelSystem,
                    settings: IntegratorSettings = DEFAULT_SETTINGS,
                    grid: Optional[tuple[int, int]] = None,
                    grid_size: int = 32) -> RegimeReport:
    """Full regime classification of a predator-prey model.

    Verifies the structural hypotheses first (raising HypothesisFailure on
    violation), then computes the decision quantities along the boundary
    orbits, searches for interior orbits, evaluates alpha on each, and
    assembles the fixed-point index ledger.  `grid` forces a full
    grid-seeded orbit search; by default only the equilibrium-continuation
    seeds run, plus a coarse grid when a positive orbit is guaranteed but
    was not found.
    """
    if m.family is not Family.PREDATOR_PREY:
        raise ValueError("regime classification covers the predator-prey "
                         "family; use lg_boundary_analysis for the "
                         "Leslie-Gower forms")
    hyp = verify_hypotheses(m, grid_size=grid_size)
    if not hyp.passed:
        raise HypothesisFailure(hyp)
    nu_star = mean_low_density_growth(m)
    origin = embed_on_prey_axis(m, 0.0, settings)

    if m.growth.is_strong:
        return _classify_strong(m, settings, grid, hyp, nu_star, origin)
    return _classify_weak(m, settings, grid, hyp, nu_star, origin)


def _classify_strong(m: ModelSystem, settings: IntegratorSettings,
                     grid: Optional[tuple[int, int]], hyp: HypothesisReport,
                     nu_star: float, origin: PeriodicOrbit) -> RegimeReport:
    bd = _strong_boundary(m, settings)
    q1m, q1p, q2m, q2p = bd.logs

    conjecture = None
    if q2p < 0.0:
        label = CaseLabel.A
        verdict = ("case A: predators die out from every initial state; the "
                   "attractors are the origin and the prey-only orbit N*_+")
    elif q2m < 0.0:
        label = CaseLabel.B
        verdict = ("case B: predators invade the prey-only orbit N*_+ and at "
                   "least one positive T-periodic orbit exists")
    else:
        label = CaseLabel.C
        verdict = ("case C: both prey-only orbits repel predators sideways "
                   "(lambda2- > 1); the theory gives no verdict")
        conjecture = ("predator extinction is conjectured to be the only "
                      "outcome (numerically supported, not proved)")

    interior = _interior_orbits(m, settings, grid,
                                expect_orbit=label is CaseLabel.B)
    reports = tuple(InteriorOrbitReport(orbit=o, alpha=compute_alpha(
        m, o, settings)) for o in interior)
    ledger = index_ledger(m, [origin, bd.minus, bd.plus, *interior])
    return RegimeReport(
        allee_kind=AlleeKind.STRONG,
        lambda1_minus=_exp_guard(q1m), lambda1_plus=_exp_guard(q1p),
        lambda2_minus=_exp_guard(q2m), lambda2_plus=_exp_guard(q2p),
        nu_star=nu_star, verdict=verdict, case_label=label,
        conjecture=conjecture, interior_orbits=reports, ledger=ledger,
        hypothesis_report=hyp)


def _classify_weak(m: ModelSystem, settings: IntegratorSettings,
                   grid: Optional[tuple[int, int]], hyp: HypothesisReport,
                   nu_star: float, origin: PeriodicOrbit) -> RegimeReport:
    worbit = prey_only_orbit_weak(m, settings=settings)
    embedded = embed_on_prey_axis(m, worbit.value0, settings)
    q1f, q2f = _prey_axis_formula_logs(m, [worbit.value0], settings)
    q1v, q2v = embedded.log_multipliers
    _check_formula("lambda1 at N*", q1f, q1v)
    _check_formula("lambda2 at N*", q2f, q2v)

    r0 = compute_R0(m, settings=settings, orbit=worbit)
    if r0 > 1.0:
        verdict = (f"R0 = {r0:.6g} > 1: predators invade the prey-only orbit; "
                   "both populations persist and a positive periodic orbit "
                   "exists")
    else:
        verdict = (f"R0 = {r0:.6g} < 1: predators die out; the prey settles "
                   "on its prey-only orbit")

    interior = _interior_orbits(m, settings, grid, expect_orbit=r0 > 1.0)
    reports = tuple(InteriorOrbitReport(orbit=o, alpha=compute_alpha(
        m, o, settings)) for o in interior)
    ledger = index_ledger(m, [origin, embedded, *interior])
    return RegimeReport(
        allee_kind=AlleeKind.WEAK,
        lambda1_minus=math.nan, lambda1_plus=_exp_guard(q1f),
        lambda2_minus=math.nan, lambda2_plus=_exp_guard(q2f),
        nu_star=nu_star, verdict=verdict, R0=r0,
        interior_orbits=reports, ledger=ledger, hypothesis_report=hyp)


# ---------------------------------------------------------------------------
# Leslie-Gower boundary analysis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LGBoundaryReport:
    """Multipliers of all boundary orbits of a Leslie-Gower model.

    lambda2_axis is the predator's transversal multiplier at the prey-only
    orbits (identical for both, always above 1: the predator can invade any
    prey-only state).  lambda1/lambda2_predator_only describe the
    prey-extinct orbit (0, P0*); with a strong Allee effect and a response
    that loses its predator dependence at N = 0 it is linearly stable.
    """

    origin: PeriodicOrbit
    prey_minus: Optional[PeriodicOrbit]
    prey_plus: PeriodicOrbit
    predator_only: PeriodicOrbit
    lambda2_axis: float
    lambda1_predator_only: float
    lambda2_predator_only: float
    prey_dependent_at_axis: bool
    notes: tuple[str, ...]

    def summary(self) -> str:
        lines = ["boundary analysis (Leslie-Gower family)"]
        lines.append(f"  origin: {self.origin}")
        if self.prey_minus is not None:
            lines.append(f"  prey-only N*_-: {self.prey_minus}")
        lines.append(f"  prey-only N*_+: {self.prey_plus}")
        lines.append(f"  lambda2 across the prey axis = "
                     f"{self.lambda2_axis:.6g}")
        lines.append(f"  prey-extinct orbit: {self.predator_only}")
        lines.append(f"    lambda1 = {self.lambda1_predator_only:.6g}  "
                     f"lambda2 = {self.lambda2_predator_only:.6g}")
        for note in self.notes:
            lines.append(f"  note: {note}")
        return "\n".join(lines)

    def as_dict(self) -> dict:
        """JSON-ready document (NaN and infinities become strings)."""

        def num(x):
            x = float(x)
            return x if math.isfinite(x) else repr(x)

        def orbit_doc(o: Optional[PeriodicOrbit]) -> Optional[dict]:
            if o is None:
                return None
            return {
                "initial_state": [num(o.initial_state[0]),
                                  num(o.initial_state[1])],
                "period_multiple": o.period_multiple,
                "multipliers": [[num(l.real), num(l.imag)]
                                for l in o.multipliers],
                "stability": o.stability.value,
                "residual": num(o.residual),
                "location": o.location,
            }

        return {
            "origin": orbit_doc(self.origin),
            "prey_minus": orbit_doc(self.prey_minus),
            "prey_plus": orbit_doc(self.prey_plus),
            "predator_only": orbit_doc(self.predator_only),
            "lambda2_axis": num(self.lambda2_axis),
            "lambda1_predator_only": num(self.lambda1_predator_only),
            "lambda2_predator_only": num(self.lambda2_predator_only),
            "prey_dependent_at_axis": self.prey_dependent_at_axis,
            "notes": list(self.notes),
        }


def lg_boundary_analysis(m: ModelSystem,
                         settings: IntegratorSettings = DEFAULT_SETTINGS,
                         strict: bool = False) -> LGBoundaryReport:
    """Boundary orbits and multipliers of a Leslie-Gower model.

    Computes the origin (a saddle: the predator grows on its refuge), the
    prey-only orbits with their common transversal multiplier
    exp(int pred_growth) > 1, and the prey-extinct orbit (0, P0*) with its
    triangular multiplier formulas.  The formulas require the response to
    lose its predator dependence on the predator axis (df/dP(t,0,P) = 0);
    when that fails the multipliers fall back to the monodromy eigenvalues
    and the report says so, or ResponseNotPreyDependentAtAxis is raised
    when strict=True.
    """
    if m.family is Family.PREDATOR_PREY:
        raise ValueError("the predator axis is invariant only for the "
                         "Leslie-Gower families")
    notes: list[str] = []

    origin = embed_on_prey_axis(m, 0.0, settings)
    q2_axis = _quad_span(lambda t: m.pred_growth(t), m.period)
    lambda2_axis = _exp_guard(q2_axis)
    _check_formula("lambda2 at the origin", q2_axis, origin.log_multipliers[1])
    notes.append(f"origin multipliers ({abs(origin.multipliers[0]):.6g}, "
                 f"{abs(origin.multipliers[1]):.6g}): "
                 f"{'saddle' if lambda2_axis > 1.0 else 'degenerate'}")

    if m.growth.is_strong:
        prey_minus, prey_plus = prey_only_orbits_strong(m, settings=settings)
    else:
        prey_minus = None
        prey_plus = embed_on_prey_axis(
            m, prey_only_orbit_weak(m, settings=settings).value0, settings)
    for orb in filter(None, (prey_minus, prey_plus)):
        _check_formula("lambda2 on the prey axis", q2_axis,
                       orb.log_multipliers[1])
    if lambda2_axis > 1.0:
        notes.append("both prey-only orbits are unstable in the predator "
                     f"direction: lambda2 = {lambda2_axis:.6g} > 1")

    pred = predator_only_orbit_lg(m, settings=settings)
    run = integrate_pred_axis(m, float(pred.initial_state[1]), 0.0, m.period,
                              settings, dense=True)
    sol = run.solution

    def P(t: float) -> float:
        return float(sol.at(t)[0])

    dep = max(abs(m.response.dP(t, 0.0, P(t)))
              for t in np.linspace(0.0, m.period, 65))
    prey_dependent = dep <= _PREY_DEP_TOL

    if not prey_dependent:
        exc = ResponseNotPreyDependentAtAxis(
            f"max |df/dP(t, 0, P0*)| = {dep:.3g} exceeds {_PREY_DEP_TOL:g}: "
            "the triangular multiplier formulas do not apply")
        if strict:
            raise exc
        notes.append(f"{exc}; multipliers taken from the monodromy "
                     "eigenvalue moduli")
        lam1 = abs(pred.multipliers[0])
        lam2 = abs(pred.multipliers[1])
    else:
        q1 = _quad_span(
            lambda t: m.growth.rate(t, 0.0)
            - m.response.dN(t, 0.0, P(t)) * P(t), m.period)
        if m.family is Family.LESLIE_GOWER:
            q2 = _quad_span(
                lambda t: -m.pred_growth(t) * P(t) / m.pred_refuge(t), m.period)
        else:
            q2 = _quad_span(lambda t: -P(t) / m.pred_refuge(t), m.period)
        _check_formula("lambda1 at (0, P0*)", q1, pred.log_multipliers[0])
        _check_formula("lambda2 at (0, P0*)", q2, pred.log_multipliers[1])
        lam1, lam2 = _exp_guard(q1), _exp_guard(q2)
        if lam2 >= 1.0:
            raise MultiplierMismatch(
                f"lambda2 at the prey-extinct orbit must lie below 1, got "
                f"{lam2:.8g}")
        if m.growth.is_strong:
            if not lam1 < 1.0:
                raise MultiplierMismatch(
                    "a strong Allee effect must stabilize the prey-extinct "
                    f"orbit, yet lambda1 = {lam1:.8g} >= 1")
            notes.append(f"strong Allee effect stabilizes the prey-extinct "
                         f"orbit: lambda1 = {lam1:.6g} < 1")

    return LGBoundaryReport(
        origin=origin, prey_minus=prey_minus, prey_plus=prey_plus,
        predator_only=pred, lambda2_axis=lambda2_axis,
        lambda1_predator_only=lam1, lambda2_predator_only=lam2,
        prey_dependent_at_axis=prey_dependent, notes=tuple(notes))


# ---------------------------------------------------------------------------
# Parameter addressing
# ---------------------------------------------------------------------------

_MODEL_COEFS = ("gamma", "delta1", "delta2", "pred_growth", "pred_refuge")
_NESTED = {"growth": ("r", "k_minus", "k_plus", "offset"),
           "response": ("b", "p", "h")}
_SCALAR_FIELDS = ("mean", "amplitude")


def _resolve_path(m: ModelSystem, path: str) -> tuple[Optional[str], str, str]:
    """Split a dotted path into (container, coefficient, field)."""
    parts = path.split(".")
    if len(parts) == 3 and parts[0] in _NESTED:
        container, coef, fieldname = parts
        if coef not in _NESTED[container]:
            raise ValueError(f"{container} has no coefficient {coef!r}")
    elif len(parts) == 2 and parts[0] in _MODEL_COEFS:
        container, (coef, fieldname) = None, parts
    else:
        valid = [f"{name}.{f}" for name, _ in m.coefficients()
                 for f in _SCALAR_FIELDS]
        raise ValueError(f"cannot resolve parameter path {path!r}; expected "
                         f"one of: {', '.join(valid)}")
    if fieldname not in _SCALAR_FIELDS:
        raise ValueError(f"swept field must be one of {_SCALAR_FIELDS}, "
                         f"got {fieldname!r}")
    obj = m if container is None else getattr(m, container)
    if getattr(obj, coef, None) is None:
        raise ValueError(f"the model has no coefficient {path!r}")
    return container, coef, fieldname


def get_parameter(m: ModelSystem, path: str) -> float:
    """Read one scalar coefficient field, e.g. "response.p.mean"."""
    container, coef, fieldname = _resolve_path(m, path)
    obj = m if container is None else getattr(m, container)
    return float(getattr(getattr(obj, coef), fieldname))


def with_parameter(m: ModelSystem, path: str, value: float) -> ModelSystem:
    """Copy of the model with one scalar coefficient field replaced."""
    container, coef, fieldname = _resolve_path(m, path)
    obj = m if container is None else getattr(m, container)
    new_coef = replace(getattr(obj, coef), **{fieldname: float(value)})
    if container is None:
        return replace(m, **{coef: new_coef})
    return replace(m, **{container: replace(obj, **{coef: new_coef})})


# ---------------------------------------------------------------------------
# Parameter sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSample:
    """Decision quantities of one sweep sample (NaN where not applicable)."""

    value: float
    lambda1_minus: float = math.nan
    lambda1_plus: float = math.nan
    lambda2_minus: float = math.nan
    lambda2_plus: float = math.nan
    log_lambda2_minus: float = math.nan
    log_lambda2_plus: float = math.nan
    R0: Optional[float] = None
    case_label: Optional[CaseLabel] = None
    verdict: str = ""
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def case_text(self) -> str:
        if self.error is not None:
            return "error"
        if self.case_label is not None:
            return self.case_label.value
        return self.verdict


@dataclass(frozen=True)
class SweepResult:
    """Samples and located thresholds of one parameter sweep."""

    parameter_path: str
    samples: tuple[SweepSample, ...]
    thresholds: tuple[tuple[float, str], ...]

    def __post_init__(self) -> None:
        values = [s.value for s in self.samples]
        if any(b < a for a, b in zip(values, values[1:])):
            raise ValueError("sweep samples must be ordered by parameter value")

    def summary(self) -> str:
        ok = sum(1 for s in self.samples if s.ok)
        lines = [f"sweep of {self.parameter_path}: {len(self.samples)} "
                 f"samples ({ok} evaluated)"]
        for value, desc in self.thresholds:
            lines.append(f"  threshold {value:.6g}: {desc}")
        if not self.thresholds:
            lines.append("  no thresholds crossed in this range")
        return "\n".join(lines)


def _sweep_evaluator(m: ModelSystem, path: str,
                     settings: IntegratorSettings
                     ) -> Callable[[float], SweepSample]:
    """Per-value evaluation closure with a boundary-orbit cache.

    The prey-only orbits depend only on the growth function, so sweeping
    any other coefficient reuses them across all samples; each sample then
    costs two quadratures.
    """
    strong = m.growth.is_strong
    cache: dict = {}

    def segment_runs(mv: ModelSystem, orb: PeriodicOrbit):
        nodes = _orbit_nodes(orb)
        edges = np.linspace(0.0, mv.period, len(nodes) + 1)
        sols = [integrate_prey_axis(mv, float(n0), edges[i], edges[i + 1],
                                    settings, dense=True).solution
                for i, n0 in enumerate(nodes)]
        return edges, sols

    def prey_data(mv: ModelSystem):
        key = mv.growth
        if key not in cache:
            if strong:
                minus, plus = prey_only_orbits_strong(mv, settings=settings)
                cache[key] = tuple(
                    (segment_runs(mv, o), o.log_multipliers[0])
                    for o in (minus, plus))
            else:
                worbit = prey_only_orbit_weak(mv, settings=settings)
                cache[key] = (worbit,
                              math.log(worbit.multiplier))
        return cache[key]

    def evaluate(value: float) -> SweepSample:
        mv = with_parameter(m, path, value)
        if strong:
            (segs_m, q1m), (segs_p, q1p) = prey_data(mv)
            gam, f, d1 = mv.gamma, mv.response.value, mv.delta1
            q2 = []
            for edges, sols in (segs_m, segs_p):
                acc = 0.0
                for i, sol in enumerate(sols):
                    acc += _quad_interval(
                        lambda t: gam(t) * f(t, float(sol.at(t)[0]), 0.0)
                        - d1(t), edges[i], edges[i + 1])
                q2.append(acc)
            q2m, q2p = q2
            label = (CaseLabel.A if q2p < 0.0 else
                     CaseLabel.B if q2m < 0.0 else CaseLabel.C)
            return SweepSample(
                value=value,
                lambda1_minus=_exp_guard(q1m), lambda1_plus=_exp_guard(q1p),
                lambda2_minus=_exp_guard(q2m), lambda2_plus=_exp_guard(q2p),
                log_lambda2_minus=q2m, log_lambda2_plus=q2p,
                case_label=label, verdict=f"case {label.value}")
        worbit, q1p = prey_data(mv)
        r0 = compute_R0(mv, settings=settings, orbit=worbit)
        q2p = _quad_span(
            lambda t: mv.gamma(t) * mv.response.value(t, worbit(t), 0.0)
            - mv.delta1(t), mv.period)
        verdict = "persist" if r0 > 1.0 else "extinct"
        return SweepSample(
            value=value,
            lambda1_plus=_exp_guard(q1p), lambda2_plus=_exp_guard(q2p),
            log_lambda2_plus=q2p, R0=r0, verdict=verdict)

    return evaluate


_SWEEP_ERRORS = (OrbitError, IntegrationError, DomainError, ValueError)


def _safe_sample(evaluate: Callable[[float], SweepSample],
                 value: float) -> SweepSample:
    try:
        return evaluate(value)
    except _SWEEP_ERRORS as exc:
        return SweepSample(value=value,
                           error=f"{type(exc).__name__}: {exc}")


def _sweep_worker(payload) -> list[SweepSample]:
    m, path, values, settings = payload
    evaluate = _sweep_evaluator(m, path, settings)
    return [_safe_sample(evaluate, v) for v in values]


def _locate_threshold(evaluate: Callable[[float], SweepSample],
                      getter: Callable[[SweepSample], float],
                      lo: float, hi: float, g_lo: float) -> float:
    """Bisect the parameter until the bracket is below 1e-3 wide."""
    while hi - lo > _BISECT_TOL:
        mid = 0.5 * (lo + hi)
        g_mid = getter(evaluate(mid))
        if g_mid == 0.0:
            return mid
        if (g_mid < 0.0) == (g_lo < 0.0):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sweep_parameter(m: ModelSystem, parameter_path: str, lo: float, hi: float,
                    n_samples: int,
                    settings: IntegratorSettings = DEFAULT_SETTINGS,
                    jobs: int = 1) -> SweepResult:
    """Classify the model across one coefficient range and find thresholds.

    Evaluates the boundary multipliers (strong effect) or R0 (weak effect)
    at n_samples equally spaced values in [lo, hi]; failed samples are
    recorded and skipped.  A sign change of any decision quantity between
    consecutive good samples is refined by bisection on the parameter to a
    width of 1e-3.  Sample evaluation parallelizes over `jobs` processes.
    """
    if m.family is not Family.PREDATOR_PREY:
        raise ValueError("parameter sweeps cover the predator-prey family")
    if not lo < hi:
        raise ValueError("sweep range needs lo < hi")
    if n_samples < 2:
        raise ValueError("a sweep needs at least 2 samples")
    values = np.linspace(lo, hi, n_samples)

    if jobs > 1:
        import multiprocessing

        chunks = np.array_split(values, jobs)
        payloads = [(m, parameter_path, chunk.tolist(), settings)
                    for chunk in chunks if len(chunk)]
        with multiprocessing.get_context("fork").Pool(jobs) as pool:
            parts = pool.map(_sweep_worker, payloads)
        samples = [s for part in parts for s in part]
    else:
        evaluate = _sweep_evaluator(m, parameter_path, settings)
        samples = [_safe_sample(evaluate, float(v)) for v in values]

    # Threshold location reuses a fresh evaluator (and its orbit cache).
    evaluate = _sweep_evaluator(m, parameter_path, settings)
    if m.growth.is_strong:
        curves = [("lambda2_plus crosses 1",
                   lambda s: s.log_lambda2_plus),
                  ("lambda2_minus crosses 1",
                   lambda s: s.log_lambda2_minus)]
    else:
        curves = [("R0 crosses 1", lambda s: s.R0 - 1.0)]

    thresholds: list[tuple[float, str]] = []
    for name, getter in curves:
        for left, right in zip(samples, samples[1:]):
            if not (left.ok and right.ok):
                continue
            g_lo, g_hi = getter(left), getter(right)
            if math.isnan(g_lo) or math.isnan(g_hi) or g_lo * g_hi > 0.0:
                continue
            desc = f"{name} ({left.case_text} -> {right.case_text})"
            try:
                thr = _locate_threshold(evaluate, getter, left.value,
                                        right.value, g_lo)
            except _SWEEP_ERRORS as exc:
                thresholds.append((math.nan,
                                   f"{desc}; refinement failed: {exc}"))
                continue
            thresholds.append((thr, desc))
    thresholds.sort(key=lambda pair: pair[0])

    return SweepResult(parameter_path=parameter_path, samples=tuple(samples),
                       thresholds=tuple(thresholds))


def write_sweep_csv(path, result: SweepResult) -> None:
    """Write sweep samples as CSV with a trailing thresholds block."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("param,lambda1m,lambda1p,lambda2m,lambda2p,case\n")
        for s in result.samples:
            fh.write(f"{s.value:.17g},{s.lambda1_minus:.17g},"
                     f"{s.lambda1_plus:.17g},{s.lambda2_minus:.17g},"
                     f"{s.lambda2_plus:.17g},{s.case_text}\n")
        fh.write("# thresholds\n")
        for value, desc in result.thresholds:
            fh.write(f"# {value:.17g},{desc}\n")
