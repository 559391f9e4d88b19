"""Explicit Dormand-Prince 5(4) integration with dense output.

The stepper is the classic embedded 5(4) pair with the first-same-as-last
property (6 right-hand-side evaluations per accepted step), PI step-size
control, and the standard quartic interpolant for dense output.  It is
written for very small systems (1 to 7 equations): the planar models, their
variational equations, and scalar boundary flows.

Population components can be declared nonnegative: a step that would push
such a component below zero by more than the absolute tolerance is retried
with half the step, and harmless round-off undershoot is clamped to zero,
so invariant axes (N = 0, P = 0) are preserved exactly.

Dense output is stored per accepted step and supports both interpolation
and Gauss-Legendre quadrature of functionals along the solution, which is
how Floquet exponents and average-growth integrals are evaluated without
re-integrating.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "IntegrationError",
    "StepUnderflow",
    "MaxStepsExceeded",
    "IntegratorSettings",
    "DenseOutput",
    "Solution",
    "solve",
    "integrate",
    "integrate_variational",
    "integrate_prey_axis",
    "integrate_pred_axis",
    "quadrature_along",
    "write_trajectory_csv",
]


class IntegrationError(RuntimeError):
    """Base class for integration failures."""


class StepUnderflow(IntegrationError):
    """Step size fell below the minimum while error control kept rejecting."""


class MaxStepsExceeded(IntegrationError):
    """The step budget ran out before reaching the end time."""


@dataclass(frozen=True)
class IntegratorSettings:
    """Tolerances and guards for the adaptive stepper.

    max_step defaults to one fiftieth of the forcing period when a model is
    being integrated (so seasonality is always resolved), or to the span of
    integration for bare systems.  fixed_step disables error control and
    takes equal steps of the given size; it exists for convergence studies.
    """

    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_step: Optional[float] = None
    min_step: float = 1e-10
    max_steps: int = 10_000_000
    fixed_step: Optional[float] = None

    def __post_init__(self) -> None:
        if not self.rel_tol > 0.0 or not self.abs_tol > 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_step is not None and not self.max_step > 0.0:
            raise ValueError("max_step must be positive")
        if self.fixed_step is not None and not self.fixed_step > 0.0:
            raise ValueError("fixed_step must be positive")


DEFAULT_SETTINGS = IntegratorSettings()

# Dormand-Prince 5(4) tableau.  The last row of A equals the fifth-order
# weights B, so the seventh stage of one step is the first of the next.
_C = (0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0)
_A = (
    np.array([1.0 / 5.0]),
    np.array([3.0 / 40.0, 9.0 / 40.0]),
    np.array([44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0]),
    np.array([19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0]),
    np.array([9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0,
              -5103.0 / 18656.0]),
)
_B = np.array([35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0,
               11.0 / 84.0, 0.0])
# Difference between the fifth- and the embedded fourth-order weights.
_E = np.array([71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0,
               -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0])
# Weights of the quartic interpolant contribution of each stage.
_D = np.array([-12715105075.0 / 11282082432.0, 0.0, 87487479700.0 / 32700410799.0,
               -10690763975.0 / 1880347072.0, 701980252875.0 / 199316789632.0,
               -1453857185.0 / 822651844.0, 69997945.0 / 29380423.0])

# 5-point Gauss-Legendre rule on [0, 1], used for quadrature along segments.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(5)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


class DenseOutput:
    """Piecewise-quartic interpolant collected over accepted steps.

    Each segment stores the five vectors of the classic interpolant
    u(theta) = r1 + theta*(r2 + (1-theta)*(r3 + theta*(r4 + (1-theta)*r5)))
    with theta = (t - t_left)/h in [0, 1].
    """

    def __init__(self, dim: int) -> None:
        self.dim = dim
        self._t0: list[float] = []
        self._h: list[float] = []
        self._rcont: list[np.ndarray] = []
        self._t0_arr: Optional[np.ndarray] = None

    def append(self, t0: float, h: float, rcont: np.ndarray) -> None:
        self._t0.append(t0)
        self._h.append(h)
        self._rcont.append(rcont)
        self._t0_arr = None

    def __len__(self) -> int:
        return len(self._t0)

    @property
    def t_min(self) -> float:
        return min(self._t0[0], self._t0[-1] + self._h[-1])

    @property
    def t_max(self) -> float:
        return max(self._t0[0], self._t0[-1] + self._h[-1])

    def _segment_index(self, t: float) -> int:
        if self._t0_arr is None:
            self._t0_arr = np.array(self._t0)
        t0s = self._t0_arr
        if len(t0s) == 1:
            return 0
        if t0s[-1] >= t0s[0]:
            i = int(np.searchsorted(t0s, t, side="right")) - 1
        else:
            # Backward integration stores segment starts in decreasing order.
            j = int(np.searchsorted(t0s[::-1], t, side="left"))
            i = len(t0s) - 1 - j
        return min(max(i, 0), len(t0s) - 1)

    def __call__(self, t: float) -> np.ndarray:
        """Interpolated state at time t (must lie inside the covered span)."""
        if not (self.t_min - 1e-9 <= t <= self.t_max + 1e-9):
            raise ValueError(f"time {t} outside dense output span "
                             f"[{self.t_min}, {self.t_max}]")
        i = self._segment_index(t)
        r = self._rcont[i]
        theta = (t - self._t0[i]) / self._h[i]
        omt = 1.0 - theta
        return r[0] + theta * (r[1] + omt * (r[2] + theta * (r[3] + omt * r[4])))

    def segments(self):
        """Yield (t_left, h, rcont) for quadrature over every step."""
        return zip(self._t0, self._h, self._rcont)


def quadrature_along(dense: DenseOutput, g: Callable[[float, np.ndarray], float]) -> float:
    """Integral of g(t, y(t)) over the span of the dense output.

    Applies a 5-point Gauss-Legendre rule on every accepted step, so the
    quadrature resolution adapts exactly where the integrator did.
    """
    total = 0.0
    for t0, h, r in dense.segments():
        acc = 0.0
        for x, w in zip(_GL_X, _GL_W):
            omt = 1.0 - x
            y = r[0] + x * (r[1] + omt * (r[2] + x * (r[3] + omt * r[4])))
            acc += w * g(t0 + x * h, y)
        total += acc * h
    return total


@dataclass
class Solution:
    """Result of one integration run."""

    t: np.ndarray
    y: np.ndarray
    n_accepted: int
    n_rejected: int
    n_rhs: int
    dense: Optional[DenseOutput] = None
    t_eval: Optional[np.ndarray] = None
    y_eval: Optional[np.ndarray] = None

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    @property
    def y_end(self) -> np.ndarray:
        return self.y[-1]

    def at(self, t: float) -> np.ndarray:
        if self.dense is None:
            raise ValueError("integration was run without dense output")
        return self.dense(t)


def _rms_norm(v: np.ndarray) -> float:
    return float(np.sqrt(np.mean(v * v)))


def _initial_step(f, t0, y0, f0, direction, rel_tol, abs_tol, max_step, span):
    """Starting step size from the standard two-derivative heuristic."""
    scale = abs_tol + rel_tol * np.abs(y0)
    d0 = _rms_norm(y0 / scale)
    d1 = _rms_norm(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    y1 = y0 + h0 * direction * f0
    f1 = f(t0 + h0 * direction, y1)
    d2 = _rms_norm((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1, span, max_step)


def solve(f: Callable[[float, np.ndarray], np.ndarray], t0: float, y0: Sequence[float],
          t1: float, settings: IntegratorSettings = DEFAULT_SETTINGS, *,
          dense: bool = False, t_eval: Optional[Sequence[float]] = None,
          nonneg: Sequence[int] = ()) -> Solution:
    """Integrate dy/dt = f(t, y) from t0 to t1 (t1 < t0 integrates backward).

    nonneg lists components that must never go negative.  A candidate step
    driving one of them below -abs_tol is rejected and halved; smaller
    undershoot is clamped to zero.
    """
    y = np.asarray(y0, dtype=float).copy()
    dim = y.size
    if t1 == t0:
        out = Solution(t=np.array([t0]), y=y[None, :].copy(), n_accepted=0,
                       n_rejected=0, n_rhs=0)
        if t_eval is not None:
            te = np.asarray(t_eval, dtype=float)
            if te.size and not np.all(te == t0):
                raise ValueError("t_eval outside integration span")
            out.t_eval = te
            out.y_eval = np.repeat(y[None, :], te.size, axis=0)
        if dense:
            out.dense = DenseOutput(dim)
            out.dense.append(t0, 0.0, np.stack([y, np.zeros_like(y), np.zeros_like(y),
                                                np.zeros_like(y), np.zeros_like(y)]))
        return out

    direction = 1.0 if t1 > t0 else -1.0
    span = abs(t1 - t0)
    max_step = settings.max_step if settings.max_step is not None else span
    nonneg = tuple(nonneg)

    ts = [t0]
    ys = [y.copy()]
    dense_out = DenseOutput(dim) if dense else None

    eval_pts = None
    eval_idx = 0
    eval_states = []
    if t_eval is not None:
        eval_pts = np.asarray(t_eval, dtype=float)
        if eval_pts.size:
            lo = min(t0, t1) - 1e-9 * max(1.0, span)
            hi = max(t0, t1) + 1e-9 * max(1.0, span)
            if eval_pts.min() < lo or eval_pts.max() > hi:
                raise ValueError("t_eval outside integration span")
            if not np.all(np.diff(eval_pts) * direction >= 0.0):
                raise ValueError("t_eval must be ordered in the direction of integration")
        while eval_idx < eval_pts.size and eval_pts[eval_idx] == t0:
            eval_states.append(y.copy())
            eval_idx += 1

    t = t0
    k1 = f(t, y)
    n_rhs = 1
    n_accepted = 0
    n_rejected = 0

    fixed = settings.fixed_step
    if fixed is not None:
        h = min(fixed, span)
    else:
        h = _initial_step(f, t0, y, k1, direction, settings.rel_tol,
                          settings.abs_tol, max_step, span)
        n_rhs += 1

    K = np.empty((7, dim))
    facold = 1e-4
    rejected_last = False

    while (t1 - t) * direction > 0.0:
        if n_accepted + n_rejected >= settings.max_steps:
            raise MaxStepsExceeded(
                f"exceeded {settings.max_steps} steps at t = {t} (target {t1})")
        h = min(h, max_step)
        if (t + h * direction - t1) * direction > 0.0:
            h = abs(t1 - t)
        hs = h * direction
        K[0] = k1
        for i, a_row in enumerate(_A, start=1):
            yi = y + hs * (a_row @ K[:i])
            K[i] = f(t + _C[i] * hs, yi)
        y_new = y + hs * (_B[:6] @ K[:6])
        t_new = t1 if abs(t + hs - t1) <= 1e-12 * max(abs(t1), 1.0) else t + hs
        if t_new == t:
            raise StepUnderflow(
                f"step size {h} cannot advance time past t = {t}")
        K[6] = f(t_new, y_new)
        n_rhs += 6

        if fixed is None:
            err_vec = hs * (_E @ K)
            scale = settings.abs_tol + settings.rel_tol * np.maximum(np.abs(y),
                                                                     np.abs(y_new))
            err = _rms_norm(err_vec / scale)
        else:
            err = 0.0

        # Overflow in a trial step poisons the error estimate (NaN compares
        # false everywhere), so non-finite results are forced onto the
        # rejection path; fixed-step mode has no such path and must fail.
        finite = bool(np.all(np.isfinite(y_new))) and math.isfinite(err)
        if not finite and fixed is not None:
            raise IntegrationError(
                f"state became non-finite at t = {t} with fixed step {fixed}")

        undershoot = False
        clamped = False
        if nonneg:
            for i in nonneg:
                if y_new[i] < 0.0:
                    if y_new[i] < -settings.abs_tol:
                        undershoot = True
                    else:
                        y_new[i] = 0.0
                        clamped = True

        if fixed is None and (not finite or err > 1.0 or undershoot):
            n_rejected += 1
            rejected_last = True
            if undershoot or not finite:
                h = 0.5 * h
            else:
                fac11 = err ** 0.17
                h = h / min(5.0, max(0.2, fac11 / 0.9))
            if h < settings.min_step:
                raise StepUnderflow(
                    f"step size {h} below minimum {settings.min_step} at t = {t}")
            k1 = K[0].copy()
            continue

        if clamped:
            K[6] = f(t_new, y_new)
            n_rhs += 1

        if dense_out is not None:
            ydiff = y_new - y
            bspl = hs * K[0] - ydiff
            rcont = np.stack([
                y.copy(),
                ydiff,
                bspl,
                ydiff - hs * K[6] - bspl,
                hs * (_D @ K),
            ])
            dense_out.append(t, hs, rcont)

        if eval_pts is not None:
            ydiff = y_new - y
            bspl = hs * K[0] - ydiff
            r4 = ydiff - hs * K[6] - bspl
            r5 = hs * (_D @ K)
            while eval_idx < eval_pts.size and \
                    (eval_pts[eval_idx] - t_new) * direction <= 0.0:
                theta = (eval_pts[eval_idx] - t) / hs
                omt = 1.0 - theta
                eval_states.append(y + theta * (ydiff + omt * (bspl + theta *
                                                               (r4 + omt * r5))))
                eval_idx += 1

        t = t_new
        y = y_new
        k1 = K[6].copy()
        ts.append(t)
        ys.append(y.copy())
        n_accepted += 1

        if fixed is None:
            fac11 = (err ** 0.17) if err > 0.0 else 0.0
            fac = fac11 / (facold ** 0.04)
            fac = max(0.1, min(5.0, fac / 0.9))
            h_next = h / fac if fac > 0.0 else h * 10.0
            if err == 0.0:
                h_next = h * 10.0
            if rejected_last:
                h_next = min(h_next, h)
            h = h_next
            facold = max(err, 1e-4)
            rejected_last = False
        else:
            h = min(fixed, abs(t1 - t)) if t != t1 else fixed

    sol = Solution(t=np.array(ts), y=np.array(ys), n_accepted=n_accepted,
                   n_rejected=n_rejected, n_rhs=n_rhs, dense=dense_out)
    if eval_pts is not None:
        # Points that coincide with t1 up to round-off may remain.
        while eval_idx < eval_pts.size:
            eval_states.append(y.copy())
            eval_idx += 1
        sol.t_eval = eval_pts
        sol.y_eval = np.array(eval_states) if eval_states else np.empty((0, dim))
    return sol


# ---------------------------------------------------------------------------
# Model-level wrappers
# ---------------------------------------------------------------------------

def _model_max_step(model, settings: IntegratorSettings) -> IntegratorSettings:
    if settings.max_step is not None:
        return settings
    from dataclasses import replace
    return replace(settings, max_step=model.period / 50.0)


def integrate(model, x0: Sequence[float], t0: float, t1: float,
              settings: IntegratorSettings = DEFAULT_SETTINGS, *,
              dense: bool = False, t_eval: Optional[Sequence[float]] = None) -> Solution:
    """Integrate a planar model with nonnegative populations."""
    settings = _model_max_step(model, settings)
    rhs2 = model.rhs_compiled()

    def f(t, y):
        dN, dP = rhs2(t, y[0], y[1])
        return np.array([dN, dP])

    return solve(f, t0, x0, t1, settings, dense=dense, t_eval=t_eval, nonneg=(0, 1))


@dataclass
class VariationalResult:
    """End state, fundamental matrix and trace integral of one variational run."""

    state: np.ndarray
    matrix: np.ndarray
    trace_integral: float
    solution: Solution

    @property
    def det(self) -> float:
        U = self.matrix
        return float(U[0, 0] * U[1, 1] - U[0, 1] * U[1, 0])

    def liouville_residual(self) -> float:
        """Relative gap between det U and exp(integral of the trace)."""
        expq = math.exp(self.trace_integral) if self.trace_integral < 700.0 else math.inf
        d = self.det
        ref = max(abs(d), abs(expq), 1e-300)
        if math.isinf(expq) or math.isinf(d):
            return 0.0 if expq == d else math.inf
        return abs(d - expq) / ref


def integrate_variational(model, x0: Sequence[float], t0: float, t1: float,
                          settings: IntegratorSettings = DEFAULT_SETTINGS, *,
                          dense: bool = False) -> VariationalResult:
    """Integrate the model together with its variational equations.

    The augmented state is (N, P, U11, U12, U21, U22, q) where U solves
    dU/dt = J(t, x(t)) U from U(t0) = I and q accumulates the trace of J,
    so that exp(q) should reproduce det U (Liouville's identity).
    """
    settings = _model_max_step(model, settings)
    rhs2 = model.rhs_compiled()
    jac4 = model.jacobian_compiled()

    def f(t, y):
        dN, dP = rhs2(t, y[0], y[1])
        j11, j12, j21, j22 = jac4(t, y[0], y[1])
        out = np.empty(7)
        out[0] = dN
        out[1] = dP
        out[2] = j11 * y[2] + j12 * y[4]
        out[3] = j11 * y[3] + j12 * y[5]
        out[4] = j21 * y[2] + j22 * y[4]
        out[5] = j21 * y[3] + j22 * y[5]
        out[6] = j11 + j22
        return out

    y0 = np.array([x0[0], x0[1], 1.0, 0.0, 0.0, 1.0, 0.0])
    sol = solve(f, t0, y0, t1, settings, dense=dense, nonneg=(0, 1))
    y = sol.y_end
    return VariationalResult(state=y[:2].copy(),
                             matrix=np.array([[y[2], y[3]], [y[4], y[5]]]),
                             trace_integral=float(y[6]),
                             solution=sol)


@dataclass
class AxisResult:
    """End density and flow derivative of a scalar boundary integration."""

    value: float
    derivative: float
    solution: Solution


def _integrate_axis(rate, rate_d, x0: float, t0: float, t1: float,
                    settings: IntegratorSettings, dense: bool) -> AxisResult:
    # A negative density would pin the nonnegativity clamp against the
    # initial value and grind the step size to nothing; reject it up front.
    if x0 < 0.0:
        raise IntegrationError(f"axis density must be nonnegative, got {x0}")

    def f(t, y):
        return np.array([rate(t, y[0]), rate_d(t, y[0]) * y[1]])

    sol = solve(f, t0, np.array([x0, 1.0]), t1, settings, dense=dense, nonneg=(0,))
    return AxisResult(value=float(sol.y_end[0]), derivative=float(sol.y_end[1]),
                      solution=sol)


def integrate_prey_axis(model, N0: float, t0: float, t1: float,
                        settings: IntegratorSettings = DEFAULT_SETTINGS, *,
                        dense: bool = False) -> AxisResult:
    """Prey-only flow dN/dt = k(t, N) N with its derivative along the flow."""
    settings = _model_max_step(model, settings)
    rate, rate_d = model.prey_axis_compiled()
    return _integrate_axis(rate, rate_d, N0, t0, t1, settings, dense)


def integrate_pred_axis(model, P0: float, t0: float, t1: float,
                        settings: IntegratorSettings = DEFAULT_SETTINGS, *,
                        dense: bool = False) -> AxisResult:
    """Predator-only flow of the Leslie-Gower families with its derivative."""
    settings = _model_max_step(model, settings)
    rate, rate_d = model.pred_axis_compiled()
    return _integrate_axis(rate, rate_d, P0, t0, t1, settings, dense)


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def write_trajectory_csv(path, t: np.ndarray, states: np.ndarray) -> None:
    """Write times and states as CSV with full double precision."""
    states = np.atleast_2d(states)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,N,P\n")
        for ti, row in zip(t, states):
            fh.write(f"{ti:.17g},{row[0]:.17g},{row[1]:.17g}\n")
