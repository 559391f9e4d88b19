"""Poincare-map machinery: periodic orbits and their Floquet multipliers.

The stroboscopic (period-T) map sends an initial state to the solution one
forcing period later.  Its fixed points are the T-periodic orbits of the
model: the origin, prey-only orbits on the N axis, predator-only orbits on
the P axis (Leslie-Gower families), and coexistence orbits in the open
quadrant.  nT-periodic orbits are fixed points of the n-fold map.

Interior orbits are located by damped Newton iteration on G(x) = map(x) - x
using the variational (monodromy) matrix as the Jacobian, which finds
unstable orbits just as readily as stable ones.  The iteration runs on the
symmetric extension of the map (reflect into the nonnegative quadrant,
integrate, restore signs), so iterates may step across an axis without
evaluating the model at negative densities.

Boundary orbits reduce to scalar fixed-point problems solved by bracketed
bisection inside the bands guaranteed by the theory (for a strong Allee
effect the unstable orbit lies between the extremes of the survival
threshold K_minus, the stable one between the extremes of the carrying
capacity K_plus), then polished by scalar Newton using the flow derivative.

Stability is decided by the Floquet multipliers, the eigenvalues of the
monodromy matrix over the orbit's full period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from .integrate import (
    AxisResult,
    DEFAULT_SETTINGS,
    IntegrationError,
    IntegratorSettings,
    Solution,
    integrate,
    integrate_pred_axis,
    integrate_prey_axis,
    integrate_variational,
    quadrature_along,
    solve,
    _model_max_step,
)
from .models import DomainError, Family, ModelSystem, invariant_box

__all__ = [
    "OrbitError",
    "BracketFailure",
    "NoConvergence",
    "SingularJacobian",
    "LeftDomain",
    "NuAboveThreshold",
    "DegenerateOrbit",
    "Stability",
    "PeriodicOrbit",
    "ScalarOrbit",
    "PeriodVerdict",
    "LedgerEntry",
    "IndexLedger",
    "poincare_map",
    "find_orbit_newton",
    "find_orbit_multiple_shooting",
    "grid_search_orbits",
    "prey_only_orbits_strong",
    "prey_only_orbit_weak",
    "predator_only_orbit_lg",
    "embed_on_prey_axis",
    "floquet",
    "mean_low_density_growth",
    "detect_period",
    "index_ledger",
    "write_orbits_csv",
]


class OrbitError(RuntimeError):
    """Base class for orbit-finding failures."""


class BracketFailure(OrbitError):
    """A guaranteed sign change did not appear at the bracket ends."""


class NoConvergence(OrbitError):
    """The iteration ran out of steps before meeting the tolerance."""


class SingularJacobian(OrbitError):
    """The monodromy matrix has an eigenvalue 1: Newton cannot proceed."""


class LeftDomain(OrbitError):
    """A Newton iterate escaped the expanded invariant box."""


class NuAboveThreshold(OrbitError):
    """Prey harvesting rate at or above the mean low-density growth rate."""


class DegenerateOrbit(OrbitError):
    """An orbit with a unit multiplier has no well-defined fixed-point index."""


# Stability margin around |multiplier| = 1 and the tolerance identifying a
# state component as sitting on an axis.
_STAB_MARGIN = 1e-4
_AXIS_TOL = 1e-9
_UNIT_TOL = 1e-8
_BOX_SLACK = 1.5


class Stability(str, Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    MARGINAL = "marginal"


@dataclass(frozen=True)
class PeriodicOrbit:
    """A fixed point of the n-fold stroboscopic map, with its linearization.

    `initial_state` lies on the section t = 0; `monodromy` is the
    fundamental matrix over n forcing periods along the orbit, and
    `multipliers` are its eigenvalues (the Floquet multipliers).

    Strongly contracting or expanding directions make the determinant of
    the monodromy matrix unresolvable from its entries (the subtraction
    cancels), so the determinant is carried in log form as the integral of
    the Jacobian trace along the orbit (Liouville's identity); `det`
    exponentiates it.  For orbits on an invariant axis the matrix is
    exactly triangular and `log_multipliers` holds the logs of the two
    multipliers, evaluated by quadrature along the orbit; this keeps
    relative accuracy even at magnitudes like 1e-30 where the integrated
    matrix entries have none.
    """

    initial_state: np.ndarray
    period_multiple: int
    monodromy: np.ndarray
    multipliers: tuple[complex, complex]
    stability: Stability
    residual: float
    log_det: float
    log_multipliers: Optional[tuple[float, float]] = None
    # Shooting nodes at uniform section times, for orbits too unstable to
    # recover from `initial_state` by one-pass integration (a transversal
    # exponent q with q > log(1/eps) makes the period map a float step
    # function: no start value tracks the orbit across the full period).
    nodes: Optional[np.ndarray] = None

    @property
    def det(self) -> float:
        return _exp_guard(self.log_det)

    @property
    def location(self) -> str:
        """origin, prey-axis, predator-axis or interior."""
        on_n = abs(self.initial_state[1]) < _AXIS_TOL
        on_p = abs(self.initial_state[0]) < _AXIS_TOL
        if on_n and on_p:
            return "origin"
        if on_n:
            return "prey-axis"
        if on_p:
            return "predator-axis"
        return "interior"

    def __str__(self) -> str:
        N0, P0 = self.initial_state
        l1, l2 = self.multipliers
        return (f"orbit(n={self.period_multiple}, x0=({N0:.6g}, {P0:.6g}), "
                f"|multipliers|=({abs(l1):.4g}, {abs(l2):.4g}), "
                f"{self.stability.value}, residual={self.residual:.2g})")


@dataclass(frozen=True)
class ScalarOrbit:
    """A periodic solution of a scalar boundary flow.

    Used for prey-only dynamics (optionally harvested at per-capita rate nu)
    and for the predator-only dynamics of the Leslie-Gower families.  The
    dense solution covers one period, so the orbit can be evaluated at any
    time via periodic extension.
    """

    axis: str
    value0: float
    multiplier: float
    residual: float
    period: float
    solution: Solution
    nu: float = 0.0

    def __call__(self, t: float) -> float:
        return float(self.solution.at(t % self.period)[0])

    def sample(self, ts: Sequence[float]) -> np.ndarray:
        return np.array([self(t) for t in ts])


def _exp_guard(q: float) -> float:
    return math.inf if q > 709.0 else math.exp(q)


# Largest |df/dP| along an axis orbit that still counts as prey-dependent
# there (the monodromy matrix is triangular only when the cross term is 0).
_PREY_DEP_TOL = 1e-10


def _predator_axis_triangular(m: ModelSystem, sol: Solution, span: float) -> bool:
    """True when df/dP vanishes along the predator axis within 1e-10."""
    ts = np.linspace(0.0, span, 65)
    return all(abs(m.response.dP(t, 0.0, float(sol.at(t)[1]))) <= _PREY_DEP_TOL
               for t in ts)


def _classify(multipliers: tuple[complex, complex]) -> Stability:
    mags = [abs(l) for l in multipliers]
    if all(mag < 1.0 - _STAB_MARGIN for mag in mags):
        return Stability.STABLE
    if any(mag > 1.0 + _STAB_MARGIN for mag in mags):
        return Stability.UNSTABLE
    return Stability.MARGINAL


def _interior_multipliers(U: np.ndarray, det: float) -> tuple[complex, complex]:
    """Eigenvalues of a 2x2 monodromy matrix with the determinant supplied.

    The trace is well conditioned in the entries, the determinant is not
    (it cancels), so the accurate Liouville value is passed in.  The small
    root comes from the product relation, which keeps its relative accuracy
    even when it is orders of magnitude below the trace.
    """
    tr = float(U[0, 0] + U[1, 1])
    disc = tr * tr - 4.0 * det
    if disc < 0.0:
        re, im = 0.5 * tr, 0.5 * math.sqrt(-disc)
        return complex(re, im), complex(re, -im)
    if tr == 0.0:
        s = math.sqrt(disc)
        lam = sorted((complex(0.5 * s), complex(-0.5 * s)),
                     key=lambda z: (-abs(z), -z.real))
        return lam[0], lam[1]
    big = 0.5 * (tr + math.copysign(math.sqrt(disc), tr))
    small = det / big
    lam = sorted((complex(big), complex(small)),
                 key=lambda z: (-abs(z), -z.real))
    return lam[0], lam[1]


def _build_orbit(m: ModelSystem, x0, n: int, settings: IntegratorSettings,
                 var=None) -> PeriodicOrbit:
    """Build a PeriodicOrbit record at x0 from one variational integration.

    Orbits on an invariant axis get their multipliers from log-space
    quadrature of the Jacobian diagonal along the orbit (the monodromy
    matrix is exactly triangular there), and the matrix diagonal is patched
    with the exponentiated values.  Interior orbits use the eigenvalues of
    the integrated matrix, with the determinant taken from the trace
    integral.  A precomputed variational result may be passed in; axis
    orbits re-integrate with dense output for the quadratures.
    """
    x0 = np.asarray(x0, dtype=float)
    span = n * m.period
    on_axis = min(abs(x0[0]), abs(x0[1])) < _AXIS_TOL

    if on_axis:
        # The trajectory stays on the axis and bounded, but the variational
        # system grows like exp of the transversal exponent, which can leave
        # double-precision range; axis orbits therefore integrate the plain
        # trajectory only and take multipliers from log-space quadrature.
        sol = integrate(m, x0, 0.0, span, settings, dense=True)
        if (abs(x0[0]) < _AXIS_TOL <= abs(x0[1])
                and not _predator_axis_triangular(m, sol, span)):
            # A response with genuine predator dependence at N = 0 couples the
            # prey direction back in: the monodromy matrix is not triangular
            # on the predator axis, so treat it like an interior one.
            on_axis = False

    if on_axis:
        jac = m.jacobian_compiled()
        q1 = quadrature_along(sol.dense, lambda t, y: jac(t, y[0], y[1])[0])
        q2 = quadrature_along(sol.dense, lambda t, y: jac(t, y[0], y[1])[3])
        # The coupling entry of a triangular monodromy matrix influences
        # neither the eigenvalues nor det(I - U); only the diagonal is kept.
        U = np.diag([_exp_guard(q1), _exp_guard(q2)])
        lam = (complex(U[0, 0]), complex(U[1, 1]))
        log_det = q1 + q2
        logs: Optional[tuple[float, float]] = (q1, q2)
        residual = float(np.linalg.norm(sol.y_end - x0))
    else:
        if var is None:
            var = integrate_variational(m, x0, 0.0, span, settings)
        U = var.matrix
        log_det = var.trace_integral
        lam = _interior_multipliers(U, _exp_guard(log_det))
        logs = None
        residual = float(np.linalg.norm(var.state - x0))
    return PeriodicOrbit(initial_state=x0, period_multiple=n, monodromy=U,
                         multipliers=lam, stability=_classify(lam),
                         residual=residual, log_det=log_det,
                         log_multipliers=logs)


# ---------------------------------------------------------------------------
# The stroboscopic map and Newton iteration
# ---------------------------------------------------------------------------

def poincare_map(m: ModelSystem, x0, n: int = 1,
                 settings: IntegratorSettings = DEFAULT_SETTINGS) -> np.ndarray:
    """State after n forcing periods, starting on the section t = 0."""
    if n < 1:
        raise ValueError("n must be at least 1")
    x0 = np.asarray(x0, dtype=float)
    if x0[0] < 0.0 or x0[1] < 0.0:
        raise ValueError("initial state must be in the nonnegative quadrant")
    return integrate(m, x0, 0.0, n * m.period, settings).y_end


def find_orbit_newton(m: ModelSystem, guess, n: int = 1, tol: float = 1e-9,
                      settings: IntegratorSettings = DEFAULT_SETTINGS,
                      max_iter: int = 50) -> PeriodicOrbit:
    """Damped Newton iteration for a fixed point of the n-fold map.

    Works on the symmetric extension of the map, so an iterate that crosses
    an axis is reflected back instead of being integrated at negative
    densities.  The step is halved (up to 30 times) until the residual
    decreases; the Jacobian is U(nT) - I from the variational equations, so
    unstable orbits converge exactly as stable ones do.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    x = np.asarray(guess, dtype=float).copy()
    if not np.all(np.isfinite(x)):
        raise ValueError("guess must be finite")
    if x[0] < 0.0 or x[1] < 0.0:
        raise ValueError("guess must be in the closed nonnegative quadrant")

    n_max, p_max = invariant_box(m)
    lim = np.array([_BOX_SLACK * n_max, _BOX_SLACK * p_max])
    span = n * m.period

    def gmap(z: np.ndarray) -> np.ndarray:
        # Symmetric extension: sign(z) * map(|z|) - z.
        s = np.where(z < 0.0, -1.0, 1.0)
        end = integrate(m, np.abs(z), 0.0, span, settings).y_end
        return s * end - z

    g_norm = math.inf
    for _ in range(max_iter):
        if np.any(np.abs(x) > lim):
            raise LeftDomain(
                f"iterate ({x[0]:.4g}, {x[1]:.4g}) left the expanded box "
                f"[{lim[0]:.4g} x {lim[1]:.4g}]")
        s = np.where(x < 0.0, -1.0, 1.0)
        var = integrate_variational(m, np.abs(x), 0.0, span, settings)
        G = s * var.state - x
        g_norm = float(np.linalg.norm(G))
        if g_norm < tol:
            return _build_orbit(m, np.abs(x), n, settings, var=var)
        U = (s[:, None] * var.matrix) * s[None, :]
        ev = np.linalg.eigvals(var.matrix)
        if np.min(np.abs(ev - 1.0)) < _UNIT_TOL:
            raise SingularJacobian(
                f"monodromy eigenvalue within {_UNIT_TOL:g} of 1 at "
                f"({x[0]:.6g}, {x[1]:.6g})")
        try:
            dx = np.linalg.solve(U - np.eye(2), -G)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(str(exc)) from exc

        # Backtracking: halve until the residual actually drops.
        step = 1.0
        for _ in range(30):
            trial = x + step * dx
            if np.all(np.abs(trial) <= lim):
                try:
                    if np.linalg.norm(gmap(trial)) < g_norm:
                        break
                except (IntegrationError, DomainError):
                    pass
            step *= 0.5
        else:
            raise NoConvergence(
                f"no descent direction at ({x[0]:.6g}, {x[1]:.6g}), "
                f"residual {g_norm:.3g}")
        x = x + step * dx

    raise NoConvergence(f"residual {g_norm:.3g} after {max_iter} iterations")


def find_orbit_multiple_shooting(m: ModelSystem, guess, n: int = 1,
                                 segments: int = 16, tol: float = 1e-9,
                                 settings: IntegratorSettings = DEFAULT_SETTINGS,
                                 max_iter: int = 50) -> PeriodicOrbit:
    """Multiple-shooting Newton iteration for a fixed point of the n-fold map.

    Splits the period into segments with a free state at each node, which
    divides the error amplification per subproblem by the segment count:
    strongly unstable orbits whose full-period Newton basin is microscopic
    become routine.  All nodes start at `guess`.  The node iteration only
    has to reach the single-shooting basin: when it meets its tolerance,
    stalls at the integrator noise floor, or runs out of iterations, the
    initial node is handed to `find_orbit_newton`, which enforces the
    residual contract (and raises NoConvergence if the hand-off was not
    good enough).
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if segments < 2:
        raise ValueError("segments must be at least 2 (use find_orbit_newton)")
    x0 = np.asarray(guess, dtype=float)
    if x0[0] < 0.0 or x0[1] < 0.0:
        raise ValueError("guess must be in the closed nonnegative quadrant")

    n_max, p_max = invariant_box(m)
    lim = np.array([_BOX_SLACK * n_max, _BOX_SLACK * p_max])
    span = n * m.period
    times = np.linspace(0.0, span, segments + 1)
    M = segments
    nodes = np.tile(x0, (M, 1))

    def seg_map(i: int, z: np.ndarray) -> np.ndarray:
        s = np.where(z < 0.0, -1.0, 1.0)
        end = integrate(m, np.abs(z), times[i], times[i + 1], settings).y_end
        return s * end

    def residual_vec(xs: np.ndarray) -> np.ndarray:
        F = np.empty((M, 2))
        for i in range(M):
            F[i] = seg_map(i, xs[i]) - xs[(i + 1) % M]
        return F.ravel()

    shoot_tol = max(tol * 1e-2, 1e-12)
    f_norm = math.inf
    for _ in range(max_iter):
        if np.any(np.abs(nodes) > lim):
            raise LeftDomain("a shooting node left the expanded box")
        # Assemble the block-bidiagonal Jacobian from per-segment monodromies.
        J = np.zeros((2 * M, 2 * M))
        F = np.empty((M, 2))
        for i in range(M):
            z = nodes[i]
            s = np.where(z < 0.0, -1.0, 1.0)
            var = integrate_variational(m, np.abs(z), times[i], times[i + 1],
                                        settings)
            F[i] = s * var.state - nodes[(i + 1) % M]
            blk = (s[:, None] * var.matrix) * s[None, :]
            J[2 * i:2 * i + 2, 2 * i:2 * i + 2] = blk
            j = (i + 1) % M
            J[2 * i:2 * i + 2, 2 * j:2 * j + 2] -= np.eye(2)
        Fv = F.ravel()
        f_norm = float(np.linalg.norm(Fv))
        if f_norm < shoot_tol:
            break
        try:
            dX = np.linalg.solve(J, -Fv)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(str(exc)) from exc
        step = 1.0
        for _ in range(30):
            trial = nodes + step * dX.reshape(M, 2)
            if np.all(np.abs(trial) <= lim):
                try:
                    if np.linalg.norm(residual_vec(trial)) < f_norm:
                        break
                except (IntegrationError, DomainError):
                    pass
            step *= 0.5
        else:
            # Stalled: the residual sits at the integrator noise floor
            # (proportional to the state magnitude), which can exceed
            # shoot_tol.  The polish below decides whether we are close
            # enough.
            break
        nodes = nodes + step * dX.reshape(M, 2)

    return find_orbit_newton(m, np.abs(nodes[0]), n, tol, settings, max_iter=10)


# ---------------------------------------------------------------------------
# Grid-seeded search
# ---------------------------------------------------------------------------

_GROWTH_COEFS = ("r", "k_minus", "k_plus", "offset")
_RESPONSE_COEFS = ("b", "p", "h")
_SYSTEM_COEFS = ("gamma", "delta1", "delta2", "pred_growth", "pred_refuge")


def _amplitude_scaled(m: ModelSystem, sigma: float) -> ModelSystem:
    """Copy of the model with every seasonal amplitude scaled by sigma.

    sigma = 0 gives the autonomous mean-coefficient system, sigma = 1 the
    model itself.  Used to continue orbits from the autonomous equilibria
    up to full forcing.
    """
    from dataclasses import replace

    if sigma == 1.0:
        return m

    def scaled(obj, names):
        changes = {}
        for name in names:
            coef = getattr(obj, name)
            if coef is not None and coef.amplitude != 0.0:
                changes[name] = replace(coef, amplitude=sigma * coef.amplitude)
        return changes

    growth = replace(m.growth, **scaled(m.growth, _GROWTH_COEFS))
    response = replace(m.response, **scaled(m.response, _RESPONSE_COEFS))
    return replace(m, growth=growth, response=response,
                   **scaled(m, _SYSTEM_COEFS))


def _mean_field(m: ModelSystem):
    """Autonomous proxy field: seasonal coefficients replaced by their means.

    Built-in coefficient shapes average to their mean value over one period;
    custom callables fall back to the t = 0 section of the original field.
    """
    try:
        return _amplitude_scaled(m, 0.0)
    except (TypeError, ValueError):
        return m


def _equilibrium_seeds(m: ModelSystem, box: tuple[float, float]) -> list[np.ndarray]:
    """Interior equilibria of the mean-coefficient autonomous system.

    The seasonal coexistence orbit oscillates around the corresponding
    autonomous equilibrium for moderate forcing amplitudes, so these points
    are far better Newton seeds than any coarse grid node, in particular
    for strongly unstable orbits whose Newton basin is tiny.
    """
    from scipy.optimize import root

    m0 = _mean_field(m)
    n_max, p_max = box
    seeds: list[np.ndarray] = []
    starts = [(fn * n_max, fp * p_max)
              for fn in (0.15, 0.35, 0.55, 0.8)
              for fp in (0.02, 0.1, 0.3, 0.6)]
    for start in starts:
        try:
            res = root(lambda z: m0.rhs(0.0, z), start,
                       jac=lambda z: m0.jacobian(0.0, z), method="hybr",
                       options={"xtol": 1e-12})
        except (DomainError, ValueError, FloatingPointError):
            continue
        if not res.success:
            continue
        z = res.x
        if z[0] <= 1e-6 or z[1] <= 1e-6 or z[0] > n_max or z[1] > p_max:
            continue
        if all(np.linalg.norm(z - other) > 1e-8 for other in seeds):
            seeds.append(z.copy())
    return seeds


def _ramp_amplitude(m: ModelSystem, z: np.ndarray, n: int, tol: float,
                    settings: IntegratorSettings) -> Optional[PeriodicOrbit]:
    """Continue an interior orbit from an autonomous equilibrium in amplitude.

    At zero seasonal amplitude the orbit sits exactly on the equilibrium;
    adaptive amplitude steps keep each Newton start inside the basin of the
    shifted orbit.  A step whose Newton run converges to a boundary orbit
    instead of an interior one has left the branch and is treated as a
    failure.
    """
    x, sigma, step = z, 0.0, 0.25
    while sigma < 1.0:
        target = min(1.0, sigma + step)
        try:
            found = find_orbit_newton(_amplitude_scaled(m, target), x, n,
                                      tol, settings, max_iter=25)
            if found.location != "interior":
                raise NoConvergence("left the interior branch")
        except (OrbitError, IntegrationError, DomainError, ValueError):
            step *= 0.5
            if step < 1.0 / 256.0:
                return None
            continue
        x, sigma = found.initial_state, target
        if sigma >= 1.0:
            return found
        step = min(2.0 * step, 0.25)
    return None


def _continuation_orbits(m: ModelSystem, n: int, tol: float,
                         settings: IntegratorSettings) -> list[PeriodicOrbit]:
    """Interior orbits reached from the autonomous equilibria.

    Tries plain Newton from each mean-field equilibrium, then multiple
    shooting (whose basin shrinks far more slowly with instability), then
    amplitude continuation.  Only interior orbits are returned; boundary
    orbits are already covered by the grid.
    """
    box = invariant_box(m)
    out: list[PeriodicOrbit] = []
    for z in _equilibrium_seeds(m, box):
        # Plain Newton can converge to a nearby boundary orbit (its basins
        # interleave with the interior one when the orbit hugs an axis), so a
        # wrong-location success falls through to the next strategy too.
        strategies = (
            lambda: find_orbit_newton(m, z, n, tol, settings, max_iter=12),
            lambda: find_orbit_multiple_shooting(m, z, n, tol=tol,
                                                 settings=settings),
            lambda: _ramp_amplitude(m, z, n, tol, settings),
        )
        for strategy in strategies:
            try:
                orbit = strategy()
            except (OrbitError, IntegrationError, DomainError, ValueError):
                continue
            if orbit is not None and orbit.location == "interior":
                out.append(orbit)
                break
    return out


def _newton_worker(payload):
    m, seed, n, tol, settings, max_iter = payload
    try:
        return find_orbit_newton(m, seed, n, tol, settings, max_iter)
    except (OrbitError, IntegrationError, DomainError, ValueError):
        return None


def grid_search_orbits(m: ModelSystem, n: int = 1, grid: tuple[int, int] = (20, 20),
                       tol: float = 1e-9,
                       settings: IntegratorSettings = DEFAULT_SETTINGS,
                       max_iter: int = 50, jobs: int = 1,
                       extra_seeds: Optional[Sequence] = None,
                       continuation: bool = True) -> list[PeriodicOrbit]:
    """Newton searches seeded from a coarse grid over the invariant box.

    Seeds that fail (no convergence, singular Jacobian, escape from the
    box) are dropped silently; converged orbits are deduplicated when their
    initial states agree within 1e-6, keeping the smaller residual.  Besides
    the grid, the interior equilibria of the mean-coefficient autonomous
    system are tried as seeds, both directly and through amplitude
    continuation, which reaches strongly unstable orbits whose Newton
    basins no coarse grid can hit.
    """
    box = invariant_box(m)
    ns = np.linspace(0.0, box[0], grid[0])
    ps = np.linspace(0.0, box[1], grid[1])
    seeds = [np.array([N, P]) for N in ns for P in ps]
    seeds.extend(_equilibrium_seeds(m, box))
    if extra_seeds is not None:
        seeds.extend(np.asarray(s, dtype=float) for s in extra_seeds)

    payloads = [(m, seed, n, tol, settings, max_iter) for seed in seeds]
    if jobs > 1:
        import multiprocessing

        with multiprocessing.get_context("fork").Pool(jobs) as pool:
            results = pool.map(_newton_worker, payloads, chunksize=4)
    else:
        results = [_newton_worker(p) for p in payloads]
    if continuation:
        results.extend(_continuation_orbits(m, n, tol, settings))

    found: list[PeriodicOrbit] = []
    for orbit in results:
        if orbit is None:
            continue
        for i, other in enumerate(found):
            if np.linalg.norm(orbit.initial_state - other.initial_state) < 1e-6:
                if orbit.residual < other.residual:
                    found[i] = orbit
                break
        else:
            found.append(orbit)
    found.sort(key=lambda o: (o.initial_state[0], o.initial_state[1]))
    return found


# ---------------------------------------------------------------------------
# Boundary orbits (scalar problems)
# ---------------------------------------------------------------------------

def _scalar_fixed_point(flow: Callable[[float], tuple[float, float]],
                        lo: float, hi: float, tol: float,
                        what: str) -> tuple[float, float]:
    """Locate the fixed point of a scalar period map inside [lo, hi].

    `flow` returns (map value, flow derivative) for a start value.  Returns
    (fixed point, multiplier).  Degenerate brackets (constant coefficients)
    collapse to a point; otherwise the sign change promised by the theory is
    bracketed by bisection and polished by Newton.
    """
    from scipy.optimize import brentq

    def g(x: float) -> float:
        return flow(x)[0] - x

    bracketed = False
    if hi - lo < 1e-12 * max(1.0, abs(hi)):
        x = 0.5 * (lo + hi)
    else:
        ga, gb = g(lo), g(hi)
        if ga == 0.0:
            x = lo
        elif gb == 0.0:
            x = hi
        elif ga * gb > 0.0:
            raise BracketFailure(
                f"{what}: map displacement has the same sign at both ends of "
                f"[{lo:.8g}, {hi:.8g}] (g={ga:.3g} and {gb:.3g})")
        else:
            x = brentq(g, lo, hi, xtol=1e-12, rtol=8.9e-16)
            bracketed = True

    # Newton polish with the exact flow derivative.  The reachable residual
    # is bounded below by |multiplier| * eps * |x| (one ulp of start error,
    # amplified over the period), so acceptance is against that floor as
    # well as `tol`.  Iterates are confined to the (padded) bracket: a step
    # that leaves it means the local linear model is garbage, and for stiff
    # maps it can land on a negative density.
    eps = float(np.finfo(float).eps)
    pad = 0.05 * max(hi - lo, 1e-9)
    blo, bhi = max(lo - pad, 0.0), hi + pad
    x_bis, mult = x, math.nan
    for _ in range(30):
        value, mult = flow(x)
        resid = value - x
        floor = 4.0 * abs(mult) * eps * max(1.0, abs(x))
        if abs(resid) < max(tol, floor):
            return x, mult
        if bracketed and abs(resid) > 1e6 * max(tol, floor):
            # Bisection has pinned the sign change to ~1e-12 yet the
            # displacement there is enormous: the multiplier is beyond
            # 1/eps, the period map saturates to a step function at float
            # resolution, and no start value can do better than the
            # bisection root.  (The reported derivative is then the
            # saturated local value, not the orbit's multiplier; orbit
            # construction recomputes multipliers by quadrature.)
            return x_bis, mult
        denom = mult - 1.0
        if abs(denom) < 1e-12:
            raise NoConvergence(f"{what}: degenerate scalar Newton (multiplier ~ 1)")
        x = min(max(x - resid / denom, blo), bhi)
    raise NoConvergence(f"{what}: scalar Newton stalled, residual {resid:.3g}")


def _coefficient_band(m: ModelSystem, values: Callable[[float], float],
                      samples: int = 128) -> tuple[float, float]:
    ts = np.linspace(0.0, m.period, samples, endpoint=False)
    vals = np.array([values(t) for t in ts])
    return float(vals.min()), float(vals.max())


def _scalar_orbit(m: ModelSystem, axis: str, x0: float, mult: float, nu: float,
                  settings: IntegratorSettings) -> ScalarOrbit:
    if axis == "prey":
        res = _prey_flow_run(m, x0, nu, settings, dense=True)
    else:
        res = integrate_pred_axis(m, x0, 0.0, m.period, settings, dense=True)
    residual = abs(res.value - x0)
    return ScalarOrbit(axis=axis, value0=x0, multiplier=mult, residual=residual,
                       period=m.period, solution=res.solution, nu=nu)


def _scalar_solve_settings(settings: IntegratorSettings) -> IntegratorSettings:
    # The residual floor of the shooting system is the integrator's own
    # per-segment error; these are scalar problems, so buying three extra
    # digits costs next to nothing and keeps the floor far below `tol`.
    return replace(settings,
                   rel_tol=min(settings.rel_tol, 1e-12),
                   abs_tol=min(settings.abs_tol, 1e-14))


def _prey_axis_nodes(m: ModelSystem, seeds: np.ndarray,
                     settings: IntegratorSettings, tol: float, what: str,
                     max_iter: int = 40) -> tuple[np.ndarray, float]:
    """Cyclic multiple shooting for a periodic orbit of the prey-only flow.

    A transversal exponent q makes the one-period map amplify start errors
    by e^q; once q exceeds log(1/eps) (about 36) no single start value can
    track the orbit across the period and the map degenerates to a float
    step function.  Splitting the period into K segments caps the per-piece
    amplification at e^(q/K), which conditions the problem for any q double
    precision can represent.  Unknowns are the node densities x_i at uniform
    section times; the cyclic system phi_i(x_i) = x_{i+1 mod K} is solved by
    damped Newton with the exact per-segment flow derivatives.

    Returns (node values, final residual max |phi_i(x_i) - x_{i+1}|).
    """
    settings = _scalar_solve_settings(settings)
    K = len(seeds)
    edges = np.linspace(0.0, m.period, K + 1)
    idx = np.arange(K)

    def shoot(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        vals = np.empty(K)
        ders = np.empty(K)
        for i in range(K):
            res = integrate_prey_axis(m, float(x[i]), edges[i], edges[i + 1],
                                      settings)
            vals[i] = res.value
            ders[i] = res.derivative
        return vals - np.roll(x, -1), vals, ders

    x = np.maximum(np.asarray(seeds, dtype=float), 0.0)
    r, _, ders = shoot(x)
    norm = float(np.max(np.abs(r)))
    for _ in range(max_iter):
        scale = max(1.0, float(np.max(np.abs(x))))
        if norm < tol * scale:
            return x, norm
        jac = np.zeros((K, K))
        jac[idx, idx] = ders
        jac[idx, (idx + 1) % K] = -1.0
        try:
            dx = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(f"{what}: shooting matrix singular ({exc})")
        # Damped update; densities stay nonnegative.
        step = 1.0
        for _ in range(12):
            x_new = np.maximum(x + step * dx, 0.0)
            r_new, _, ders_new = shoot(x_new)
            norm_new = float(np.max(np.abs(r_new)))
            if norm_new < norm:
                x, r, ders, norm = x_new, r_new, ders_new, norm_new
                break
            step *= 0.5
        else:
            raise NoConvergence(
                f"{what}: damping exhausted at residual {norm:.3g}")
    raise NoConvergence(f"{what}: multiple shooting stalled, residual {norm:.3g}")


def _build_prey_axis_orbit(m: ModelSystem, nodes: np.ndarray, residual: float,
                           settings: IntegratorSettings) -> PeriodicOrbit:
    """Assemble a prey-axis orbit from shooting nodes.

    Both multiplier logs are summed from per-segment quadratures along the
    re-integrated segments, never from one pass over the full period, so the
    construction stays valid for orbits whose transversal exponent exceeds
    float range.
    """
    settings = _scalar_solve_settings(settings)
    K = len(nodes)
    edges = np.linspace(0.0, m.period, K + 1)
    jac = m.jacobian_compiled()
    q1 = 0.0
    q2 = 0.0
    for i in range(K):
        res = integrate_prey_axis(m, float(nodes[i]), edges[i], edges[i + 1],
                                  settings, dense=True)
        sol = res.solution
        q1 += quadrature_along(sol.dense, lambda t, y: jac(t, y[0], 0.0)[0])
        q2 += quadrature_along(sol.dense, lambda t, y: jac(t, y[0], 0.0)[3])
    U = np.diag([_exp_guard(q1), _exp_guard(q2)])
    lam = (complex(U[0, 0]), complex(U[1, 1]))
    return PeriodicOrbit(initial_state=np.array([float(nodes[0]), 0.0]),
                         period_multiple=1, monodromy=U, multipliers=lam,
                         stability=_classify(lam), residual=residual,
                         log_det=q1 + q2, log_multipliers=(q1, q2),
                         nodes=np.asarray(nodes, dtype=float))


def _relaxed_prey_seeds(m: ModelSystem, times: np.ndarray, x0: float,
                        settings: IntegratorSettings,
                        backward: bool) -> np.ndarray:
    """Sample a prey-only orbit by two-period relaxation for shooting seeds.

    The carrying-capacity orbit attracts forward in time; the threshold
    orbit attracts backward (time reversal flips its transversal exponent),
    and backward it draws in the whole strip between extinction and the
    carrying-capacity orbit.  Relaxation therefore lands on the orbit to
    within the dense-output error and leaves Newton only polishing work,
    however sharp the threshold is.
    """
    rate, _ = m.prey_axis_compiled()
    horizon = 2.0 * m.period
    if backward:
        def f(s, y):
            return np.array([-rate(horizon - s, y[0])])
    else:
        def f(s, y):
            return np.array([rate(s, y[0])])

    st = _model_max_step(m, _scalar_solve_settings(settings))
    sol = solve(f, 0.0, np.array([float(x0)]), horizon, st, dense=True,
                nonneg=(0,))
    if backward:
        # Backward clock s = 2T - t; the second backward period covers
        # t in [0, T].
        return np.array([float(sol.at(horizon - t)[0]) for t in times])
    return np.array([float(sol.at(t + m.period)[0]) for t in times])


def prey_only_orbits_strong(m: ModelSystem, tol: float = 1e-10,
                            settings: IntegratorSettings = DEFAULT_SETTINGS,
                            segments: int = 48
                            ) -> tuple[PeriodicOrbit, PeriodicOrbit]:
    """The two prey-only periodic orbits of a strong-Allee model.

    The unstable orbit N*_- lies between the extremes of the survival
    threshold K_minus(t), the stable orbit N*_+ between the extremes of the
    carrying capacity K_plus(t).  Each is sampled by relaxation from its
    band midpoint (backward in time for N*_-, where it attracts), then
    pinned by cyclic multiple shooting, which stays well conditioned
    however sharp the threshold is.  Returns the orbits embedded on the
    prey axis as (N(t), 0), unstable first.
    """
    if not m.growth.is_strong:
        raise ValueError("prey_only_orbits_strong needs a strong-Allee growth rate")

    times = np.linspace(0.0, m.period, segments + 1)[:-1]
    out = []
    for which, tag in ((0, "N*_-"), (1, "N*_+")):
        lo, hi = _coefficient_band(m, lambda t: m.growth.zeros(t)[which])
        seeds = _relaxed_prey_seeds(m, times, 0.5 * (lo + hi), settings,
                                    backward=(which == 0))
        nodes, resid = _prey_axis_nodes(m, seeds, settings, tol,
                                        f"prey-only orbit {tag}")
        out.append(_build_prey_axis_orbit(m, nodes, resid, settings))
    return out[0], out[1]


def _prey_flow_run(m: ModelSystem, N0: float, nu: float,
                   settings: IntegratorSettings, dense: bool = False):
    """Prey-only flow, optionally harvested at constant per-capita rate nu."""
    if nu == 0.0:
        return integrate_prey_axis(m, N0, 0.0, m.period, settings, dense=dense)
    rate, rate_d = m.prey_axis_compiled()

    def f(t, y):
        return np.array([rate(t, y[0]) - nu * y[0],
                         (rate_d(t, y[0]) - nu) * y[1]])

    settings = _model_max_step(m, settings)
    sol = solve(f, 0.0, np.array([N0, 1.0]), m.period, settings,
                dense=dense, nonneg=(0,))
    return AxisResult(value=float(sol.y_end[0]), derivative=float(sol.y_end[1]),
                      solution=sol)


def mean_low_density_growth(m: ModelSystem) -> float:
    """nu* = the mean over one period of the growth rate at zero density.

    For a weak Allee effect this is the largest harvesting pressure the
    prey can absorb: below nu* a positive periodic orbit persists, at or
    above it the prey dies out.
    """
    from scipy.integrate import quad

    val, _ = quad(lambda s: m.growth.rate(s, 0.0), 0.0, m.period, limit=200)
    return val / m.period


def prey_only_orbit_weak(m: ModelSystem, nu: float = 0.0, tol: float = 1e-10,
                         settings: IntegratorSettings = DEFAULT_SETTINGS
                         ) -> ScalarOrbit:
    """The globally stable prey-only orbit of a weak-Allee model.

    Solves dN/dt = (k(t, N) - nu) N for the unique positive periodic
    solution, which exists when the harvesting rate nu is below the mean
    low-density growth rate nu*.  Located by long-run integration (global
    stability makes any positive start work), then polished by Newton.
    """
    if nu < 0.0:
        raise ValueError("nu must be nonnegative")
    if m.growth.is_strong:
        raise ValueError("prey_only_orbit_weak needs a weak-Allee growth rate")
    nu_star = mean_low_density_growth(m)
    if nu >= nu_star:
        raise NuAboveThreshold(
            f"nu = {nu:.8g} is not below the mean low-density growth rate "
            f"nu* = {nu_star:.8g}")

    x = _coefficient_band(m, lambda t: m.growth.zeros(t)[1])[1]  # max K_plus
    for _ in range(500):
        nxt = _prey_flow_run(m, x, nu, settings).value
        drift = abs(nxt - x)
        x = nxt
        if drift < 1e-6:
            break
    else:
        raise NoConvergence("long-run integration did not settle in 500 periods")

    def flow(v: float) -> tuple[float, float]:
        res = _prey_flow_run(m, v, nu, settings)
        return res.value, res.derivative

    x, mult = _scalar_fixed_point(flow, x, x, tol, f"prey-only orbit (nu={nu:g})")
    return _scalar_orbit(m, "prey", x, mult, nu, settings)


def predator_only_orbit_lg(m: ModelSystem, tol: float = 1e-10,
                           settings: IntegratorSettings = DEFAULT_SETTINGS
                           ) -> PeriodicOrbit:
    """The predator-only periodic orbit of a Leslie-Gower model.

    With no prey the predator follows a seasonal logistic equation whose
    periodic solution lies between the extremes of its carrying capacity:
    the refuge coefficient c(t) for the plain form, a(t)*n(t) for the form
    with growth rate a.  Returned embedded on the predator axis as (0, P(t)).
    """
    if m.family is Family.PREDATOR_PREY:
        raise ValueError("predator-only orbits need a Leslie-Gower family")

    if m.family is Family.LESLIE_GOWER:
        lo, hi = _coefficient_band(m, lambda t: m.pred_refuge(t))
    else:
        lo, hi = _coefficient_band(
            m, lambda t: m.pred_growth(t) * m.pred_refuge(t))

    def flow(x: float) -> tuple[float, float]:
        res = integrate_pred_axis(m, x, 0.0, m.period, settings)
        return res.value, res.derivative

    x0, _ = _scalar_fixed_point(flow, lo, hi, tol, "predator-only orbit P0*")
    return _build_orbit(m, (0.0, x0), 1, settings)


def embed_on_prey_axis(m: ModelSystem, N0: float,
                       settings: IntegratorSettings = DEFAULT_SETTINGS
                       ) -> PeriodicOrbit:
    """Wrap a prey-only fixed point as a full planar orbit (N(t), 0)."""
    return _build_orbit(m, (N0, 0.0), 1, settings)


# ---------------------------------------------------------------------------
# Multipliers, period detection, fixed-point index
# ---------------------------------------------------------------------------

def floquet(m: ModelSystem, orbit: PeriodicOrbit,
            settings: IntegratorSettings = DEFAULT_SETTINGS
            ) -> tuple[complex, complex]:
    """Floquet multipliers of an orbit, recomputed from a fresh monodromy.

    For boundary orbits the monodromy matrix is exactly triangular and the
    multipliers keep a fixed meaning: the first is the prey direction, the
    second the predator direction.  They are evaluated in log space by
    quadrature along the orbit, so huge and tiny magnitudes keep relative
    accuracy.  Interior multipliers are eigenvalues sorted by decreasing
    magnitude.
    """
    rebuilt = _build_orbit(m, orbit.initial_state, orbit.period_multiple, settings)
    return rebuilt.multipliers


@dataclass(frozen=True)
class PeriodVerdict:
    """Outcome of period detection: periodic(n), extinct, or aperiodic."""

    kind: str
    n: Optional[int]
    sections: np.ndarray
    final_state: np.ndarray

    def __str__(self) -> str:
        return f"periodic({self.n})" if self.kind == "periodic" else self.kind

    def __eq__(self, other) -> bool:
        if isinstance(other, str):
            return str(self) == other
        if isinstance(other, PeriodVerdict):
            return self.kind == other.kind and self.n == other.n
        return NotImplemented


_EXTINCTION_P = 1e-8
_SECTION_TOL = 1e-6


def detect_period(m: ModelSystem, x0, n_max: int = 16,
                  transient_periods: int = 200,
                  settings: IntegratorSettings = DEFAULT_SETTINGS) -> PeriodVerdict:
    """Classify the long-run behaviour from x0 on the section t = 0.

    Integrates through the transient, then compares section states k and
    k+n; the smallest n <= n_max that matches within 1e-6 for three
    consecutive k is reported as periodic(n).  A predator below 1e-8 at the
    end of the transient counts as extinct.  Anything else is aperiodic.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    if transient_periods < 0:
        raise ValueError("transient_periods must be nonnegative")
    T = m.period
    x = np.asarray(x0, dtype=float)
    if transient_periods > 0:
        x = integrate(m, x, 0.0, transient_periods * T, settings).y_end
    if x[1] < _EXTINCTION_P:
        return PeriodVerdict("extinct", None, np.array([x]), x)

    marks = np.arange(n_max + 3) * T
    sol = integrate(m, x, 0.0, float(marks[-1]), settings, t_eval=marks)
    secs = sol.y_eval
    for n in range(1, n_max + 1):
        if all(np.linalg.norm(secs[k + n] - secs[k]) < _SECTION_TOL
               for k in range(3)):
            return PeriodVerdict("periodic", n, secs, secs[-1])
    return PeriodVerdict("aperiodic", None, secs, secs[-1])


@dataclass(frozen=True)
class LedgerEntry:
    orbit: PeriodicOrbit
    index: int
    multiplicity: int

    @property
    def location(self) -> str:
        return self.orbit.location


_LEDGER_BASE_NOTE = (
    "interior orbits weighted x4 (one mirror image per open quadrant); "
    "the reflection construction fixes the axis weights but the interior "
    "multiplicity is an assumption of this ledger")


@dataclass(frozen=True)
class IndexLedger:
    """Fixed-point indexes of the symmetric extension of the period map.

    The degree of I - map over the expanded symmetric box equals 1, so the
    weighted indexes of all fixed points must sum to 1 when every orbit has
    been found.  The origin is its own mirror image (weight 1), an orbit on
    an axis has one mirror (weight 2), and an interior orbit appears once
    per quadrant (weight 4).
    """

    entries: tuple[LedgerEntry, ...]
    total: int
    notes: str = _LEDGER_BASE_NOTE

    @property
    def consistent(self) -> bool:
        return self.total == 1

    def summary(self) -> str:
        lines = ["fixed-point index ledger (degree of I - map over the "
                 "symmetric box = 1)"]
        for e in self.entries:
            N0, P0 = e.orbit.initial_state
            lines.append(
                f"  {e.location:<14} x0=({N0: .8g}, {P0: .8g})  index "
                f"{e.index:+d}  x{e.multiplicity}  -> {e.index * e.multiplicity:+d}")
        if self.consistent:
            verdict = "consistent"
        else:
            deficit = 1 - self.total
            verdict = (f"INCONSISTENT, deficit {deficit:+d}: undetected or "
                       "degenerate fixed points remain")
            if deficit % 4 == 0:
                count = abs(deficit) // 4
                sign = "-1" if deficit < 0 else "+1"
                verdict += (f"; consistent with {count} undetected interior "
                            f"orbit{'s' if count > 1 else ''} of index {sign}"
                            " (x4)")
                if deficit == -4:
                    verdict += (", e.g. a basin-boundary saddle reachable "
                                "only backward in time")
        lines.append(f"  total {self.total:+d} ({verdict})")
        lines.append(f"  note: {self.notes}")
        return "\n".join(lines)


def index_ledger(m: ModelSystem, orbits: Sequence[PeriodicOrbit]) -> IndexLedger:
    """Fixed-point indexes (sign of det(I - U)) with reflection weights.

    Raises DegenerateOrbit when any multiplier is 1 within 1e-6, since the
    index is undefined there.  The notes record the stable/unstable census
    together with the bound the degree argument gives for the family: for
    the predator-prey form the number of stable orbits is at most the
    number of unstable ones plus one, for the Leslie-Gower forms the plus
    one drops.
    """
    entries = []
    total = 0
    for orbit in orbits:
        for lam in orbit.multipliers:
            if abs(lam - 1.0) <= 1e-6:
                raise DegenerateOrbit(
                    f"multiplier {lam:.8g} within 1e-6 of 1 at "
                    f"x0 = ({orbit.initial_state[0]:.6g}, "
                    f"{orbit.initial_state[1]:.6g})")
        l1, l2 = orbit.multipliers
        if l1.imag != 0.0 or l2.imag != 0.0:
            # Complex pair: det(I - U) = |1 - lambda|^2 > 0.
            index = 1
        else:
            # Sign arithmetic: the factor product (1 - l1)(1 - l2) can
            # overflow for multipliers far outside float range.
            index = 1 if (l1.real < 1.0) == (l2.real < 1.0) else -1
        multiplicity = {"origin": 1, "prey-axis": 2,
                        "predator-axis": 2, "interior": 4}[orbit.location]
        entries.append(LedgerEntry(orbit=orbit, index=index,
                                   multiplicity=multiplicity))
        total += index * multiplicity

    stable = sum(1 for o in orbits if o.stability is Stability.STABLE)
    unstable = sum(1 for o in orbits if o.stability is Stability.UNSTABLE)
    if m.family is Family.PREDATOR_PREY:
        bound_txt, bound_ok = "stable <= unstable + 1", stable <= unstable + 1
    else:
        bound_txt, bound_ok = "stable <= unstable", stable <= unstable
    notes = (f"{_LEDGER_BASE_NOTE}; census {stable} stable / {unstable} "
             f"unstable, family bound {bound_txt} "
             f"{'holds' if bound_ok else 'FAILS'}")
    return IndexLedger(entries=tuple(entries), total=total, notes=notes)


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def write_orbits_csv(path, orbits: Sequence[PeriodicOrbit]) -> None:
    """Write orbit initial states, multipliers and stability as CSV."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("n,N0,P0,lambda1_re,lambda1_im,lambda2_re,lambda2_im,"
                 "stability,residual\n")
        for o in orbits:
            l1, l2 = o.multipliers
            fh.write(f"{o.period_multiple},{o.initial_state[0]:.17g},"
                     f"{o.initial_state[1]:.17g},{l1.real:.17g},{l1.imag:.17g},"
                     f"{l2.real:.17g},{l2.imag:.17g},{o.stability.value},"
                     f"{o.residual:.17g}\n")
