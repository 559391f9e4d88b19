"""Command line interface for the seasonal predator-prey toolkit.

Subcommands
-----------
simulate   integrate one trajectory, write trajectory.csv + a gnuplot script
orbits     find periodic orbits, write orbits.csv + the fixed-point ledger
regime     classify persistence/extinction, write regime.txt + regime.json
sweep      walk one coefficient, write sweep.csv + thresholds.txt
verify     check the structural hypotheses, write hypotheses.txt

Every numeric command verifies the structural hypotheses first and refuses
to run on a model that violates them (--skip-verify bypasses the gate).
CSV outputs carry full double precision, so two runs of the same scenario
with the same flags produce bit-identical files.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 structural hypotheses violated.  The FLOQUET_ALLEE_LOG environment
variable sets the logging level (DEBUG, INFO, WARNING, ERROR).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import ConfigError, Scenario, builtin_names, load_scenario
from .hypotheses import HypothesisFailure, verify_hypotheses
from .integrate import (DEFAULT_SETTINGS, IntegrationError, IntegratorSettings,
                        integrate, write_trajectory_csv)
from .models import DomainError, Family, ModelSystem
from .orbits import (DegenerateOrbit, NoConvergence, OrbitError, PeriodicOrbit,
                     Stability, embed_on_prey_axis, grid_search_orbits,
                     index_ledger, prey_only_orbit_weak,
                     prey_only_orbits_strong, write_orbits_csv)
from .regime import (classify_regime, get_parameter, lg_boundary_analysis,
                     sweep_parameter, write_sweep_csv)

__all__ = [
    "EXIT_OK",
    "EXIT_CONFIG",
    "EXIT_NUMERIC",
    "EXIT_HYPOTHESIS",
    "build_parser",
    "run_simulate",
    "run_orbits",
    "run_regime",
    "run_sweep",
    "run_verify",
    "main",
]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_HYPOTHESIS = 4

_LOG = logging.getLogger("floquet_allee.cli")

# Trajectory sampling density.  Fixed (not adaptive) so that identical
# scenarios always produce identical CSV rows.
_SAMPLES_PER_PERIOD = 100

# Backward-traced ring around an unstable interior orbit: ray count and
# relative radius of the starting circle.
_RING_RAYS = 12
_RING_RADIUS = 0.05


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _parse_seed_grid(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(
            f"seed grid must look like 8x8, got {text!r}")
    try:
        n, m = (int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"seed grid must be two integers like 8x8, got {text!r}") from None
    if n < 2 or m < 2:
        raise argparse.ArgumentTypeError(
            f"seed grid needs at least 2 points per axis, got {text!r}")
    return n, m


def _parse_tol(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(
            f"tolerance must be REL,ABS like 1e-10,1e-12, got {text!r}")
    try:
        rel, abs_ = (float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"tolerance values must be numbers, got {text!r}") from None
    if rel <= 0.0 or abs_ <= 0.0:
        raise argparse.ArgumentTypeError("tolerances must be positive")
    return rel, abs_


def _default_jobs() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config", required=True, metavar="PATH",
        help="scenario file, or a builtin name: " + ", ".join(builtin_names()))
    common.add_argument(
        "--out", default=".", metavar="DIR",
        help="output directory (created if missing, default: current)")
    common.add_argument(
        "--jobs", type=int, default=_default_jobs(), metavar="N",
        help="worker processes for seed searches and sweeps "
             "(default: available processors)")
    common.add_argument(
        "--tol", type=_parse_tol, default=None, metavar="REL,ABS",
        help="integrator tolerances (default: "
             f"{DEFAULT_SETTINGS.rel_tol:g},{DEFAULT_SETTINGS.abs_tol:g})")
    common.add_argument(
        "--skip-verify", action="store_true",
        help="run numerics without checking the structural hypotheses")

    parser = argparse.ArgumentParser(
        prog="floquet-allee",
        description="Periodic orbits, Floquet multipliers and "
                    "persistence/extinction regimes of seasonally forced "
                    "predator-prey systems with an Allee effect.")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser(
        "simulate", parents=[common],
        help="integrate the scenario trajectory and write CSV + plot script")

    orbits = sub.add_parser(
        "orbits", parents=[common],
        help="find periodic orbits, their multipliers and the index ledger")
    orbits.add_argument(
        "--seed-grid", type=_parse_seed_grid, default=(6, 6), metavar="NxM",
        help="Newton seed grid over the invariant box (default: 6x6)")
    orbits.add_argument(
        "--backward", action="store_true",
        help="trace phase curves backward in time from a ring around the "
             "first unstable interior orbit")

    regime = sub.add_parser(
        "regime", parents=[common],
        help="classify the persistence/extinction regime")
    regime.add_argument(
        "--seed-grid", type=_parse_seed_grid, default=None, metavar="NxM",
        help="force a full grid-seeded interior orbit search")

    sub.add_parser(
        "sweep", parents=[common],
        help="sweep the scenario parameter and locate regime thresholds")

    sub.add_parser(
        "verify", parents=[common],
        help="check the structural hypotheses and report")

    return parser


def _configure_logging() -> None:
    level_name = os.environ.get("FLOQUET_ALLEE_LOG", "WARNING").upper()
    level = logging.getLevelName(level_name)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(
        level=level, format="%(levelname)s %(name)s: %(message)s")


def _settings_from(args: argparse.Namespace) -> IntegratorSettings:
    if args.tol is None:
        return DEFAULT_SETTINGS
    rel, abs_ = args.tol
    return replace(DEFAULT_SETTINGS, rel_tol=rel, abs_tol=abs_)


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

_TRAJECTORY_PLOT = """\
# Render with: gnuplot {name}.gp
# Left: prey and predator abundance over time.  Right: the phase curve
# (N, P, t).  The CSV has one header line, hence `skip 1`.
set datafile separator ","
set terminal pngcairo size 1280,540
set output "{name}.png"
set multiplot layout 1,2
set xlabel "t"
set ylabel "abundance"
plot "{name}.csv" skip 1 using 1:2 with lines lw 2 title "N(t)", \\
     "{name}.csv" skip 1 using 1:3 with lines lw 2 title "P(t)"
set xlabel "N"
set ylabel "P"
set zlabel "t"
set view 60, 30
splot "{name}.csv" skip 1 using 2:3:1 with lines lw 1 title "(N, P, t)"
unset multiplot
unset output
"""


def _trajectory_times(periods: float, period: float) -> np.ndarray:
    rows = int(round(abs(periods) * _SAMPLES_PER_PERIOD))
    return np.linspace(0.0, periods * period, rows + 1)


def run_simulate(scenario: Scenario, out_dir: Path,
                 settings: IntegratorSettings) -> int:
    m = scenario.model
    times = _trajectory_times(scenario.periods, m.period)
    horizon = float(times[-1])
    _LOG.info("simulate %s: %.6g periods from (%.6g, %.6g)", scenario.name,
              scenario.periods, *scenario.initial_state)

    sol = integrate(m, np.array(scenario.initial_state), 0.0, horizon,
                    settings, t_eval=times)
    write_trajectory_csv(out_dir / "trajectory.csv", sol.t_eval, sol.y_eval)
    (out_dir / "trajectory.gp").write_text(
        _TRAJECTORY_PLOT.format(name="trajectory"), encoding="utf-8")

    final = sol.y_eval[-1]
    print(f"simulated {scenario.name}: {scenario.periods:g} periods, "
          f"{len(times)} samples, final state "
          f"N = {final[0]:.8g}, P = {final[1]:.8g}")
    print(f"wrote {out_dir / 'trajectory.csv'} and {out_dir / 'trajectory.gp'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# orbits
# ---------------------------------------------------------------------------

def _boundary_orbits(m: ModelSystem,
                     settings: IntegratorSettings
                     ) -> tuple[list[PeriodicOrbit], list[str]]:
    """All boundary orbits of the model, with the analysis notes."""
    if m.family is Family.PREDATOR_PREY:
        found = [embed_on_prey_axis(m, 0.0, settings)]
        if m.growth.is_strong:
            found.extend(prey_only_orbits_strong(m, settings=settings))
        else:
            w = prey_only_orbit_weak(m, settings=settings)
            found.append(embed_on_prey_axis(m, w.value0, settings))
        return found, []
    report = lg_boundary_analysis(m, settings)
    found = [o for o in (report.origin, report.prey_minus, report.prey_plus,
                         report.predator_only) if o is not None]
    return found, list(report.notes)


def _merge_orbits(boundary: Sequence[PeriodicOrbit],
                  interior: Sequence[PeriodicOrbit]) -> list[PeriodicOrbit]:
    """Boundary records win over grid re-finds of the same orbit.

    The axis solvers carry log-space multipliers (and shooting nodes when
    needed), which the general Newton records lack, so a grid result within
    1e-6 of a boundary orbit is a duplicate and is dropped.
    """
    merged = list(boundary)
    for orbit in interior:
        if any(np.linalg.norm(orbit.initial_state - kept.initial_state) < 1e-6
               for kept in merged):
            continue
        merged.append(orbit)
    merged.sort(key=lambda o: (o.initial_state[0], o.initial_state[1]))
    return merged


_RING_PLOT = """\
# Render with: gnuplot backward_curves.gp
# Phase curves traced backward in time from a ring of starts around an
# unstable interior orbit; backward time makes the orbit attracting, so
# the curves settle onto it.  Columns: ray, t, N, P.
set datafile separator ","
set terminal pngcairo size 720,560
set output "backward_curves.png"
set xlabel "N"
set ylabel "P"
plot for [k=0:{last_ray}] "backward_curves.csv" skip 1 \\
    using ($1==k?$3:1/0):4 with lines notitle
unset output
"""


def _write_backward_ring(m: ModelSystem, orbit: PeriodicOrbit,
                         periods: float, out_dir: Path,
                         settings: IntegratorSettings) -> int:
    """Trace a ring of starts around `orbit` backward for `periods` periods.

    Returns the number of rays that integrated to the full horizon; rays
    that blow up backward (the system is dissipative, so backward time can
    leave the invariant box) are dropped with a warning.
    """
    x_star = orbit.initial_state
    times = _trajectory_times(-periods, m.period)
    rows: list[tuple[int, float, float, float]] = []
    traced = 0
    for ray in range(_RING_RAYS):
        theta = 2.0 * np.pi * ray / _RING_RAYS
        x0 = x_star * (1.0 + _RING_RADIUS * np.array([np.cos(theta),
                                                      np.sin(theta)]))
        try:
            sol = integrate(m, x0, 0.0, float(times[-1]), settings,
                            t_eval=times)
        except IntegrationError as exc:
            _LOG.warning("backward ray %d from (%.6g, %.6g) failed: %s",
                         ray, x0[0], x0[1], exc)
            continue
        rows.extend((ray, float(t), float(y[0]), float(y[1]))
                    for t, y in zip(sol.t_eval, sol.y_eval))
        traced += 1
    if traced == 0:
        raise NoConvergence(
            "backward tracing failed on every ray: no phase curves written")

    with open(out_dir / "backward_curves.csv", "w", encoding="utf-8") as fh:
        fh.write("ray,t,N,P\n")
        for ray, t, n, p in rows:
            fh.write(f"{ray},{t:.17g},{n:.17g},{p:.17g}\n")
    (out_dir / "backward_curves.gp").write_text(
        _RING_PLOT.format(last_ray=_RING_RAYS - 1), encoding="utf-8")
    return traced


def run_orbits(scenario: Scenario, out_dir: Path,
               settings: IntegratorSettings, seed_grid: tuple[int, int],
               jobs: int, backward: bool) -> int:
    m = scenario.model
    _LOG.info("orbit search on %s: boundary solvers + %dx%d seed grid",
              scenario.name, *seed_grid)

    boundary, notes = _boundary_orbits(m, settings)
    interior = grid_search_orbits(m, grid=seed_grid, settings=settings,
                                  jobs=jobs)
    orbits = _merge_orbits(boundary, interior)
    if not orbits:
        raise NoConvergence("no periodic orbits found: every seed failed")

    write_orbits_csv(out_dir / "orbits.csv", orbits)

    lines = [f"periodic orbits of {scenario.name} "
             f"({len(orbits)} found, seed grid {seed_grid[0]}x{seed_grid[1]})"]
    lines.extend(f"  [{o.location}] {o}" for o in orbits)
    try:
        ledger = index_ledger(m, orbits)
        lines.append(ledger.summary())
    except DegenerateOrbit as exc:
        lines.append(f"index ledger unavailable: {exc}")
    for note in notes:
        lines.append(f"note: {note}")
    text = "\n".join(lines)
    (out_dir / "ledger.txt").write_text(text + "\n", encoding="utf-8")
    print(text)

    if backward:
        unstable = [o for o in orbits if o.location == "interior"
                    and o.stability is Stability.UNSTABLE]
        if not unstable:
            print("backward tracing skipped: no unstable interior orbit")
        else:
            traced = _write_backward_ring(m, unstable[0], scenario.periods,
                                          out_dir, settings)
            print(f"traced {traced} backward phase curves around "
                  f"x0 = ({unstable[0].initial_state[0]:.6g}, "
                  f"{unstable[0].initial_state[1]:.6g}); wrote "
                  f"{out_dir / 'backward_curves.csv'}")

    print(f"wrote {out_dir / 'orbits.csv'} and {out_dir / 'ledger.txt'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# regime
# ---------------------------------------------------------------------------

def run_regime(scenario: Scenario, out_dir: Path,
               settings: IntegratorSettings,
               seed_grid: Optional[tuple[int, int]]) -> int:
    m = scenario.model
    if m.family is Family.PREDATOR_PREY:
        report = classify_regime(m, settings, grid=seed_grid)
    else:
        report = lg_boundary_analysis(m, settings)
    text = report.summary()
    (out_dir / "regime.txt").write_text(text + "\n", encoding="utf-8")
    (out_dir / "regime.json").write_text(
        json.dumps(report.as_dict(), indent=2) + "\n", encoding="utf-8")
    print(text)
    print(f"wrote {out_dir / 'regime.txt'} and {out_dir / 'regime.json'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def run_sweep(scenario: Scenario, out_dir: Path,
              settings: IntegratorSettings, jobs: int) -> int:
    spec = scenario.sweep
    if spec is None:
        raise ConfigError(
            f"scenario {scenario.name!r} has no [sweep] section")
    m = scenario.model
    if m.family is not Family.PREDATOR_PREY:
        raise ConfigError(
            "sweeps classify boundary multipliers of the predator-prey "
            f"family only, not {m.family.value!r}")
    try:
        get_parameter(m, spec.parameter)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    _LOG.info("sweep %s over [%g, %g] with %d samples, %d jobs",
              spec.parameter, spec.lo, spec.hi, spec.samples, jobs)
    result = sweep_parameter(m, spec.parameter, spec.lo, spec.hi,
                             spec.samples, settings=settings, jobs=jobs)
    write_sweep_csv(out_dir / "sweep.csv", result)
    with open(out_dir / "thresholds.txt", "w", encoding="utf-8") as fh:
        for value, desc in result.thresholds:
            fh.write(f"{value:.17g}  {desc}\n")
        if not result.thresholds:
            fh.write(f"no thresholds crossed for {spec.parameter} in "
                     f"[{spec.lo:g}, {spec.hi:g}]\n")
    print(result.summary())
    print(f"wrote {out_dir / 'sweep.csv'} and {out_dir / 'thresholds.txt'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def run_verify(scenario: Scenario, out_dir: Path) -> int:
    report = verify_hypotheses(scenario.model)
    text = report.summary()
    (out_dir / "hypotheses.txt").write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK if report.passed else EXIT_HYPOTHESIS


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _dispatch(args: argparse.Namespace, scenario: Scenario, out_dir: Path,
              settings: IntegratorSettings) -> int:
    if args.command == "verify":
        return run_verify(scenario, out_dir)

    if not args.skip_verify:
        report = verify_hypotheses(scenario.model)
        if not report.passed:
            print(report.summary(), file=sys.stderr)
            print("refusing to run numerics on a model outside the "
                  "structural hypotheses (--skip-verify overrides)",
                  file=sys.stderr)
            return EXIT_HYPOTHESIS

    if args.command == "simulate":
        return run_simulate(scenario, out_dir, settings)
    if args.command == "orbits":
        return run_orbits(scenario, out_dir, settings,
                          seed_grid=args.seed_grid, jobs=args.jobs,
                          backward=args.backward)
    if args.command == "regime":
        return run_regime(scenario, out_dir, settings,
                          seed_grid=args.seed_grid)
    if args.command == "sweep":
        return run_sweep(scenario, out_dir, settings, jobs=args.jobs)
    raise AssertionError(f"unreachable command {args.command!r}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging()

    try:
        scenario = load_scenario(args.config)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"configuration error: cannot use output directory "
              f"{args.out!r}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        return _dispatch(args, scenario, out_dir,
                         _settings_from(args))
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HypothesisFailure as exc:
        print(exc.report.summary(), file=sys.stderr)
        print(f"hypothesis failure: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (OrbitError, IntegrationError, DomainError,
            np.linalg.LinAlgError, ValueError) as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}",
              file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
