"""Periodic orbits and extinction regimes of seasonal predator-prey systems.

The package studies planar predator-prey models with an Allee effect in the
prey and periodically varying coefficients: it finds the periodic orbits of
the forced system through the stroboscopic (period) map, computes their
Floquet multipliers in log space so that extreme contraction or expansion
keeps full relative accuracy, and classifies the long-run outcome
(coexistence, predator extinction, total extinction) from the multipliers
of the boundary orbits.  Parameter sweeps locate the thresholds where the
classification changes.

Layers, bottom up:

- ``seasonal``:    periodically modulated coefficients
- ``models``:      growth laws, functional responses, model families
- ``hypotheses``:  structural hypothesis checks behind the theory
- ``integrate``:   adaptive Runge-Kutta with variational and axis flows
- ``orbits``:      periodic orbit solvers, multipliers, fixed-point ledger
- ``regime``:      persistence/extinction classification and sweeps
- ``presets``:     the two reference parameter tables
- ``config``:      TOML scenario files and the builtin scenario library
- ``cli``:         the ``floquet-allee`` command line tool
"""

from .seasonal import Phase, SeasonalCoefficient, constant
from .models import (DomainError, Family, FunctionalResponse, GrowthFunction,
                     GrowthKind, ModelSystem, ResponseKind, in_invariant_set,
                     invariant_box)
from .hypotheses import (HypothesisCheck, HypothesisFailure, HypothesisReport,
                         verify_hypotheses)
from .integrate import (DEFAULT_SETTINGS, DenseOutput, IntegrationError,
                        IntegratorSettings, MaxStepsExceeded, Solution,
                        StepUnderflow, integrate, integrate_pred_axis,
                        integrate_prey_axis, integrate_variational,
                        quadrature_along, solve, write_trajectory_csv)
from .orbits import (BracketFailure, DegenerateOrbit, IndexLedger, LedgerEntry,
                     LeftDomain, NoConvergence, NuAboveThreshold, OrbitError,
                     PeriodVerdict, PeriodicOrbit, ScalarOrbit,
                     SingularJacobian, Stability, detect_period,
                     embed_on_prey_axis, find_orbit_multiple_shooting,
                     find_orbit_newton, floquet, grid_search_orbits,
                     index_ledger, mean_low_density_growth, poincare_map,
                     predator_only_orbit_lg, prey_only_orbit_weak,
                     prey_only_orbits_strong, write_orbits_csv)
from .regime import (AlleeKind, CaseLabel, InteriorOrbitReport,
                     LGBoundaryReport, MultiplierMismatch, RegimeReport,
                     ResponseNotPreyDependentAtAxis, SweepResult, SweepSample,
                     classify_regime, compute_R0, compute_alpha,
                     compute_boundary_multipliers, get_parameter,
                     lg_boundary_analysis, peak_growth_rate, sweep_parameter,
                     with_parameter, write_sweep_csv)
from .presets import table1_model, table2_model
from .config import (ConfigError, Scenario, SweepSpec, builtin_names,
                     load_scenario, parse_scenario)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # seasonal
    "Phase", "SeasonalCoefficient", "constant",
    # models
    "DomainError", "GrowthKind", "GrowthFunction", "ResponseKind",
    "FunctionalResponse", "Family", "ModelSystem", "invariant_box",
    "in_invariant_set",
    # hypotheses
    "HypothesisCheck", "HypothesisReport", "HypothesisFailure",
    "verify_hypotheses",
    # integration
    "IntegrationError", "StepUnderflow", "MaxStepsExceeded",
    "IntegratorSettings", "DEFAULT_SETTINGS", "DenseOutput", "Solution",
    "solve", "integrate", "integrate_variational", "integrate_prey_axis",
    "integrate_pred_axis", "quadrature_along", "write_trajectory_csv",
    # orbits
    "OrbitError", "BracketFailure", "NoConvergence", "SingularJacobian",
    "LeftDomain", "NuAboveThreshold", "DegenerateOrbit", "Stability",
    "PeriodicOrbit", "ScalarOrbit", "PeriodVerdict", "LedgerEntry",
    "IndexLedger", "poincare_map", "find_orbit_newton",
    "find_orbit_multiple_shooting", "grid_search_orbits",
    "prey_only_orbits_strong", "prey_only_orbit_weak",
    "predator_only_orbit_lg", "embed_on_prey_axis", "floquet",
    "mean_low_density_growth", "detect_period", "index_ledger",
    "write_orbits_csv",
    # regime
    "AlleeKind", "CaseLabel", "MultiplierMismatch",
    "ResponseNotPreyDependentAtAxis", "InteriorOrbitReport", "RegimeReport",
    "LGBoundaryReport", "SweepSample", "SweepResult", "compute_R0",
    "compute_boundary_multipliers", "classify_regime", "compute_alpha",
    "lg_boundary_analysis", "sweep_parameter", "get_parameter",
    "with_parameter", "peak_growth_rate", "write_sweep_csv",
    # presets
    "table1_model", "table2_model",
    # scenarios
    "ConfigError", "SweepSpec", "Scenario", "builtin_names", "load_scenario",
    "parse_scenario",
]
