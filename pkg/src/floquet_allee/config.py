"""Scenario files: models, initial states and sweeps as structured text.

A scenario is a TOML document describing one model together with the run
parameters the command line needs:

    name = "example"
    description = "optional free text"

    [model]
    family = "predator-prey"          # or "leslie-gower", "leslie-gower-pm"
    period = 365.0
    gamma  = 0.39                     # bare number: constant coefficient
    delta1 = { mean = 0.19, amplitude = 0.1, phase = "unfavorable" }
    delta2 = 0.0

    [model.growth]
    kind    = "gilpin-strong"         # "gilpin-strong-scaled", "rational-weak"
    r       = { mean = 0.11, amplitude = 0.1, phase = "favorable" }
    k_minus = { mean = 0.02, amplitude = 0.1, phase = "unfavorable" }
    k_plus  = { mean = 1.0,  amplitude = 0.1, phase = "favorable" }

    [model.response]
    kind = "holling-ii"               # or "beddington-deangelis"
    b    = { mean = 0.88, amplitude = 0.1, phase = "favorable" }
    p    = { mean = 1.3,  amplitude = 0.1, phase = "favorable" }

    [simulate]
    initial_state = [0.2, 0.1]
    periods = 50

    [sweep]                           # optional
    parameter = "response.p.mean"
    lo = 0.5
    hi = 2.0
    samples = 7

Every coefficient is either a bare number (constant) or a table with a
`mean` and an optional seasonal excursion.  A nonzero amplitude must name
its phase ("favorable" peaks a quarter period into the year, "unfavorable"
at the start), and a phase without an amplitude is rejected rather than
ignored.  Unknown keys anywhere are errors: a misspelled coefficient must
not silently fall back to a default.

Scenarios ship with the package for the reference parameter sets and the
labeled simulation runs; `load_scenario` accepts either a builtin name or
a path to a TOML file.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Union

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .models import (
    Family,
    FunctionalResponse,
    GrowthFunction,
    GrowthKind,
    ModelSystem,
    ResponseKind,
)
from .seasonal import Phase, SeasonalCoefficient

__all__ = [
    "ConfigError",
    "SweepSpec",
    "Scenario",
    "builtin_names",
    "load_scenario",
    "parse_scenario",
]


class ConfigError(ValueError):
    """A scenario document is malformed or inconsistent."""


@dataclass(frozen=True)
class SweepSpec:
    """One-parameter sweep request: walk `parameter` from lo to hi."""

    parameter: str
    lo: float
    hi: float
    samples: int


@dataclass(frozen=True)
class Scenario:
    """A model plus the run parameters of one command-line invocation."""

    name: str
    description: str
    model: ModelSystem
    initial_state: tuple[float, float] = (0.2, 0.1)
    periods: float = 50.0
    sweep: Optional[SweepSpec] = None


# ---------------------------------------------------------------------------
# Field schemas
# ---------------------------------------------------------------------------

_GROWTH_FIELDS = {
    GrowthKind.GILPIN_STRONG: ("r", "k_minus", "k_plus"),
    GrowthKind.GILPIN_STRONG_SCALED: ("r", "k_minus", "k_plus"),
    GrowthKind.RATIONAL_WEAK: ("r", "k_plus", "offset"),
}
_RESPONSE_FIELDS = {
    ResponseKind.HOLLING_II: ("b", "p"),
    ResponseKind.BEDDINGTON_DEANGELIS: ("b", "h", "p"),
}
_FAMILY_FIELDS = {
    Family.PREDATOR_PREY: (("gamma", "delta1"), ("delta2",)),
    Family.LESLIE_GOWER: (("pred_growth", "pred_refuge"), ()),
    Family.LESLIE_GOWER_PM: (("pred_growth", "pred_refuge"), ()),
}


def _require_table(doc: dict, key: str, where: str) -> dict:
    try:
        value = doc[key]
    except KeyError:
        raise ConfigError(f"{where}: missing required table [{key}]") from None
    if not isinstance(value, dict):
        raise ConfigError(f"{where}: [{key}] must be a table")
    return value


def _reject_unknown(doc: dict, allowed, where: str) -> None:
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        raise ConfigError(
            f"{where}: unknown key{'s' if len(unknown) > 1 else ''} "
            f"{', '.join(map(repr, unknown))}; expected one of: "
            f"{', '.join(sorted(allowed))}")


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _enum(cls, value, where: str):
    try:
        return cls(value)
    except ValueError:
        valid = ", ".join(e.value for e in cls if e.value != "custom")
        raise ConfigError(
            f"{where}: {value!r} is not one of: {valid}") from None


def _coefficient(value, period: float, where: str) -> SeasonalCoefficient:
    """A bare number is constant; a table names its seasonality explicitly."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return SeasonalCoefficient(mean=float(value), period=period)
    if not isinstance(value, dict):
        raise ConfigError(
            f"{where}: expected a number or a {{mean, amplitude, phase}} "
            f"table, got {value!r}")
    _reject_unknown(value, ("mean", "amplitude", "phase"), where)
    if "mean" not in value:
        raise ConfigError(f"{where}: coefficient table needs a mean")
    mean = _number(value["mean"], f"{where}.mean")
    amplitude = _number(value.get("amplitude", 0.0), f"{where}.amplitude")
    phase_raw = value.get("phase")

    if amplitude != 0.0 and phase_raw is None:
        raise ConfigError(
            f"{where}: a nonzero amplitude needs a phase "
            f"(\"favorable\" or \"unfavorable\")")
    if phase_raw is None or amplitude == 0.0:
        if phase_raw is not None and "amplitude" not in value:
            raise ConfigError(
                f"{where}: phase given without an amplitude; state the "
                f"amplitude or drop the phase")
        phase = Phase.CONSTANT
    else:
        phase = _enum(Phase, phase_raw, f"{where}.phase")
        if phase is Phase.CONSTANT:
            raise ConfigError(
                f"{where}: phase \"constant\" contradicts a nonzero "
                f"amplitude; drop one of them")
    try:
        return SeasonalCoefficient(mean=mean, amplitude=amplitude,
                                   phase=phase, period=period)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _parse_growth(doc: dict, period: float) -> GrowthFunction:
    where = "model.growth"
    kind = _enum(GrowthKind, doc.get("kind"), f"{where}.kind")
    if kind not in _GROWTH_FIELDS:
        raise ConfigError(f"{where}.kind: custom growth rates take callables "
                          "and cannot be written in a scenario file")
    fields = _GROWTH_FIELDS[kind]
    _reject_unknown(doc, ("kind", *fields), where)
    coefs = {}
    for name in fields:
        if name not in doc:
            raise ConfigError(f"{where}: {kind.value} needs {name}")
        coefs[name] = _coefficient(doc[name], period, f"{where}.{name}")
    return GrowthFunction(kind=kind, **coefs)


def _parse_response(doc: dict, period: float) -> FunctionalResponse:
    where = "model.response"
    kind = _enum(ResponseKind, doc.get("kind"), f"{where}.kind")
    if kind not in _RESPONSE_FIELDS:
        raise ConfigError(f"{where}.kind: custom responses take callables "
                          "and cannot be written in a scenario file")
    fields = _RESPONSE_FIELDS[kind]
    _reject_unknown(doc, ("kind", *fields), where)
    coefs = {}
    for name in fields:
        if name not in doc:
            raise ConfigError(f"{where}: {kind.value} needs {name}")
        coefs[name] = _coefficient(doc[name], period, f"{where}.{name}")
    return FunctionalResponse(kind=kind, **coefs)


def _parse_model(doc: dict) -> ModelSystem:
    where = "model"
    family = _enum(Family, doc.get("family"), f"{where}.family")
    required, optional = _FAMILY_FIELDS[family]
    allowed = ("family", "period", "growth", "response", *required, *optional)
    _reject_unknown(doc, allowed, where)

    period = _number(doc.get("period", 365.0), f"{where}.period")
    if not period > 0.0:
        raise ConfigError(f"{where}.period: must be positive, got {period}")

    growth = _parse_growth(_require_table(doc, "growth", where), period)
    response = _parse_response(_require_table(doc, "response", where), period)

    coefs = {}
    for name in required:
        if name not in doc:
            raise ConfigError(
                f"{where}: the {family.value} family needs {name}")
        coefs[name] = _coefficient(doc[name], period, f"{where}.{name}")
    for name in optional:
        if name in doc:
            coefs[name] = _coefficient(doc[name], period, f"{where}.{name}")

    try:
        return ModelSystem(family=family, growth=growth, response=response,
                           period=period, **coefs)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _parse_simulate(doc: dict) -> tuple[tuple[float, float], float]:
    where = "simulate"
    _reject_unknown(doc, ("initial_state", "periods"), where)
    state = doc.get("initial_state", [0.2, 0.1])
    if (not isinstance(state, list) or len(state) != 2
            or any(isinstance(v, bool) or not isinstance(v, (int, float))
                   for v in state)):
        raise ConfigError(f"{where}.initial_state: expected [N, P]")
    N0, P0 = float(state[0]), float(state[1])
    if N0 < 0.0 or P0 < 0.0:
        raise ConfigError(f"{where}.initial_state: densities must be "
                          f"nonnegative, got [{N0}, {P0}]")
    periods = _number(doc.get("periods", 50.0), f"{where}.periods")
    if periods < 0.0:
        raise ConfigError(f"{where}.periods: must be nonnegative, "
                          f"got {periods}")
    return (N0, P0), periods


def _parse_sweep(doc: dict) -> SweepSpec:
    where = "sweep"
    _reject_unknown(doc, ("parameter", "lo", "hi", "samples"), where)
    for key in ("parameter", "lo", "hi", "samples"):
        if key not in doc:
            raise ConfigError(f"{where}: missing {key}")
    parameter = doc["parameter"]
    if not isinstance(parameter, str):
        raise ConfigError(f"{where}.parameter: expected a dotted coefficient "
                          f"path, got {parameter!r}")
    lo = _number(doc["lo"], f"{where}.lo")
    hi = _number(doc["hi"], f"{where}.hi")
    if not lo < hi:
        raise ConfigError(f"{where}: lo must lie below hi, got [{lo}, {hi}]")
    samples = doc["samples"]
    if isinstance(samples, bool) or not isinstance(samples, int):
        raise ConfigError(f"{where}.samples: expected an integer")
    if samples < 2:
        raise ConfigError(f"{where}.samples: need at least 2, got {samples}")
    return SweepSpec(parameter=parameter, lo=lo, hi=hi, samples=samples)


def parse_scenario(text: str, fallback_name: str = "scenario") -> Scenario:
    """Parse one scenario document."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from None

    _reject_unknown(doc, ("name", "description", "model", "simulate", "sweep"),
                    "scenario")
    name = doc.get("name", fallback_name)
    if not isinstance(name, str) or not name:
        raise ConfigError("scenario: name must be a nonempty string")
    description = doc.get("description", "")
    if not isinstance(description, str):
        raise ConfigError("scenario: description must be a string")

    model = _parse_model(_require_table(doc, "model", "scenario"))
    initial_state, periods = ((0.2, 0.1), 50.0)
    if "simulate" in doc:
        initial_state, periods = _parse_simulate(
            _require_table(doc, "simulate", "scenario"))
    sweep = None
    if "sweep" in doc:
        sweep = _parse_sweep(_require_table(doc, "sweep", "scenario"))
    return Scenario(name=name, description=description, model=model,
                    initial_state=initial_state, periods=periods, sweep=sweep)


# ---------------------------------------------------------------------------
# Builtin scenarios
# ---------------------------------------------------------------------------

def _builtin_dir():
    return resources.files(__package__) / "scenarios"


def builtin_names() -> list[str]:
    """Names of the scenarios shipped with the package."""
    return sorted(p.name[:-len(".toml")]
                  for p in _builtin_dir().iterdir()
                  if p.name.endswith(".toml"))


def load_scenario(source: Union[str, Path]) -> Scenario:
    """Load a scenario from a builtin name or a TOML file path.

    Builtin names win over same-named files in the working directory; use
    an explicit path ("./table1.toml") for the file.
    """
    if isinstance(source, str) and "/" not in source and "\\" not in source:
        stem = source[:-len(".toml")] if source.endswith(".toml") else source
        builtin = _builtin_dir() / f"{stem}.toml"
        if builtin.is_file():
            return parse_scenario(builtin.read_text(encoding="utf-8"), stem)
    path = Path(source)
    if not path.is_file():
        raise ConfigError(
            f"no scenario named {source!r}: not a builtin "
            f"({', '.join(builtin_names())}) and no such file")
    return parse_scenario(path.read_text(encoding="utf-8"), path.stem)
