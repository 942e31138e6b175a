"""Run specifications: the JSON document that drives one CLI command.

* One JSON object per run; unknown keys and duplicate keys are rejected.
* Physical quantities carry their unit in the key name (``delta12_mev``,
  ``fwhm_ps``, ``stokes_area_pi`` for multiples of π).  A key whose stem is
  known but whose unit suffix is not is reported as a unit mismatch rather
  than as an unknown key.
* ``--set a.b=value`` overrides are applied to the parsed document before
  validation, so precedence is flags > file > defaults.
"""

from __future__ import annotations

import hashlib
import json
import math
from enum import Enum
from pathlib import Path
from typing import Any, Final, get_args

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from raman_qubit.core.constants import (
    GAMMA1_PER_PS,
    GAMMA2_PER_PS,
    PI_STOKES_AREA_THREE_LEVEL_RAD,
    PULSE_FWHM_PS,
    PUMP_AREA_RAD,
    READOUT_POWER_NW,
    SATURATION_POWER_NW,
)
from raman_qubit.core.errors import (
    DuplicateKeyError,
    EmptyAxisError,
    SchemaError,
    UnitSuffixError,
    UnknownCommandError,
)
from raman_qubit.core.settings import get_settings
from raman_qubit.services.drive import NoiseSpec, RamanPulse
from raman_qubit.services.experiments import ExperimentConfig
from raman_qubit.services.lindblad import IntegratorConfig
from raman_qubit.services.optimizer import CalibrationTable
from raman_qubit.services.system_model import DipoleSet, EnergySpec, LevelKind, LevelSystem

# Checked in order, so longer suffixes come first.
UNIT_SUFFIXES: Final = (
    "_per_ps", "_per_ns", "_sqrt_nw", "_mev", "_uev", "_ev", "_ps", "_fs", "_ns", "_s",
    "_rad", "_deg", "_nw", "_uw", "_mw", "_pi", "_thz", "_ghz",
)


class Command(str, Enum):
    RABI = "rabi"
    MAP = "map"
    DELAY = "delay"
    RAMSEY = "ramsey"
    DECAY = "decay"
    PHASE_AREA = "phase-area"
    T1 = "t1"
    NOISE_MC = "noise-mc"
    HIGH_ORBITAL = "high-orbital"
    CALIBRATE = "calibrate"
    SYNTHESIZE = "synthesize"
    VALIDATE = "validate"


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


# Sweep axes each command reads from `axes`.
REQUIRED_AXES: Final[dict[Command, tuple[str, ...]]] = {
    Command.RABI: ("stokes_area_pi",),
    Command.MAP: ("small_delta_mev", "stokes_area_pi"),
    Command.DELAY: ("stokes_delay_ps",),
    Command.RAMSEY: ("interval_ps", "phase_rad"),
    Command.DECAY: ("coarse_interval_ps",),
    Command.PHASE_AREA: ("control_area_pi", "phase_rad"),
    Command.T1: ("interval_ps",),
    Command.HIGH_ORBITAL: ("small_delta_mev", "stokes_area_pi"),
    Command.CALIBRATE: ("small_delta_mev", "stokes_area_pi"),
    Command.SYNTHESIZE: ("theta_pi", "phi_rad"),
    Command.VALIDATE: (),
}
KNOWN_AXES: Final = frozenset(a for axes in REQUIRED_AXES.values() for a in axes)

# Commands whose physics is free precession default to the measured dissipation.
DISSIPATIVE_BY_DEFAULT: Final = frozenset({Command.RAMSEY, Command.DECAY, Command.T1, Command.NOISE_MC})
NOISE_MC_INNER: Final = frozenset(
    {Command.RABI, Command.MAP, Command.DELAY, Command.RAMSEY, Command.PHASE_AREA, Command.T1, Command.HIGH_ORBITAL}
)


# ---------------------------------------------------------------------------
# Schema sections
# ---------------------------------------------------------------------------


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class AxisSpec(_Section):
    """Either an explicit ``values`` list or ``start``/``stop``/``count`` (inclusive)."""

    start: float | None = None
    stop: float | None = None
    count: int | None = Field(None, ge=0)
    values: list[float] | None = None

    @model_validator(mode="after")
    def _one_form(self) -> "AxisSpec":
        ranged = (self.start, self.stop, self.count)
        if self.values is not None:
            if any(v is not None for v in ranged):
                raise ValueError("give either values or start/stop/count, not both")
        elif any(v is None for v in ranged):
            raise ValueError("start, stop and count are all required without values")
        return self

    def points(self) -> np.ndarray:
        if self.values is not None:
            return np.asarray(self.values, dtype=float)
        return np.linspace(self.start, self.stop, self.count)


class PulseSection(_Section):
    center_ps: float = 0.0
    fwhm_ps: float = Field(PULSE_FWHM_PS, gt=0.0)
    pump_area_pi: float = Field(PUMP_AREA_RAD / math.pi, ge=0.0)
    stokes_area_pi: float = Field(PI_STOKES_AREA_THREE_LEVEL_RAD / math.pi, ge=0.0)
    relative_phase_rad: float = 0.0
    stokes_delay_ps: float = 0.0

    def build(self) -> RamanPulse:
        return RamanPulse.pair(
            center_ps=self.center_ps,
            fwhm_ps=self.fwhm_ps,
            pump_area_rad=self.pump_area_pi * math.pi,
            stokes_area_rad=self.stokes_area_pi * math.pi,
            relative_phase_rad=self.relative_phase_rad,
            stokes_delay_ps=self.stokes_delay_ps,
        )


class DissipationSection(_Section):
    """Unset rates take the command's default (closed, or the measured rates)."""

    gamma1_per_ps: float | None = Field(None, ge=0.0)
    gamma2_per_ps: float | None = Field(None, ge=0.0)


class NoiseSection(_Section):
    phase_fwhm_rad: float | None = Field(None, ge=0.0)
    span_fraction_fwhm: float | None = Field(None, ge=0.0)
    area_fraction_fwhm: float | None = Field(None, ge=0.0)

    def build(self, seed: int) -> NoiseSpec:
        given = {k: v for k, v in self.model_dump().items() if v is not None}
        return NoiseSpec(seed=seed, **given)


class ExperimentSection(_Section):
    inner: Command | None = None
    n_samples: int = Field(1, ge=1)
    fixed_interval_ps: float | None = None
    fine_span_ps: float = Field(3.5, gt=0.0)
    fine_step_ps: float = Field(0.05, gt=0.0)
    calibration: CalibrationTable | None = None
    measure_azimuth: bool = False
    delta_hot_values_mev: list[float] | None = None
    p_cw_nw: float = Field(READOUT_POWER_NW, ge=0.0)
    p0_nw: float = Field(SATURATION_POWER_NW, ge=0.0)


class RunSpec(_Section):
    command: Command
    output_dir: Path | None = None
    seed: int = 0
    format: OutputFormat = OutputFormat.CSV
    system: LevelKind = LevelKind.THREE_LEVEL
    energies: EnergySpec = Field(default_factory=EnergySpec)
    dipoles: DipoleSet = Field(default_factory=DipoleSet)
    pulse: PulseSection = Field(default_factory=PulseSection)
    integrator: IntegratorConfig = Field(default_factory=IntegratorConfig)
    dissipation: DissipationSection = Field(default_factory=DissipationSection)
    noise: NoiseSection | None = None
    axes: dict[str, AxisSpec] = Field(default_factory=dict)
    experiment: ExperimentSection = Field(default_factory=ExperimentSection)

    @property
    def effective_command(self) -> Command:
        """The command whose physics runs (the inner one for noise-mc)."""
        if self.command is Command.NOISE_MC:
            return self.experiment.inner or Command.RAMSEY
        return self.command

    def resolved_output_dir(self) -> Path:
        return self.output_dir or get_settings().output_dir / self.command.value

    def config_hash(self) -> str:
        return hashlib.sha256(canonical_json(self).encode()).hexdigest()

    def axis(self, name: str) -> np.ndarray:
        spec = self.axes.get(name)
        if spec is None:
            raise SchemaError(f"axis '{name}' is required for {self.effective_command.value}", field=f"axes.{name}")
        points = spec.points()
        if points.size == 0:
            raise EmptyAxisError(name)
        return points

    def experiment_config(self) -> ExperimentConfig:
        dissipative = self.command in DISSIPATIVE_BY_DEFAULT
        gamma1 = self.dissipation.gamma1_per_ps
        gamma2 = self.dissipation.gamma2_per_ps
        return ExperimentConfig(
            system=LevelSystem(kind=self.system),
            energies=self.energies,
            dipoles=self.dipoles,
            base_pulse=self.pulse.build(),
            integrator=self.integrator,
            gamma1_per_ps=gamma1 if gamma1 is not None else (GAMMA1_PER_PS if dissipative else 0.0),
            gamma2_per_ps=gamma2 if gamma2 is not None else (GAMMA2_PER_PS if dissipative else 0.0),
            noise=self.noise.build(self.seed) if self.noise is not None else (
                NoiseSpec(seed=self.seed) if self.command is Command.NOISE_MC else None
            ),
        )


def canonical_json(spec: RunSpec) -> str:
    """Deterministic serialisation used for hashing and the summary echo."""
    return json.dumps(spec.model_dump(mode="json", exclude={"output_dir"}), sort_keys=True)


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------


def _reject_duplicates(pairs: list[tuple[str, Any]]) -> dict[str, Any]:
    seen: dict[str, Any] = {}
    for key, value in pairs:
        if key in seen:
            raise DuplicateKeyError(f"duplicate key '{key}'", field=key)
        seen[key] = value
    return seen


def _stem(key: str) -> str | None:
    for suffix in UNIT_SUFFIXES:
        if key.endswith(suffix):
            return key[: -len(suffix)]
    return None


def _model_type(annotation: Any) -> type[BaseModel] | None:
    if isinstance(annotation, type) and issubclass(annotation, BaseModel):
        return annotation
    for arg in get_args(annotation):
        found = _model_type(arg)
        if found is not None:
            return found
    return None


def _check_units(raw: Any, model: type[BaseModel], path: str) -> None:
    """Raise UnitSuffixError for keys that name a known quantity in the wrong unit."""
    if not isinstance(raw, dict):
        return
    fields = model.model_fields
    stems = {_stem(name): name for name in fields if _stem(name)}
    for key, value in raw.items():
        where = f"{path}{key}"
        if key in fields:
            if key == "axes" and isinstance(value, dict):
                _check_axis_units(value, f"{where}.")
                continue
            nested = _model_type(fields[key].annotation)
            if nested is not None:
                _check_units(value, nested, f"{where}.")
            continue
        stem = _stem(key)
        if stem is not None and stem in stems:
            raise UnitSuffixError(f"'{where}' has the wrong unit; expected '{path}{stems[stem]}'", field=where)


def _check_axis_units(raw: dict[str, Any], path: str) -> None:
    stems = {_stem(name): name for name in KNOWN_AXES}
    for key in raw:
        if key in KNOWN_AXES:
            continue
        stem = _stem(key)
        if stem is not None and stem in stems:
            raise UnitSuffixError(f"'{path}{key}' has the wrong unit; expected '{path}{stems[stem]}'", field=f"{path}{key}")
        raise SchemaError(f"unknown axis '{path}{key}'", field=f"{path}{key}")


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(raw: dict[str, Any], overrides: list[str]) -> dict[str, Any]:
    """Apply ``a.b.c=value`` assignments; values are parsed as JSON when possible."""
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise SchemaError(f"override '{item}' is not of the form key=value", field=item)
        node = raw
        parts = key.split(".")
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise SchemaError(f"override '{key}' descends into a non-object", field=key)
            node = child
        node[parts[-1]] = _parse_value(value)
    return raw


def _field_path(error: dict[str, Any]) -> str:
    return ".".join(str(p) for p in error.get("loc", ()))


def _with_placeholders(spec: RunSpec) -> RunSpec:
    """Spec with the unmeasured level parameters its system needs written in."""
    energies = spec.energies.with_placeholders(spec.system)
    dipoles = spec.dipoles.with_placeholders(spec.system)
    if energies is spec.energies and dipoles is spec.dipoles:
        return spec
    return spec.model_copy(update={"energies": energies, "dipoles": dipoles})


def parse_spec(raw: dict[str, Any]) -> RunSpec:
    if not isinstance(raw, dict):
        raise SchemaError("run specification must be a JSON object")
    command = raw.get("command")
    if command is None:
        raise SchemaError("'command' is required", field="command")
    if command not in {c.value for c in Command}:
        raise UnknownCommandError(f"unknown command '{command}'")
    _check_units(raw, RunSpec, "")
    try:
        spec = RunSpec.model_validate(raw)
    except ValidationError as exc:
        first = exc.errors()[0]
        path = _field_path(first)
        raise SchemaError(f"invalid value for '{path}': {first['msg']}", field=path) from exc
    if spec.command is Command.NOISE_MC and spec.experiment.inner is not None:
        if spec.experiment.inner not in NOISE_MC_INNER:
            raise SchemaError(
                f"noise-mc cannot wrap '{spec.experiment.inner.value}'", field="experiment.inner"
            )
    return _with_placeholders(spec)


def load_config(path: str | Path | None, overrides: list[str] | None = None) -> RunSpec:
    """Read, override and validate a run specification.

    ``path=None`` starts from an empty document, so a run can be given entirely
    through overrides.
    """
    raw: dict[str, Any] = {}
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        try:
            raw = json.loads(text, object_pairs_hook=_reject_duplicates)
        except json.JSONDecodeError as exc:
            raise SchemaError(
                f"{path}: {exc.msg} at line {exc.lineno} column {exc.colno}", field=None
            ) from exc
    return parse_spec(apply_overrides(raw, list(overrides or [])))


def dump_spec(spec: RunSpec) -> str:
    """JSON document that `load_config` turns back into an equal RunSpec."""
    return spec.model_dump_json(indent=2)


__all__ = [
    "AxisSpec",
    "Command",
    "OutputFormat",
    "REQUIRED_AXES",
    "RunSpec",
    "apply_overrides",
    "canonical_json",
    "dump_spec",
    "load_config",
    "parse_spec",
]
