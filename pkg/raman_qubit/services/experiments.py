"""Sweep experiments on the Raman-driven orbital qubit.

Each experiment has two halves:

* ``plan_*`` builds a `SweepPlan`: the named axes and one `SimulationTask` per
  grid point, in C order over the axes;
* the experiment function runs the plan through `sweeps.evaluate` and returns
  a `SweepTable`.

Splitting them lets `noise_monte_carlo` re-run any plan under sampled jitter.
Observables are final populations of the upper qubit level (C_h2, or C_h3 for
the h1–h3 system).
"""

from __future__ import annotations

import hashlib
import itertools
import math
import time
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass, field
from typing import Any, Final

import numpy as np
import numpy.typing as npt
import structlog
from pydantic import BaseModel, ConfigDict, Field
from scipy.integrate import trapezoid
from scipy.optimize import brentq, minimize_scalar

from raman_qubit.core.constants import (
    AMPLITUDE_CAL_AREA_RAD,
    AMPLITUDE_CAL_SQRT_NW,
    PI_STOKES_AREA_THREE_LEVEL_RAD,
    READOUT_POWER_NW,
    SATURATION_POWER_NW,
)
from raman_qubit.core.errors import EmptyAxisError, FitError, SchemaError
from raman_qubit.services import fitting
from raman_qubit.services.drive import NoiseSpec, PulseSequence, RamanPulse, envelope
from raman_qubit.services.fitting import FitModel, FitResult
from raman_qubit.services.lindblad import IntegratorConfig
from raman_qubit.services.sweeps import SimulationTask, evaluate, task_population, task_series
from raman_qubit.services.system_model import (
    DipoleSet,
    DissipatorSpec,
    EnergySpec,
    LevelKind,
    LevelSystem,
    dissipators,
    mev_to_rad_per_ps,
)

logger = structlog.get_logger(__name__)

# Step cap between pulses for free-precession experiments, ps.
DEFAULT_FREE_STEP_PS: Final = 1.0
OBSERVABLE_PREFIX: Final = "c_"
TWO_PHOTON_COLUMN: Final = "two_photon_area_rad"
TWO_PHOTON_GRID_POINTS: Final = 2001
ROTATION_SCALE_XTOL: Final = 1e-5
# Field scale bracketing the 2π point of every supported level system.
MAX_ROTATION_SCALE: Final = 1.5


def _default_pulse() -> RamanPulse:
    return RamanPulse.pair(stokes_area_rad=PI_STOKES_AREA_THREE_LEVEL_RAD)


class ExperimentConfig(BaseModel):
    """Physical model plus drive and integrator settings shared by every sweep."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    system: LevelSystem = Field(default_factory=lambda: LevelSystem(kind=LevelKind.THREE_LEVEL))
    energies: EnergySpec = Field(default_factory=EnergySpec)
    dipoles: DipoleSet = Field(default_factory=DipoleSet)
    base_pulse: RamanPulse = Field(default_factory=_default_pulse)
    integrator: IntegratorConfig = Field(default_factory=IntegratorConfig)
    gamma1_per_ps: float = Field(0.0, ge=0.0)
    gamma2_per_ps: float = Field(0.0, ge=0.0)
    noise: NoiseSpec | None = None

    @property
    def target(self) -> str:
        return self.system.target

    @property
    def observable(self) -> str:
        return OBSERVABLE_PREFIX + self.target

    def dissipators(self) -> tuple[DissipatorSpec, ...]:
        return tuple(dissipators(self.system, self.gamma1_per_ps, self.gamma2_per_ps))

    def config_hash(self) -> str:
        payload = self.model_dump_json(exclude_none=False)
        return hashlib.sha256(payload.encode()).hexdigest()

    def with_updates(self, **changes: Any) -> "ExperimentConfig":
        return self.model_copy(update=changes)

    def free_precession(self) -> IntegratorConfig:
        if self.integrator.free_step_ps is not None:
            return self.integrator
        return self.integrator.model_copy(update={"free_step_ps": DEFAULT_FREE_STEP_PS})

    def task(
        self,
        sequence: PulseSequence,
        *,
        energies: EnergySpec | None = None,
        integrator: IntegratorConfig | None = None,
    ) -> SimulationTask:
        return SimulationTask(
            system=self.system,
            energies=energies or self.energies,
            dipoles=self.dipoles,
            sequence=sequence,
            integrator=integrator or self.integrator,
            dissipators=self.dissipators(),
            observable=self.target,
        )


# ---------------------------------------------------------------------------
# Tables and plans
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SweepTable:
    axes: dict[str, np.ndarray]
    observable: str
    values: np.ndarray  # shape = tuple(len(a) for a in axes.values())
    extra_columns: dict[str, np.ndarray] = field(default_factory=dict)
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.axes.values())

    @property
    def columns(self) -> list[str]:
        return [*self.axes, self.observable, *self.extra_columns]

    def axis(self, name: str) -> np.ndarray:
        return self.axes[name]

    def argmax(self) -> tuple[dict[str, float], float]:
        """Grid point with the largest value; ties go to the first in C order."""
        flat = int(np.argmax(self.values))
        index = np.unravel_index(flat, self.shape)
        point = {name: float(axis[i]) for (name, axis), i in zip(self.axes.items(), index)}
        return point, float(self.values[index])

    def rows(self) -> Iterator[list[float]]:
        for index in itertools.product(*(range(n) for n in self.shape)):
            row = [float(axis[i]) for axis, i in zip(self.axes.values(), index)]
            row.append(float(self.values[index]))
            row.extend(float(col[index]) for col in self.extra_columns.values())
            yield row

    def line(self, **fixed: int) -> np.ndarray:
        """1-D cut through the table with the named axes held at the given indices."""
        index = tuple(fixed.get(name, slice(None)) for name in self.axes)
        return self.values[index]


@dataclass(frozen=True)
class SweepPlan:
    axes: dict[str, np.ndarray]
    tasks: list[SimulationTask]
    observable: str
    fn: Callable[[SimulationTask], Any] = task_population
    extra_columns: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.axes.values())


def _axis(name: str, values: npt.ArrayLike) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.size == 0:
        raise EmptyAxisError(name)
    if not np.all(np.isfinite(arr)):
        raise SchemaError(f"axis '{name}' has non-finite values", field=f"axes.{name}")
    return arr


def _collect(plan: SweepPlan, results: Sequence[Any]) -> np.ndarray:
    return np.asarray(results, dtype=float).reshape(plan.shape)


def run_plan(
    plan: SweepPlan,
    cfg: ExperimentConfig,
    *,
    workers: int | None = None,
) -> SweepTable:
    started = time.perf_counter()
    results = evaluate(plan.tasks, plan.fn, workers=workers)
    return SweepTable(
        axes=plan.axes,
        observable=plan.observable,
        values=_collect(plan, results),
        extra_columns=plan.extra_columns,
        metadata={
            "config_hash": cfg.config_hash(),
            "seed": cfg.noise.seed if cfg.noise else None,
            "runtime_s": time.perf_counter() - started,
        },
    )


def single_pulse(cfg: ExperimentConfig, pulse: RamanPulse | None = None) -> PulseSequence:
    return PulseSequence.around([pulse or cfg.base_pulse])


def final_transfer(cfg: ExperimentConfig, pulse: RamanPulse | None = None) -> float:
    """Final target population after one Raman pulse from |h1⟩."""
    return task_population(cfg.task(single_pulse(cfg, pulse)))


# ---------------------------------------------------------------------------
# Axis calibration and readout
# ---------------------------------------------------------------------------


def area_from_amplitude(amplitude_sqrt_nw: npt.ArrayLike) -> np.ndarray:
    """Pulse area for a field amplitude in nW^0.5, linear through the calibration point."""
    return np.asarray(amplitude_sqrt_nw, dtype=float) * (AMPLITUDE_CAL_AREA_RAD / AMPLITUDE_CAL_SQRT_NW)


def amplitude_from_area(area_rad: npt.ArrayLike) -> np.ndarray:
    return np.asarray(area_rad, dtype=float) * (AMPLITUDE_CAL_SQRT_NW / AMPLITUDE_CAL_AREA_RAD)


def readout_signal(
    c_h2: float, p_cw: float = READOUT_POWER_NW, p0: float = SATURATION_POWER_NW
) -> float:
    """Readout probability of a CW probe saturating the h2 transition."""
    if p_cw < 0 or p0 < 0:
        raise ValueError("powers must be non-negative")
    if p_cw == 0:
        return 0.0
    return c_h2 * p_cw / (p0 + p_cw)


# ---------------------------------------------------------------------------
# Single-pulse sweeps
# ---------------------------------------------------------------------------


def plan_rabi_sweep(cfg: ExperimentConfig, stokes_area_axis: npt.ArrayLike) -> SweepPlan:
    areas = _axis("stokes_area_rad", stokes_area_axis)
    tasks = [cfg.task(single_pulse(cfg, cfg.base_pulse.with_stokes_area(a))) for a in areas]
    return SweepPlan(
        axes={"stokes_area_rad": areas},
        tasks=tasks,
        observable=cfg.observable,
        extra_columns={"amplitude_sqrt_nw": amplitude_from_area(areas)},
    )


def rabi_sweep(cfg: ExperimentConfig, stokes_area_axis: npt.ArrayLike) -> SweepTable:
    return run_plan(plan_rabi_sweep(cfg, stokes_area_axis), cfg)


def plan_detuning_area_map(
    cfg: ExperimentConfig, delta_axis_mev: npt.ArrayLike, stokes_area_axis: npt.ArrayLike
) -> SweepPlan:
    deltas = _axis("small_delta_mev", delta_axis_mev)
    areas = _axis("stokes_area_rad", stokes_area_axis)
    tasks = [
        cfg.task(
            single_pulse(cfg, cfg.base_pulse.with_stokes_area(a)),
            energies=cfg.energies.with_small_delta(float(d)),
        )
        for d in deltas
        for a in areas
    ]
    return SweepPlan(
        axes={"small_delta_mev": deltas, "stokes_area_rad": areas},
        tasks=tasks,
        observable=cfg.observable,
    )


def detuning_area_map(
    cfg: ExperimentConfig,
    delta_axis_mev: npt.ArrayLike,
    stokes_area_axis: npt.ArrayLike,
    *,
    workers: int | None = None,
) -> SweepTable:
    plan = plan_detuning_area_map(cfg, delta_axis_mev, stokes_area_axis)
    table = run_plan(plan, cfg, workers=workers)
    point, value = table.argmax()
    logger.info("map_maximum", observable=table.observable, value=value, **point)
    return table


def high_orbital_map(
    cfg: ExperimentConfig, delta_axis_mev: npt.ArrayLike, stokes_area_axis: npt.ArrayLike
) -> SweepTable:
    """Detuning/area map of the h3 population for the h1–h3 system."""
    if cfg.system.kind is not LevelKind.FOUR_LEVEL_HIGH:
        raise ValueError("high_orbital_map needs system kind four_level_high")
    return detuning_area_map(cfg, delta_axis_mev, stokes_area_axis)


def two_photon_area(cfg: ExperimentConfig, pulse: RamanPulse) -> float:
    """Pulse area of the eliminated two-level drive, ∫ Ω_P Ω_S / 2Δ dt, in rad.

    For a delayed Stokes field this is the pump–Stokes cross-correlation, a
    Gaussian in the delay with √2 times the pulse FWHM.
    """
    seq = PulseSequence.around([pulse])
    t = np.linspace(seq.t_start_ps, seq.t_end_ps, TWO_PHOTON_GRID_POINTS)
    overlap = np.asarray(envelope(pulse.pump, t)) * np.asarray(envelope(pulse.stokes, t))
    return float(trapezoid(overlap, t) / (2.0 * mev_to_rad_per_ps(cfg.energies.big_delta_mev)))


def plan_delay_scan(cfg: ExperimentConfig, delay_axis_ps: npt.ArrayLike) -> SweepPlan:
    delays = _axis("stokes_delay_ps", delay_axis_ps)
    pulses = [cfg.base_pulse.with_stokes_delay(float(d)) for d in delays]
    return SweepPlan(
        axes={"stokes_delay_ps": delays},
        tasks=[cfg.task(single_pulse(cfg, p)) for p in pulses],
        observable=cfg.observable,
        extra_columns={TWO_PHOTON_COLUMN: np.array([two_photon_area(cfg, p) for p in pulses])},
    )


def delay_scan(cfg: ExperimentConfig, delay_axis_ps: npt.ArrayLike) -> SweepTable:
    return run_plan(plan_delay_scan(cfg, delay_axis_ps), cfg)


def delay_width(table: SweepTable, column: str = TWO_PHOTON_COLUMN) -> FitResult:
    """Gaussian fit of one delay-scan column; `fitting.gaussian_fwhm` gives its width.

    The default column is the two-photon area, whose width is the pump–Stokes
    cross-correlation.  Pass ``table.observable`` for the population profile,
    which is narrower at the π condition: a delayed pair leaves the light shift
    uncompensated on both wings.
    """
    values = table.values if column == table.observable else table.extra_columns[column]
    return fitting.fit(FitModel.GAUSSIAN, table.axis("stokes_delay_ps"), values)


# ---------------------------------------------------------------------------
# Two-pulse sequences
# ---------------------------------------------------------------------------


def _check_rotation_angle(theta_rad: float) -> None:
    if not 0.0 <= theta_rad <= 2.0 * math.pi:
        raise SchemaError(f"rotation angle {theta_rad:.6f} rad is outside [0, 2π]", field="theta")


class RotationFamily:
    """Rotations of |h1⟩ by θ ∈ [0, 2π] made from the (π-calibrated) base pulse.

    Pump and Stokes fields are scaled together by s, so s = 0 is the identity
    and s = 1 the base pulse.  The rotation angle of a scaled pulse is read
    from the full model as θ = 2·asin√(C/C_π), C_π being the transfer of the
    base pulse, and s(θ) is found by root finding on that angle.  Past the π
    point the transfer falls back to its minimum, the 2π scale, located by a
    bounded search on [1, MAX_ROTATION_SCALE].
    """

    def __init__(self, cfg: ExperimentConfig) -> None:
        self.cfg = cfg
        self._scales: dict[float, float] = {}
        self._full: float | None = None
        self._two_pi: float | None = None

    def transfer(self, scale: float) -> float:
        return final_transfer(self.cfg, self.cfg.base_pulse.scaled(scale))

    @property
    def full_transfer(self) -> float:
        if self._full is None:
            self._full = self.transfer(1.0)
        return self._full

    @property
    def two_pi_scale(self) -> float:
        if self._two_pi is None:
            valley = minimize_scalar(
                self.transfer,
                bounds=(1.0, MAX_ROTATION_SCALE),
                method="bounded",
                options={"xatol": ROTATION_SCALE_XTOL},
            )
            self._two_pi = float(valley.x)
            logger.debug("two_pi_scale", scale=self._two_pi, transfer=float(valley.fun))
        return self._two_pi

    def scale(self, theta_rad: float) -> float:
        _check_rotation_angle(theta_rad)
        if theta_rad == 0.0:
            return 0.0
        if math.isclose(theta_rad, math.pi):
            return 1.0
        if theta_rad in self._scales:
            return self._scales[theta_rad]

        target = self.full_transfer * math.sin(0.5 * theta_rad) ** 2
        if theta_rad < math.pi:
            lo, hi = 0.0, 1.0
        else:
            lo, hi = 1.0, self.two_pi_scale
            if self.transfer(hi) >= target:
                self._scales[theta_rad] = hi
                return hi
        scale = float(brentq(lambda s: self.transfer(s) - target, lo, hi, xtol=ROTATION_SCALE_XTOL))
        logger.debug("rotation_scale", theta_rad=theta_rad, scale=scale)
        self._scales[theta_rad] = scale
        return scale

    def pulse(self, theta_rad: float) -> RamanPulse:
        return self.cfg.base_pulse.scaled(self.scale(theta_rad))


def rotation_pulse(cfg: ExperimentConfig, theta_rad: float) -> RamanPulse:
    """Base pulse with both fields scaled to rotate |h1⟩ by `theta_rad`."""
    return RotationFamily(cfg).pulse(theta_rad)


def half_pi_pulse(cfg: ExperimentConfig) -> RamanPulse:
    """π/2 rotation from the (π-calibrated) base pulse: C_h2 = C_π / 2 from |h1⟩."""
    return rotation_pulse(cfg, 0.5 * math.pi)


def control_probe(
    cfg: ExperimentConfig,
    interval_ps: float,
    *,
    control_phase_rad: float = 0.0,
    control: RamanPulse | None = None,
    probe: RamanPulse | None = None,
    probe_phase_rad: float = 0.0,
) -> PulseSequence:
    """Control pulse centred at 0 followed by a probe `interval_ps` later.

    Both default to `half_pi_pulse(cfg)`; sweeps pass them in so the π/2
    calibration runs once per plan.
    """
    if control is None or probe is None:
        half = half_pi_pulse(cfg)
        control = half if control is None else control
        probe = half if probe is None else probe
    first = control.moved_to(0.0).with_phase(control_phase_rad)
    second = probe.moved_to(interval_ps).with_phase(probe_phase_rad)
    return PulseSequence.around([first, second])


def plan_ramsey_scan(
    cfg: ExperimentConfig, interval_axis_ps: npt.ArrayLike, phase_values_rad: npt.ArrayLike
) -> SweepPlan:
    intervals = _axis("interval_ps", interval_axis_ps)
    phases = _axis("phase_rad", phase_values_rad)
    if np.any(intervals < 0):
        raise SchemaError("pulse intervals must be non-negative", field="axes.interval_ps")
    integrator = cfg.free_precession()
    half = half_pi_pulse(cfg)
    tasks = [
        cfg.task(
            control_probe(cfg, float(dt), control_phase_rad=float(phi), control=half, probe=half),
            integrator=integrator,
        )
        for dt in intervals
        for phi in phases
    ]
    return SweepPlan(
        axes={"interval_ps": intervals, "phase_rad": phases},
        tasks=tasks,
        observable=cfg.observable,
    )


def ramsey_scan(
    cfg: ExperimentConfig, interval_axis_ps: npt.ArrayLike, phase_values_rad: npt.ArrayLike
) -> SweepTable:
    return run_plan(plan_ramsey_scan(cfg, interval_axis_ps, phase_values_rad), cfg)


def ramsey_frequency(table: SweepTable, phase_index: int = 0) -> FitResult:
    """Sinusoid fit of the fringe at one control phase; frequency in THz."""
    return fitting.fit_fringe(table.axis("interval_ps"), table.line(phase_rad=phase_index))


def plan_phase_area_map(
    cfg: ExperimentConfig,
    control_area_axis_rad: npt.ArrayLike,
    phase_axis_rad: npt.ArrayLike,
    fixed_interval_ps: float,
) -> SweepPlan:
    """Control rotation angle Θ ∈ [0, 2π] (π = the calibrated π pulse) against control phase Φ.

    Controls come from `RotationFamily`, so the Θ = 0 row is the probe alone.
    """
    thetas = _axis("control_area_rad", control_area_axis_rad)
    phases = _axis("phase_rad", phase_axis_rad)
    if np.any(thetas < 0) or np.any(thetas > 2.0 * math.pi):
        raise SchemaError("control rotation angles must lie in [0, 2π]", field="axes.control_area_rad")
    family = RotationFamily(cfg)
    probe = family.pulse(0.5 * math.pi)
    controls = [family.pulse(float(theta)) for theta in thetas]
    integrator = cfg.free_precession()
    tasks = [
        cfg.task(
            control_probe(
                cfg,
                fixed_interval_ps,
                control_phase_rad=float(phi),
                control=control,
                probe=probe,
            ),
            integrator=integrator,
        )
        for control in controls
        for phi in phases
    ]
    return SweepPlan(
        axes={"control_area_rad": thetas, "phase_rad": phases},
        tasks=tasks,
        observable=cfg.observable,
    )


def phase_area_map(
    cfg: ExperimentConfig,
    control_area_axis_rad: npt.ArrayLike,
    phase_axis_rad: npt.ArrayLike,
    fixed_interval_ps: float,
) -> SweepTable:
    return run_plan(
        plan_phase_area_map(cfg, control_area_axis_rad, phase_axis_rad, fixed_interval_ps), cfg
    )


@dataclass(frozen=True)
class CoherenceDecay:
    intervals_ps: np.ndarray
    amplitudes: np.ndarray  # NaN where the fringe fit failed
    failures: dict[float, str]
    fit: FitResult | None

    @property
    def t2_ps(self) -> float | None:
        return None if self.fit is None else self.fit.params["tau"]

    def points(self) -> list[dict[str, float]]:
        return [
            {"interval_ps": float(t), "fringe_amplitude": float(a)}
            for t, a in zip(self.intervals_ps, self.amplitudes)
        ]


def coherence_decay_scan(
    cfg: ExperimentConfig,
    coarse_intervals_ps: npt.ArrayLike,
    *,
    fine_span_ps: float = 3.5,
    fine_step_ps: float = 0.05,
    phase_rad: float = 0.0,
) -> CoherenceDecay:
    """Fringe amplitude at each coarse interval from a local fine Ramsey scan, plus T2."""
    coarse = _axis("coarse_interval_ps", coarse_intervals_ps)
    fine = np.arange(0.0, fine_span_ps + 0.5 * fine_step_ps, fine_step_ps)
    intervals = (coarse[:, None] + fine[None, :]).ravel()
    table = ramsey_scan(cfg, intervals, [phase_rad])
    fringes = table.values.reshape(len(coarse), len(fine))

    amplitudes = np.full(len(coarse), np.nan)
    failures: dict[float, str] = {}
    for k, t in enumerate(coarse):
        try:
            amplitudes[k] = fitting.fringe_amplitude(t + fine, fringes[k])
        except FitError as exc:
            failures[float(t)] = str(exc)
            logger.warning("fringe_fit_failed", interval_ps=float(t), error=str(exc))

    ok = np.isfinite(amplitudes)
    decay_fit: FitResult | None = None
    if ok.sum() >= 6:
        try:
            decay_fit = fitting.fit(FitModel.EXP_DECAY, coarse[ok], amplitudes[ok])
        except FitError as exc:
            logger.warning("decay_fit_failed", error=str(exc))
    return CoherenceDecay(intervals_ps=coarse, amplitudes=amplitudes, failures=failures, fit=decay_fit)


def plan_t1_probe(cfg: ExperimentConfig, interval_axis_ps: npt.ArrayLike) -> SweepPlan:
    """One evolution: a Raman π pulse at t = 0, then readout at each delay."""
    delays = _axis("interval_ps", interval_axis_ps)
    order = np.argsort(delays, kind="stable")
    if not np.array_equal(order, np.arange(len(delays))):
        raise SchemaError("t1 delays must be ordered", field="axes.interval_ps")
    pulse = cfg.base_pulse.moved_to(0.0)
    seq = PulseSequence.around([pulse], t_end_ps=float(delays[-1]))
    if delays[0] < seq.t_start_ps:
        raise SchemaError(f"t1 delays must be >= {seq.t_start_ps:.3f} ps", field="axes.interval_ps")
    integrator = cfg.free_precession().with_samples(delays)
    return SweepPlan(
        axes={"interval_ps": delays},
        tasks=[cfg.task(seq, integrator=integrator)],
        observable=cfg.observable,
        fn=task_series,
    )


def t1_probe(cfg: ExperimentConfig, interval_axis_ps: npt.ArrayLike) -> SweepTable:
    return run_plan(plan_t1_probe(cfg, interval_axis_ps), cfg)


def t1_fit(table: SweepTable) -> FitResult:
    return fitting.fit(FitModel.EXP_DECAY, table.axis("interval_ps"), table.values)


# ---------------------------------------------------------------------------
# Noise
# ---------------------------------------------------------------------------


def noise_monte_carlo(
    cfg: ExperimentConfig,
    plan: SweepPlan,
    n_samples: int,
    *,
    workers: int | None = None,
) -> SweepTable:
    """Average of `plan` over `n_samples` jittered realisations of every sequence."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    noise = cfg.noise or NoiseSpec()
    n_points = len(plan.tasks)
    noisy = [
        task.with_noise(noise, sample * n_points + i)
        for sample in range(n_samples)
        for i, task in enumerate(plan.tasks)
    ]
    started = time.perf_counter()
    results = evaluate(noisy, plan.fn, workers=workers)

    total = np.zeros(plan.shape)
    for sample in range(n_samples):
        total = total + _collect(plan, results[sample * n_points : (sample + 1) * n_points])
    mean = total / n_samples

    logger.info("monte_carlo_finished", samples=n_samples, points=n_points, seed=noise.seed)
    return SweepTable(
        axes=plan.axes,
        observable=plan.observable,
        values=mean,
        extra_columns=plan.extra_columns,
        metadata={
            "config_hash": cfg.config_hash(),
            "seed": noise.seed,
            "n_samples": n_samples,
            "runtime_s": time.perf_counter() - started,
        },
    )


def fringe_contrast(table: SweepTable) -> float:
    return float(np.max(table.values) - np.min(table.values))


__all__ = [
    "CoherenceDecay",
    "ExperimentConfig",
    "RotationFamily",
    "SweepPlan",
    "SweepTable",
    "amplitude_from_area",
    "area_from_amplitude",
    "coherence_decay_scan",
    "control_probe",
    "delay_scan",
    "delay_width",
    "detuning_area_map",
    "final_transfer",
    "fringe_contrast",
    "half_pi_pulse",
    "high_orbital_map",
    "noise_monte_carlo",
    "phase_area_map",
    "plan_delay_scan",
    "plan_detuning_area_map",
    "plan_phase_area_map",
    "plan_ramsey_scan",
    "plan_rabi_sweep",
    "plan_t1_probe",
    "rabi_sweep",
    "ramsey_frequency",
    "ramsey_scan",
    "readout_signal",
    "rotation_pulse",
    "run_plan",
    "single_pulse",
    "t1_fit",
    "t1_probe",
    "two_photon_area",
]
