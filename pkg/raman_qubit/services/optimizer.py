"""Raman π-pulse calibration and arbitrary-rotation synthesis.

The π condition is the (δ, Θ_S) pair maximising the final target population
for a fixed pump area.  It is located in two stages: a coarse grid over the
requested ranges (parallel), then a Nelder–Mead polish from the best grid
point (sequential).  Rotations (θ, φ) are then synthesised by scaling pump
and Stokes fields together to the angle read back from the full model
(`experiments.RotationFamily`) and setting the relative phase to φ.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Final

import numpy as np
import numpy.typing as npt
import structlog
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import minimize

from raman_qubit.core.constants import PULSE_FWHM_PS, READOUT_POWER_NW, SATURATION_POWER_NW
from raman_qubit.core.errors import NoUsablePiConditionError, SchemaError, UnbracketedOptimumError
from raman_qubit.services import fitting
from raman_qubit.services.drive import RamanPulse
from raman_qubit.services.experiments import (
    ExperimentConfig,
    RotationFamily,
    control_probe,
    detuning_area_map,
    final_transfer,
    readout_signal,
)
from raman_qubit.services.sweeps import evaluate
from raman_qubit.services.system_model import LevelKind

logger = structlog.get_logger(__name__)

DELTA_SCALE_MEV: Final = 1e-4
AREA_SCALE_RAD: Final = 1e-3
MIN_GRID_POINTS: Final = 21
MIN_USABLE_TRANSFER: Final = 0.5
ROTATION_TOLERANCE: Final = 0.03
# Smallest |sin θ| whose equatorial component still gives a readable fringe.
AZIMUTH_MIN_SIN: Final = 0.1


class CalibrationTable(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    delta_star_mev: float
    stokes_area_pi_rad: float = Field(..., gt=0.0)
    pump_area_rad: float = Field(..., ge=0.0)
    transfer_at_pi: float = Field(..., ge=-1e-6, le=1.0 + 1e-6)
    fwhm_ps: float = Field(PULSE_FWHM_PS, gt=0.0)
    system_hash: str

    def pi_pulse(self) -> RamanPulse:
        return RamanPulse.pair(
            fwhm_ps=self.fwhm_ps,
            pump_area_rad=self.pump_area_rad,
            stokes_area_rad=self.stokes_area_pi_rad,
        )


def system_hash(cfg: ExperimentConfig) -> str:
    """Fingerprint of everything a calibration depends on except δ and Θ_S."""
    payload = {
        "system": cfg.system.model_dump(mode="json"),
        "energies": cfg.energies.model_dump(mode="json", exclude={"small_delta_mev"}),
        "dipoles": cfg.dipoles.model_dump(mode="json"),
        "pump_area_rad": cfg.base_pulse.pump.area_rad,
        "fwhm_ps": cfg.base_pulse.fwhm_ps,
        "gammas": [cfg.gamma1_per_ps, cfg.gamma2_per_ps],
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def calibrated_config(cfg: ExperimentConfig, cal: CalibrationTable) -> ExperimentConfig:
    """`cfg` with δ and the base pulse set to the calibrated π condition."""
    pulse = cfg.base_pulse.with_stokes_area(cal.stokes_area_pi_rad).with_pump_area(cal.pump_area_rad)
    return cfg.with_updates(
        energies=cfg.energies.with_small_delta(cal.delta_star_mev),
        base_pulse=pulse,
    )


def _transfer(cfg: ExperimentConfig, delta_mev: float, area_rad: float) -> float:
    if area_rad < 0 or abs(delta_mev) >= cfg.energies.big_delta_mev:
        return 0.0
    probe = cfg.with_updates(energies=cfg.energies.with_small_delta(delta_mev))
    return final_transfer(probe, cfg.base_pulse.with_stokes_area(area_rad))


def find_pi_condition(
    cfg: ExperimentConfig,
    delta_range_mev: tuple[float, float],
    stokes_area_range_rad: tuple[float, float],
    *,
    n_delta: int = MIN_GRID_POINTS,
    n_area: int = MIN_GRID_POINTS,
    workers: int | None = None,
) -> CalibrationTable:
    if n_delta < MIN_GRID_POINTS or n_area < MIN_GRID_POINTS:
        raise SchemaError(
            f"coarse grid must be at least {MIN_GRID_POINTS}x{MIN_GRID_POINTS}, got {n_delta}x{n_area}",
            field="axes",
        )
    deltas = np.linspace(*delta_range_mev, n_delta)
    areas = np.linspace(*stokes_area_range_rad, n_area)
    table = detuning_area_map(cfg, deltas, areas, workers=workers)
    i, j = np.unravel_index(int(np.argmax(table.values)), table.shape)
    grid_delta, grid_area = float(deltas[i]), float(areas[j])
    grid_best = float(table.values[i, j])
    logger.info("pi_grid_best", small_delta_mev=grid_delta, stokes_area_rad=grid_area, transfer=grid_best)

    fingerprint = system_hash(cfg)

    def calibration(delta: float, area: float, transfer: float) -> CalibrationTable:
        return CalibrationTable(
            delta_star_mev=delta,
            stokes_area_pi_rad=max(area, 1e-12),
            pump_area_rad=cfg.base_pulse.pump.area_rad,
            transfer_at_pi=min(max(transfer, 0.0), 1.0),
            fwhm_ps=cfg.base_pulse.fwhm_ps,
            system_hash=fingerprint,
        )

    if i in (0, n_delta - 1) or j in (0, n_area - 1):
        best = calibration(grid_delta, grid_area, grid_best)
        logger.warning("pi_unbracketed", small_delta_mev=grid_delta, stokes_area_rad=grid_area)
        raise UnbracketedOptimumError(
            f"transfer maximum at grid edge (delta={grid_delta:.4f} meV, area={grid_area:.4f} rad)",
            best,
        )

    cell = np.array([(deltas[1] - deltas[0]) / DELTA_SCALE_MEV, (areas[1] - areas[0]) / AREA_SCALE_RAD])
    x0 = np.array([grid_delta / DELTA_SCALE_MEV, grid_area / AREA_SCALE_RAD])

    def objective(u: np.ndarray) -> float:
        return -_transfer(cfg, u[0] * DELTA_SCALE_MEV, u[1] * AREA_SCALE_RAD)

    result = minimize(
        objective,
        x0,
        method="Nelder-Mead",
        options={
            "initial_simplex": np.array([x0, x0 + [cell[0], 0.0], x0 + [0.0, cell[1]]]),
            "xatol": 1.0,
            "fatol": 1e-9,
            "maxiter": 400,
        },
    )
    refined = -float(result.fun)
    if refined >= grid_best:
        delta, area, transfer = result.x[0] * DELTA_SCALE_MEV, result.x[1] * AREA_SCALE_RAD, refined
    else:
        delta, area, transfer = grid_delta, grid_area, grid_best
    best = calibration(float(delta), float(area), transfer)
    logger.info(
        "pi_refined",
        small_delta_mev=best.delta_star_mev,
        stokes_area_rad=best.stokes_area_pi_rad,
        transfer=best.transfer_at_pi,
        evaluations=int(result.nfev),
    )

    if best.transfer_at_pi < MIN_USABLE_TRANSFER:
        raise NoUsablePiConditionError(
            f"best transfer {best.transfer_at_pi:.3f} is below {MIN_USABLE_TRANSFER}", best
        )
    return best


# ---------------------------------------------------------------------------
# Rotations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SynthesizedRotation:
    pulse: RamanPulse
    theta: float
    phi: float
    small_delta_mev: float
    target_population: float  # sin²(θ/2)
    achieved_population: float | None = None
    within_tolerance: bool | None = None


def synthesize_rotation(
    theta: float,
    phi: float,
    cal: CalibrationTable,
    *,
    verify_with: ExperimentConfig | None = None,
    family: RotationFamily | None = None,
) -> SynthesizedRotation:
    """Raman pulse rotating |h1⟩ by polar angle θ about azimuth φ.

    The π pulse's pump and Stokes fields are scaled together.  The scale comes
    from `family` (the rotation family of the calibrated model), else from one
    built on `verify_with`; with neither, the two-photon area is taken linear
    in θ, i.e. a scale of √(θ/π).

    With `verify_with`, the pulse is run through the full model from |h1⟩ and the
    result flags whether C_h2 matches sin²(θ/2) within 0.03.
    """
    if not 0.0 <= theta < 2.0 * math.pi:
        raise SchemaError(f"theta {theta:.6f} rad is outside [0, 2π)", field="theta")
    if family is None and verify_with is not None:
        family = RotationFamily(calibrated_config(verify_with, cal))
    scale = math.sqrt(theta / math.pi) if family is None else family.scale(theta)
    pulse = cal.pi_pulse().scaled(scale).with_phase(phi)
    target = math.sin(0.5 * theta) ** 2
    rotation = SynthesizedRotation(
        pulse=pulse, theta=theta, phi=phi, small_delta_mev=cal.delta_star_mev, target_population=target
    )
    if verify_with is None:
        return rotation

    cfg = calibrated_config(verify_with, cal)
    achieved = final_transfer(cfg, pulse)
    ok = abs(achieved - target) <= ROTATION_TOLERANCE
    if not ok:
        logger.warning(
            "rotation_verification_failed", theta=theta, phi=phi, target=target, achieved=achieved
        )
    return SynthesizedRotation(
        pulse=pulse,
        theta=theta,
        phi=phi,
        small_delta_mev=cal.delta_star_mev,
        target_population=target,
        achieved_population=achieved,
        within_tolerance=ok,
    )


def _fringe_offset(
    cfg: ExperimentConfig,
    control: RamanPulse,
    probe: RamanPulse,
    phi: float,
    interval_ps: float,
    probe_phases: np.ndarray,
) -> float:
    tasks = [
        cfg.task(
            control_probe(
                cfg,
                interval_ps,
                control_phase_rad=phi,
                control=control,
                probe=probe,
                probe_phase_rad=float(chi),
            ),
            integrator=cfg.free_precession(),
        )
        for chi in probe_phases
    ]
    fringe = np.asarray(evaluate(tasks))
    return fitting.fringe_phase(probe_phases, fringe, 1.0 / (2.0 * math.pi))


def measure_azimuth(
    cfg: ExperimentConfig,
    cal: CalibrationTable,
    phi: float,
    *,
    theta: float = 0.5 * math.pi,
    interval_ps: float | None = None,
    n_probe_phases: int = 12,
    family: RotationFamily | None = None,
) -> float:
    """Azimuth of the synthesised (θ, φ) rotation read out by a phase-scanned π/2 probe.

    The fringe phase is referenced to the (θ, 0) rotation, so constant offsets
    from the rotating frame cancel.  θ at a pole leaves no coherence to read
    and is rejected.  Result wrapped to (−π, π].
    """
    if abs(math.sin(theta)) < AZIMUTH_MIN_SIN:
        raise SchemaError(f"theta {theta:.6f} rad is too close to a pole to carry an azimuth", field="theta")
    calibrated = calibrated_config(cfg, cal)
    family = family or RotationFamily(calibrated)
    control = synthesize_rotation(theta, 0.0, cal, family=family).pulse
    probe = family.pulse(0.5 * math.pi)
    interval = 3.0 * cal.fwhm_ps if interval_ps is None else interval_ps
    chis = np.linspace(0.0, 2.0 * math.pi, n_probe_phases, endpoint=False)
    reference = _fringe_offset(calibrated, control, probe, 0.0, interval, chis)
    shifted = _fringe_offset(calibrated, control, probe, phi, interval, chis)
    return math.remainder(reference - shifted, 2.0 * math.pi)


# ---------------------------------------------------------------------------
# Bookkeeping around a calibration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PiFidelity:
    fidelity: float
    readout_probability: float


def pi_fidelity(
    cfg: ExperimentConfig,
    cal: CalibrationTable,
    *,
    p_cw_nw: float = READOUT_POWER_NW,
    p0_nw: float = SATURATION_POWER_NW,
) -> PiFidelity:
    """Final target population after the calibrated π pulse, and its CW readout probability."""
    fidelity = final_transfer(calibrated_config(cfg, cal))
    return PiFidelity(fidelity=fidelity, readout_probability=readout_signal(fidelity, p_cw_nw, p0_nw))


@dataclass(frozen=True)
class HotTrionSensitivity:
    delta_hot_mev: list[float]
    calibrations: list[CalibrationTable]

    @property
    def delta_spread_mev(self) -> float:
        values = [c.delta_star_mev for c in self.calibrations]
        return max(values) - min(values)

    @property
    def area_spread_rad(self) -> float:
        values = [c.stokes_area_pi_rad for c in self.calibrations]
        return max(values) - min(values)

    @property
    def min_transfer(self) -> float:
        return min(c.transfer_at_pi for c in self.calibrations)


def hot_trion_sensitivity(
    cfg: ExperimentConfig,
    delta_hot_values_mev: npt.ArrayLike,
    delta_range_mev: tuple[float, float],
    stokes_area_range_rad: tuple[float, float],
    *,
    n_delta: int = MIN_GRID_POINTS,
    n_area: int = MIN_GRID_POINTS,
) -> HotTrionSensitivity:
    """π condition of the four-level hot-trion model for each Δhot."""
    if cfg.system.kind is not LevelKind.FOUR_LEVEL_HOT:
        raise ValueError("hot_trion_sensitivity needs system kind four_level_hot")
    values = [float(v) for v in np.atleast_1d(delta_hot_values_mev)]
    calibrations = []
    for value in values:
        variant = cfg.with_updates(energies=cfg.energies.model_copy(update={"delta_hot_mev": value}))
        cal = find_pi_condition(
            variant, delta_range_mev, stokes_area_range_rad, n_delta=n_delta, n_area=n_area
        )
        logger.info("hot_trion_point", delta_hot_mev=value, **cal.model_dump(exclude={"system_hash"}))
        calibrations.append(cal)
    return HotTrionSensitivity(delta_hot_mev=values, calibrations=calibrations)


__all__ = [
    "CalibrationTable",
    "HotTrionSensitivity",
    "PiFidelity",
    "SynthesizedRotation",
    "calibrated_config",
    "find_pi_condition",
    "hot_trion_sensitivity",
    "measure_azimuth",
    "pi_fidelity",
    "synthesize_rotation",
    "system_hash",
]
