"""Command handlers and artifact writers behind ``raman-qubit``.

Every handler takes a validated `RunSpec` and returns a `CommandOutput`: the
tables to write plus the command-specific part of the summary.  `run` writes
the artifacts and maps exceptions to exit codes.
"""

from __future__ import annotations

import json
import math
import sys
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import structlog
from pydantic import ValidationError

from raman_qubit.cli.runspec import REQUIRED_AXES, Command, OutputFormat, RunSpec, canonical_json
from raman_qubit.core.algebra import DensityMatrix, hermiticity_defect, purity, validate_density
from raman_qubit.core.errors import FitError, NonUniformSamplingError, RamanError, SchemaError
from raman_qubit.services import experiments as exp
from raman_qubit.services import fitting
from raman_qubit.services import optimizer as opt
from raman_qubit.services.lindblad import evolve
from raman_qubit.services.system_model import (
    LevelKind,
    build_hamiltonian,
    h_lab,
    h_rot,
    u0,
)

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

# Carrier used by the frame check in `validate`; small enough to integrate.
VALIDATION_OMEGA_T = 50.0


@dataclass
class CommandOutput:
    tables: dict[str, exp.SweepTable] = field(default_factory=dict)
    summary: dict[str, Any] = field(default_factory=dict)
    documents: dict[str, dict[str, Any]] = field(default_factory=dict)
    ok: bool = True


# ---------------------------------------------------------------------------
# Writers
# ---------------------------------------------------------------------------


def _clean(value: Any) -> Any:
    """JSON-safe copy: numpy scalars/arrays to Python, NaN/inf to null."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def _dump(path: Path, payload: dict[str, Any]) -> None:
    path.write_text(json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_table(table: exp.SweepTable, path: Path, fmt: OutputFormat) -> Path:
    rows = np.array(list(table.rows()), dtype=float)
    if fmt is OutputFormat.CSV:
        target = path.with_suffix(".csv")
        np.savetxt(target, rows, fmt="%.9f", delimiter=",", header=",".join(table.columns), comments="")
    else:
        target = path.with_suffix(".json")
        _dump(
            target,
            {
                "axes": {name: [float(f"{v:.9f}") for v in axis] for name, axis in table.axes.items()},
                "columns": table.columns,
                "rows": [[float(f"{v:.9f}") for v in row] for row in rows.tolist()],
            },
        )
    return target


def _extremum(table: exp.SweepTable) -> dict[str, Any]:
    point, value = table.argmax()
    return {"observable": table.observable, "value": value, **point}


# ---------------------------------------------------------------------------
# Handlers
# ---------------------------------------------------------------------------


def _pi(spec: RunSpec, name: str) -> np.ndarray:
    return spec.axis(name) * math.pi


def handle_rabi(spec: RunSpec) -> CommandOutput:
    table = exp.rabi_sweep(spec.experiment_config(), _pi(spec, "stokes_area_pi"))
    return CommandOutput(tables={"rabi": table}, summary={"maximum": _extremum(table)})


def handle_map(spec: RunSpec) -> CommandOutput:
    table = exp.detuning_area_map(spec.experiment_config(), spec.axis("small_delta_mev"), _pi(spec, "stokes_area_pi"))
    return CommandOutput(tables={"map": table}, summary={"maximum": _extremum(table)})


def handle_high_orbital(spec: RunSpec) -> CommandOutput:
    if spec.system is not LevelKind.FOUR_LEVEL_HIGH:
        raise SchemaError("high-orbital needs system 'four_level_high'", field="system")
    table = exp.high_orbital_map(spec.experiment_config(), spec.axis("small_delta_mev"), _pi(spec, "stokes_area_pi"))
    return CommandOutput(tables={"high_orbital": table}, summary={"maximum": _extremum(table)})


def handle_delay(spec: RunSpec) -> CommandOutput:
    table = exp.delay_scan(spec.experiment_config(), spec.axis("stokes_delay_ps"))
    summary: dict[str, Any] = {"maximum": _extremum(table)}
    try:
        width = exp.delay_width(table)
        summary["gaussian_fit"] = width.as_dict()
        summary["fwhm_ps"] = fitting.gaussian_fwhm(width)
    except FitError as exc:
        summary["gaussian_fit"] = {"error": str(exc)}
    try:
        population = exp.delay_width(table, table.observable)
        summary["population_fit"] = population.as_dict()
        summary["population_fwhm_ps"] = fitting.gaussian_fwhm(population)
    except FitError as exc:
        summary["population_fit"] = {"error": str(exc)}
    return CommandOutput(tables={"delay": table}, summary=summary)


def _fringe_summary(table: exp.SweepTable) -> dict[str, Any]:
    intervals = table.axis("interval_ps")
    phases = table.axis("phase_rad")
    fits = []
    for k, phi in enumerate(phases):
        entry: dict[str, Any] = {"phase_rad": float(phi)}
        try:
            entry.update(exp.ramsey_frequency(table, k).as_dict())
        except FitError as exc:
            entry["error"] = str(exc)
        fits.append(entry)
    summary: dict[str, Any] = {"fringe_fits": fits}
    try:
        spectrum = fitting.fft_spectrum(intervals, table.line(phase_rad=0))
        summary["fft_peak_thz"] = spectrum.peak_frequency
    except (NonUniformSamplingError, FitError) as exc:
        summary["fft_peak_thz"] = None
        summary["fft_error"] = str(exc)
    return summary


def handle_ramsey(spec: RunSpec) -> CommandOutput:
    table = exp.ramsey_scan(spec.experiment_config(), spec.axis("interval_ps"), spec.axis("phase_rad"))
    return CommandOutput(tables={"ramsey": table}, summary=_fringe_summary(table))


def handle_decay(spec: RunSpec) -> CommandOutput:
    cfg = spec.experiment_config()
    decay = exp.coherence_decay_scan(
        cfg,
        spec.axis("coarse_interval_ps"),
        fine_span_ps=spec.experiment.fine_span_ps,
        fine_step_ps=spec.experiment.fine_step_ps,
    )
    table = exp.SweepTable(
        axes={"coarse_interval_ps": decay.intervals_ps},
        observable="fringe_amplitude",
        values=decay.amplitudes,
        metadata={"config_hash": cfg.config_hash()},
    )
    gamma_sum = 0.5 * (cfg.gamma1_per_ps + cfg.gamma2_per_ps)
    return CommandOutput(
        tables={"decay": table},
        summary={
            "t2_ps": decay.t2_ps,
            "t2_analytic_ps": 1.0 / gamma_sum if gamma_sum > 0 else None,
            "decay_fit": decay.fit.as_dict() if decay.fit else None,
            "failed_intervals": decay.failures,
        },
    )


def _fixed_interval(spec: RunSpec) -> float:
    interval = spec.experiment.fixed_interval_ps
    if interval is None:
        raise SchemaError("phase-area needs experiment.fixed_interval_ps", field="experiment.fixed_interval_ps")
    return interval


def handle_phase_area(spec: RunSpec) -> CommandOutput:
    table = exp.phase_area_map(
        spec.experiment_config(), _pi(spec, "control_area_pi"), spec.axis("phase_rad"), _fixed_interval(spec)
    )
    return CommandOutput(tables={"phase_area": table}, summary={"maximum": _extremum(table)})


def handle_t1(spec: RunSpec) -> CommandOutput:
    cfg = spec.experiment_config()
    table = exp.t1_probe(cfg, spec.axis("interval_ps"))
    summary: dict[str, Any] = {"t1_analytic_ps": 1.0 / cfg.gamma2_per_ps if cfg.gamma2_per_ps > 0 else None}
    try:
        result = exp.t1_fit(table)
        summary["t1_fit"] = result.as_dict()
        summary["t1_ps"] = result.params["tau"]
    except FitError as exc:
        summary["t1_fit"] = {"error": str(exc)}
    return CommandOutput(tables={"t1": table}, summary=summary)


def _plan_for(spec: RunSpec, cfg: exp.ExperimentConfig) -> exp.SweepPlan:
    inner = spec.effective_command
    if inner is Command.RABI:
        return exp.plan_rabi_sweep(cfg, _pi(spec, "stokes_area_pi"))
    if inner in (Command.MAP, Command.HIGH_ORBITAL):
        return exp.plan_detuning_area_map(cfg, spec.axis("small_delta_mev"), _pi(spec, "stokes_area_pi"))
    if inner is Command.DELAY:
        return exp.plan_delay_scan(cfg, spec.axis("stokes_delay_ps"))
    if inner is Command.RAMSEY:
        return exp.plan_ramsey_scan(cfg, spec.axis("interval_ps"), spec.axis("phase_rad"))
    if inner is Command.PHASE_AREA:
        return exp.plan_phase_area_map(
            cfg, _pi(spec, "control_area_pi"), spec.axis("phase_rad"), _fixed_interval(spec)
        )
    if inner is Command.T1:
        return exp.plan_t1_probe(cfg, spec.axis("interval_ps"))
    raise SchemaError(f"noise-mc cannot wrap '{inner.value}'", field="experiment.inner")


def handle_noise_mc(spec: RunSpec) -> CommandOutput:
    cfg = spec.experiment_config()
    plan = _plan_for(spec, cfg)
    table = exp.noise_monte_carlo(cfg, plan, spec.experiment.n_samples)
    summary: dict[str, Any] = {
        "inner": spec.effective_command.value,
        "n_samples": spec.experiment.n_samples,
        "contrast": exp.fringe_contrast(table),
        "maximum": _extremum(table),
    }
    if spec.effective_command is Command.RAMSEY:
        summary.update(_fringe_summary(table))
    return CommandOutput(tables={"noise_mc": table}, summary=summary)


def _calibrate(spec: RunSpec, cfg: exp.ExperimentConfig) -> opt.CalibrationTable:
    delta_points = spec.axis("small_delta_mev")
    area_points = _pi(spec, "stokes_area_pi")
    return opt.find_pi_condition(
        cfg,
        (float(delta_points[0]), float(delta_points[-1])),
        (float(area_points[0]), float(area_points[-1])),
        n_delta=len(delta_points),
        n_area=len(area_points),
    )


def handle_calibrate(spec: RunSpec) -> CommandOutput:
    cfg = spec.experiment_config()
    cal = _calibrate(spec, cfg)
    fidelity = opt.pi_fidelity(cfg, cal, p_cw_nw=spec.experiment.p_cw_nw, p0_nw=spec.experiment.p0_nw)
    summary: dict[str, Any] = {
        "calibration": cal.model_dump(mode="json"),
        "delta_star_mev": cal.delta_star_mev,
        "stokes_area_pi": cal.stokes_area_pi_rad / math.pi,
        "pi_fidelity": fidelity.fidelity,
        "readout_probability": fidelity.readout_probability,
    }
    if spec.experiment.delta_hot_values_mev:
        if spec.system is not LevelKind.FOUR_LEVEL_HOT:
            raise SchemaError(
                "delta_hot_values_mev needs system 'four_level_hot'", field="experiment.delta_hot_values_mev"
            )
        delta_points = spec.axis("small_delta_mev")
        area_points = _pi(spec, "stokes_area_pi")
        sensitivity = opt.hot_trion_sensitivity(
            cfg,
            spec.experiment.delta_hot_values_mev,
            (float(delta_points[0]), float(delta_points[-1])),
            (float(area_points[0]), float(area_points[-1])),
            n_delta=len(delta_points),
            n_area=len(area_points),
        )
        summary["hot_trion_sensitivity"] = {
            "delta_hot_mev": sensitivity.delta_hot_mev,
            "calibrations": [c.model_dump(mode="json") for c in sensitivity.calibrations],
            "delta_spread_mev": sensitivity.delta_spread_mev,
            "area_spread_rad": sensitivity.area_spread_rad,
            "min_transfer": sensitivity.min_transfer,
        }
    return CommandOutput(summary=summary, documents={"calibration": cal.model_dump(mode="json")})


def handle_synthesize(spec: RunSpec) -> CommandOutput:
    cfg = spec.experiment_config()
    cal = spec.experiment.calibration or _calibrate(spec, cfg)
    thetas = _pi(spec, "theta_pi")
    phis = spec.axis("phi_rad")
    achieved = np.zeros((len(thetas), len(phis)))
    target = np.zeros_like(achieved)
    within = np.zeros_like(achieved)
    azimuth = np.full_like(achieved, np.nan)
    family = exp.RotationFamily(opt.calibrated_config(cfg, cal))
    for i, theta in enumerate(thetas):
        for j, phi in enumerate(phis):
            rotation = opt.synthesize_rotation(float(theta), float(phi), cal, verify_with=cfg, family=family)
            achieved[i, j] = rotation.achieved_population
            target[i, j] = rotation.target_population
            within[i, j] = float(bool(rotation.within_tolerance))
            if spec.experiment.measure_azimuth and abs(math.sin(theta)) >= opt.AZIMUTH_MIN_SIN:
                azimuth[i, j] = opt.measure_azimuth(cfg, cal, float(phi), theta=float(theta), family=family)
    extra = {"target": target, "within_tolerance": within}
    if spec.experiment.measure_azimuth:
        extra["azimuth_rad"] = azimuth
    table = exp.SweepTable(
        axes={"theta_rad": thetas, "phi_rad": phis},
        observable=cfg.observable,
        values=achieved,
        extra_columns=extra,
        metadata={"config_hash": cfg.config_hash()},
    )
    return CommandOutput(
        tables={"synthesize": table},
        summary={
            "calibration": cal.model_dump(mode="json"),
            "max_population_error": float(np.max(np.abs(achieved - target))),
            "all_within_tolerance": bool(within.all()),
        },
    )


def handle_validate(spec: RunSpec) -> CommandOutput:
    """Model construction plus density-matrix, Hermiticity and frame checks at one pulse."""
    cfg = spec.experiment_config()
    seq = exp.single_pulse(cfg)
    t_mid = cfg.base_pulse.center_ps
    checks: dict[str, Any] = {}

    hamiltonian = build_hamiltonian(cfg.system, cfg.energies, cfg.dipoles, seq)
    checks["hermiticity_defect"] = hermiticity_defect(hamiltonian(t_mid))

    result = evolve(
        hamiltonian,
        list(cfg.dissipators()),
        DensityMatrix.pure(cfg.system.dim, cfg.system.index("h1")),
        cfg.integrator,
    )
    report = validate_density(result.final_state)
    checks["trace_defect"] = report.trace_defect
    checks["min_eigenvalue"] = report.min_eigenvalue
    checks["final_population"] = float(result.populations[-1, cfg.system.index(cfg.target)])
    if not cfg.dissipators():
        checks["purity_defect"] = abs(1.0 - purity(result.final_state.matrix))

    if cfg.system.kind is not LevelKind.TWO_LEVEL_EFFECTIVE:
        h = 1e-6
        rot = h_rot(cfg.system, cfg.energies, cfg.dipoles, seq, t_mid)
        lab = h_lab(cfg.system, cfg.energies, cfg.dipoles, seq, VALIDATION_OMEGA_T, t_mid)
        u = u0(cfg.energies, VALIDATION_OMEGA_T, t_mid, cfg.system)
        du_dag = (
            u0(cfg.energies, VALIDATION_OMEGA_T, t_mid + h, cfg.system).conj().T
            - u0(cfg.energies, VALIDATION_OMEGA_T, t_mid - h, cfg.system).conj().T
        ) / (2 * h)
        transformed = u.conj().T @ lab @ u + 1j * du_dag @ u
        checks["frame_defect"] = float(np.max(np.abs(transformed - rot)))

    ok = (
        checks["hermiticity_defect"] <= 1e-12
        and checks["trace_defect"] <= 1e-9
        and checks["min_eigenvalue"] >= -1e-7
        and checks.get("purity_defect", 0.0) <= 1e-7
        and checks.get("frame_defect", 0.0) <= 1e-6
    )
    checks["passed"] = ok
    return CommandOutput(summary={"checks": checks}, documents={"validation": checks}, ok=ok)


HANDLERS: dict[Command, Callable[[RunSpec], CommandOutput]] = {
    Command.RABI: handle_rabi,
    Command.MAP: handle_map,
    Command.DELAY: handle_delay,
    Command.RAMSEY: handle_ramsey,
    Command.DECAY: handle_decay,
    Command.PHASE_AREA: handle_phase_area,
    Command.T1: handle_t1,
    Command.NOISE_MC: handle_noise_mc,
    Command.HIGH_ORBITAL: handle_high_orbital,
    Command.CALIBRATE: handle_calibrate,
    Command.SYNTHESIZE: handle_synthesize,
    Command.VALIDATE: handle_validate,
}


def _check_axes(spec: RunSpec) -> None:
    """Fail on missing or empty axes before any simulation starts."""
    names = list(REQUIRED_AXES.get(spec.effective_command, ()))
    if spec.command is Command.SYNTHESIZE and spec.experiment.calibration is None:
        names += REQUIRED_AXES[Command.CALIBRATE]
    for name in names:
        spec.axis(name)


def execute(spec: RunSpec) -> CommandOutput:
    _check_axes(spec)
    return HANDLERS[spec.command](spec)


def run(spec: RunSpec) -> int:
    """Execute `spec`, write its artifacts and return the process exit code."""
    out_dir = spec.resolved_output_dir()
    log = logger.bind(command=spec.command.value, output_dir=str(out_dir))
    started = time.perf_counter()
    try:
        output = execute(spec)
    except RamanError as exc:
        log.error("run_failed", error=str(exc), exit_code=exc.exit_code, error_type=type(exc).__name__)
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValidationError as exc:
        log.error("run_failed", error=str(exc), exit_code=EXIT_CONFIG)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    wall = time.perf_counter() - started

    out_dir.mkdir(parents=True, exist_ok=True)
    files = [write_table(table, out_dir / name, spec.format).name for name, table in output.tables.items()]
    for name, document in output.documents.items():
        _dump(out_dir / f"{name}.json", document)
        files.append(f"{name}.json")

    summary = {
        "command": spec.command.value,
        "config": json.loads(canonical_json(spec)),
        "config_hash": spec.config_hash(),
        "seed": spec.seed,
        "files": files,
        **output.summary,
    }
    _dump(out_dir / "summary.json", summary)
    _dump(out_dir / "timing.json", {"wall_time_s": wall})
    log.info("run_finished", wall_time_s=round(wall, 3), files=files)
    print(out_dir / "summary.json")
    return EXIT_OK if output.ok else EXIT_NUMERICAL


__all__ = ["CommandOutput", "HANDLERS", "execute", "run", "write_table"]
