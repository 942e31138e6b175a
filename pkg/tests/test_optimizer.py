"""Unit tests for raman_qubit.services.optimizer.

The π-condition search is exercised against a synthetic quadratic transfer
surface patched in for the map and the point evaluator; the rotation tools run
the adiabatically eliminated model.
"""

import math
from unittest.mock import patch

import numpy as np
import pytest
from pydantic import ValidationError

from raman_qubit.core.errors import NoUsablePiConditionError, SchemaError, UnbracketedOptimumError
from raman_qubit.services.drive import RamanPulse
from raman_qubit.services.experiments import (
    ExperimentConfig,
    SweepTable,
    final_transfer,
    readout_signal,
)
from raman_qubit.services.optimizer import (
    CalibrationTable,
    calibrated_config,
    find_pi_condition,
    hot_trion_sensitivity,
    measure_azimuth,
    pi_fidelity,
    synthesize_rotation,
    system_hash,
)
from raman_qubit.services.system_model import DipoleSet, EnergySpec, LevelKind, LevelSystem

DELTA_RANGE = (0.0, 0.5)
AREA_RANGE = (1.5 * math.pi, 2.7 * math.pi)


def _surface(peak_delta: float, peak_area: float, height: float):
    def transfer(delta, area):
        return height - ((delta - peak_delta) / 0.1) ** 2 - ((area - peak_area) / 1.0) ** 2

    return transfer


def _patched(surface):
    def fake_map(cfg, deltas, areas, *, workers=None):
        d, a = np.meshgrid(np.asarray(deltas), np.asarray(areas), indexing="ij")
        return SweepTable(
            axes={"small_delta_mev": np.asarray(deltas), "stokes_area_rad": np.asarray(areas)},
            observable="c_h2",
            values=surface(d, a),
        )

    return (
        patch("raman_qubit.services.optimizer.detuning_area_map", side_effect=fake_map),
        patch("raman_qubit.services.optimizer._transfer", side_effect=lambda cfg, d, a: float(surface(d, a))),
    )


def _effective_cfg(**changes) -> ExperimentConfig:
    return ExperimentConfig(
        system=LevelSystem(kind=LevelKind.TWO_LEVEL_EFFECTIVE),
        dipoles=DipoleSet(mu2=1.0),
        base_pulse=RamanPulse.pair(fwhm_ps=2.0, pump_area_rad=3.0, stokes_area_rad=3.0),
        **changes,
    )


def _calibration(cfg: ExperimentConfig) -> CalibrationTable:
    return CalibrationTable(
        delta_star_mev=0.05,
        stokes_area_pi_rad=3.0,
        pump_area_rad=3.0,
        transfer_at_pi=0.9,
        fwhm_ps=2.0,
        system_hash=system_hash(cfg),
    )


class TestCalibrationTable:
    """Calibration records and their fingerprints."""

    def test_validation(self):
        """Test a non-positive π area is rejected."""
        with pytest.raises(ValidationError):
            CalibrationTable(delta_star_mev=0.2, stokes_area_pi_rad=0.0, pump_area_rad=1.0, transfer_at_pi=0.9, system_hash="x")

    def test_pi_pulse(self):
        """Test the calibrated pulse carries the stored areas and width."""
        pulse = _calibration(_effective_cfg()).pi_pulse()
        assert pulse.stokes.area_rad == 3.0
        assert pulse.pump.area_rad == 3.0
        assert pulse.fwhm_ps == 2.0

    def test_system_hash_ignores_search_variables(self):
        """Test δ and the Stokes area leave the fingerprint alone but Δ changes it."""
        cfg = _effective_cfg()
        moved = cfg.with_updates(
            energies=cfg.energies.with_small_delta(0.3),
            base_pulse=cfg.base_pulse.with_stokes_area(5.0),
        )
        detuned = cfg.with_updates(energies=cfg.energies.model_copy(update={"big_delta_mev": 0.8}))
        assert system_hash(moved) == system_hash(cfg)
        assert system_hash(detuned) != system_hash(cfg)

    def test_calibrated_config(self):
        """Test the calibrated config carries δ* and the π areas."""
        cfg = _effective_cfg()
        cal = _calibration(cfg).model_copy(update={"delta_star_mev": 0.21, "stokes_area_pi_rad": 4.0})
        out = calibrated_config(cfg, cal)
        assert out.energies.small_delta_mev == 0.21
        assert out.base_pulse.stokes.area_rad == 4.0


class TestFindPiCondition:
    """Coarse grid plus Nelder–Mead polish."""

    def test_grid_too_small(self):
        """Test grids below 21 points per axis are rejected."""
        with pytest.raises(SchemaError):
            find_pi_condition(_effective_cfg(), DELTA_RANGE, AREA_RANGE, n_delta=11)

    def test_refines_to_peak(self):
        """Test the search lands on the peak of the surface."""
        map_patch, transfer_patch = _patched(_surface(0.21, 2.1 * math.pi, 0.95))
        with map_patch, transfer_patch:
            cal = find_pi_condition(_effective_cfg(), DELTA_RANGE, AREA_RANGE)
        assert cal.delta_star_mev == pytest.approx(0.21, abs=1e-3)
        assert cal.stokes_area_pi_rad == pytest.approx(2.1 * math.pi, abs=1e-2)
        assert cal.transfer_at_pi == pytest.approx(0.95, abs=1e-4)
        assert cal.pump_area_rad == 3.0
        assert cal.system_hash == system_hash(_effective_cfg())

    def test_edge_maximum(self):
        """Test a maximum on the grid edge raises with the best grid point attached."""
        map_patch, transfer_patch = _patched(_surface(0.6, 2.1 * math.pi, 0.95))
        with map_patch, transfer_patch:
            with pytest.raises(UnbracketedOptimumError) as info:
                find_pi_condition(_effective_cfg(), DELTA_RANGE, AREA_RANGE)
        assert info.value.calibration.delta_star_mev == pytest.approx(0.5)

    def test_no_usable_transfer(self):
        """Test a peak transfer below one half raises with the refined point attached."""
        map_patch, transfer_patch = _patched(_surface(0.21, 2.1 * math.pi, 0.3))
        with map_patch, transfer_patch:
            with pytest.raises(NoUsablePiConditionError) as info:
                find_pi_condition(_effective_cfg(), DELTA_RANGE, AREA_RANGE)
        assert info.value.calibration.transfer_at_pi == pytest.approx(0.3, abs=1e-3)

    def test_hot_trion_sensitivity(self):
        """Test one calibration per Δhot and the spreads across them."""
        cfg = ExperimentConfig(
            system=LevelSystem(kind=LevelKind.FOUR_LEVEL_HOT),
            energies=EnergySpec(delta_hot_mev=1.5),
        )
        seen = []

        def fake(variant, *args, **kwargs):
            seen.append(variant.energies.delta_hot_mev)
            shift = 0.01 * len(seen)
            return _calibration(variant).model_copy(
                update={"delta_star_mev": 0.2 + shift, "stokes_area_pi_rad": 7.0 + shift, "transfer_at_pi": 0.9 - shift}
            )

        with patch("raman_qubit.services.optimizer.find_pi_condition", side_effect=fake):
            result = hot_trion_sensitivity(cfg, [1.0, 2.0, 3.0], DELTA_RANGE, AREA_RANGE)
        assert seen == [1.0, 2.0, 3.0]
        assert result.delta_spread_mev == pytest.approx(0.02)
        assert result.area_spread_rad == pytest.approx(0.02)
        assert result.min_transfer == pytest.approx(0.87)

    def test_hot_trion_needs_hot_system(self):
        """Test the sensitivity scan refuses other level systems."""
        with pytest.raises(ValueError):
            hot_trion_sensitivity(_effective_cfg(), [1.0], DELTA_RANGE, AREA_RANGE)


class TestRotations:
    """Rotation synthesis from a calibration."""

    def test_scales_both_fields(self):
        """Test without a model θ scales pump and Stokes by √(θ/π) and φ sets the phase."""
        cal = _calibration(_effective_cfg())
        rotation = synthesize_rotation(math.pi / 2, 0.8, cal)
        assert rotation.pulse.stokes.area_rad == pytest.approx(3.0 * math.sqrt(0.5))
        assert rotation.pulse.pump.area_rad == pytest.approx(3.0 * math.sqrt(0.5))
        assert rotation.pulse.relative_phase == pytest.approx(0.8)
        assert rotation.target_population == pytest.approx(0.5)
        assert rotation.achieved_population is None

    @pytest.mark.parametrize("theta", [-0.1, 2 * math.pi, 7.0])
    def test_theta_out_of_range(self, theta):
        """Test θ outside [0, 2π) is a schema error."""
        with pytest.raises(SchemaError):
            synthesize_rotation(theta, 0.0, _calibration(_effective_cfg()))

    def test_verified_rotation(self):
        """Test verification runs the model and reports the achieved population."""
        cfg = _effective_cfg()
        cal = _calibration(cfg)
        rotation = synthesize_rotation(math.pi, 0.0, cal, verify_with=cfg)
        expected = final_transfer(calibrated_config(cfg, cal))
        assert rotation.achieved_population == pytest.approx(expected, abs=1e-9)
        assert rotation.within_tolerance == (abs(expected - 1.0) <= 0.03)

    def test_pi_fidelity(self):
        """Test the fidelity is the π-pulse transfer and the readout scales it."""
        cfg = _effective_cfg()
        cal = _calibration(cfg)
        result = pi_fidelity(cfg, cal)
        assert result.fidelity == pytest.approx(final_transfer(calibrated_config(cfg, cal)), abs=1e-12)
        assert result.readout_probability == pytest.approx(readout_signal(result.fidelity))

    @pytest.mark.parametrize("phi,expected", [(1.0, 1.0), (-2.5, -2.5), (4.0, 4.0 - 2 * math.pi)])
    def test_measure_azimuth(self, phi, expected):
        """Test the Ramsey readout recovers the programmed azimuth, wrapped to (−π, π]."""
        cfg = _effective_cfg()
        assert measure_azimuth(cfg, _calibration(cfg), phi) == pytest.approx(expected, abs=1e-3)

    def test_rotation_family_scale(self):
        """Test a verified π/2 rotation transfers half of what the calibrated π pulse does."""
        cfg = _effective_cfg()
        cal = _calibration(cfg)
        rotation = synthesize_rotation(math.pi / 2, 0.0, cal, verify_with=cfg)
        full = final_transfer(calibrated_config(cfg, cal))
        assert rotation.pulse.pump.area_rad / 3.0 == pytest.approx(rotation.pulse.stokes.area_rad / 3.0)
        assert rotation.achieved_population == pytest.approx(0.5 * full, abs=1e-4)

    def test_identity_rotation(self):
        """Test θ = 0 switches both fields off."""
        rotation = synthesize_rotation(0.0, 1.0, _calibration(_effective_cfg()), verify_with=_effective_cfg())
        assert rotation.pulse.pump.area_rad == 0.0
        assert rotation.achieved_population == pytest.approx(0.0, abs=1e-12)

    def test_measure_azimuth_at_theta(self):
        """Test the azimuth is read out with the requested polar angle as control."""
        cfg = _effective_cfg()
        assert measure_azimuth(cfg, _calibration(cfg), 1.0, theta=0.75 * math.pi) == pytest.approx(1.0, abs=1e-3)

    @pytest.mark.parametrize("theta", [0.0, math.pi])
    def test_measure_azimuth_at_pole(self, theta):
        """Test a polar angle at a pole is rejected."""
        cfg = _effective_cfg()
        with pytest.raises(SchemaError):
            measure_azimuth(cfg, _calibration(cfg), 1.0, theta=theta)
