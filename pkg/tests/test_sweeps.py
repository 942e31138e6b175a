"""Unit tests for raman_qubit.services.sweeps."""

import math

import pytest

from raman_qubit.services.drive import NoiseSpec, PulseSequence, RamanPulse
from raman_qubit.services.lindblad import IntegratorConfig
from raman_qubit.services.sweeps import SimulationTask, evaluate, run_task, task_population, task_series
from raman_qubit.services.system_model import DipoleSet, EnergySpec, LevelKind, LevelSystem


def _explode(x: int) -> int:
    if x == 3:
        raise ZeroDivisionError("boom")
    return x


def _task(**kwargs) -> SimulationTask:
    pulse = RamanPulse.pair(fwhm_ps=2.0, pump_area_rad=2.0, stokes_area_rad=3.0)
    defaults = dict(
        system=LevelSystem(kind=LevelKind.TWO_LEVEL_EFFECTIVE),
        energies=EnergySpec(),
        dipoles=DipoleSet(),
        sequence=PulseSequence.around([pulse]),
        integrator=IntegratorConfig(),
    )
    defaults.update(kwargs)
    return SimulationTask(**defaults)


class TestEvaluate:
    """Order and error handling of the sweep map."""

    def test_serial_keeps_order(self):
        """Test one worker maps in item order."""
        assert evaluate([-2, 1, -3], abs, workers=1) == [2, 1, 3]

    def test_parallel_keeps_order(self):
        """Test a process pool returns results in item order."""
        items = [float(i) for i in range(12)]
        assert evaluate(items, math.sqrt, workers=2) == [math.sqrt(x) for x in items]

    def test_failure_names_the_point(self):
        """Test an exception carries the index of the failing point."""
        with pytest.raises(ZeroDivisionError) as info:
            evaluate([1, 2, 3], _explode, workers=1)
        assert "while evaluating sweep point 2" in info.value.__notes__

    def test_empty(self):
        """Test an empty sweep returns an empty list."""
        assert evaluate([], abs, workers=1) == []


class TestTasks:
    """Single simulation tasks."""

    def test_population_in_range(self):
        """Test the observable population is a probability."""
        assert 0.0 <= task_population(_task()) <= 1.0

    def test_series_follows_samples(self):
        """Test task_series returns one value per sample time, starting in h1."""
        task = _task()
        start, end = task.sequence.t_start_ps, task.sequence.t_end_ps
        task = _task(integrator=IntegratorConfig().with_samples([start, 0.0, end]))
        series = task_series(task)
        assert len(series) == 3
        assert series[0] == 0.0

    def test_zero_noise_matches_deterministic(self):
        """Test zero-width jitter reproduces the noiseless run bitwise."""
        zero = NoiseSpec(phase_fwhm_rad=0.0, span_fraction_fwhm=0.0, area_fraction_fwhm=0.0, seed=3)
        plain = task_population(_task())
        noisy = task_population(_task().with_noise(zero, 5))
        assert noisy == plain

    def test_noise_is_reproducible(self):
        """Test the same (seed, sample_index) gives the same answer."""
        noisy = _task().with_noise(NoiseSpec(seed=9), 2)
        assert task_population(noisy) == task_population(noisy)

    def test_three_level_basis(self):
        """Test run_task starts the full model in h1 and uses its basis."""
        task = _task(system=LevelSystem(kind=LevelKind.THREE_LEVEL), energies=EnergySpec(small_delta_mev=0.25))
        result = run_task(task)
        assert result.basis == ("h1", "T+", "h2")
        assert result.population("h1")[0] == 1.0
