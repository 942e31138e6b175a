"""Unit tests for raman_qubit.services.lindblad."""

import math
from unittest.mock import MagicMock, patch

import numpy as np
import pytest
from pydantic import ValidationError

from raman_qubit.core.algebra import DensityMatrix, projector, purity
from raman_qubit.core.errors import InvalidStateError, StepSizeUnderflowError, UnknownLevelError
from raman_qubit.services.drive import PulseSequence, RamanPulse
from raman_qubit.services.lindblad import IntegratorConfig, evolve, final_population
from raman_qubit.services.system_model import (
    DipoleSet,
    DissipatorSpec,
    EffectiveHamiltonian,
    EnergySpec,
    LevelKind,
    LevelSystem,
    RotatingFrameHamiltonian,
    dissipators,
)

TIGHT = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12)
BASIS = ("g", "e")


def _constant(h: np.ndarray):
    return lambda t: h


class TestAnalyticOracles:
    """Two-level problems with closed-form answers."""

    def test_resonant_rabi(self):
        """Test P_e(t) = sin²(Ωt/2) for a constant resonant drive."""
        omega = 1.3
        h = np.array([[0, omega / 2], [omega / 2, 0]], dtype=complex)
        times = np.linspace(0.0, 3.0, 7)
        result = evolve(
            _constant(h), [], DensityMatrix.pure(2, 0), TIGHT.with_samples(times), t_span=(0.0, 3.0), basis=BASIS
        )
        np.testing.assert_allclose(result.population("e"), np.sin(omega * times / 2) ** 2, atol=1e-6)
        np.testing.assert_allclose(result.times, times)

    def test_relaxation(self):
        """Test A = |g⟩⟨e| at rate γ empties |e⟩ as e^{−γt}."""
        gamma = 0.5
        relax = DissipatorSpec(projector(2, 0, 1), gamma)
        times = np.linspace(0.0, 4.0, 9)
        result = evolve(
            _constant(np.zeros((2, 2), dtype=complex)),
            [relax],
            DensityMatrix.pure(2, 1),
            TIGHT.with_samples(times),
            t_span=(0.0, 4.0),
            basis=BASIS,
        )
        np.testing.assert_allclose(result.population("e"), np.exp(-gamma * times), rtol=1e-6)
        np.testing.assert_allclose(result.population("g"), 1 - np.exp(-gamma * times), atol=1e-9)

    def test_pure_dephasing(self):
        """Test A = |e⟩⟨e| at rate γ damps the coherence as e^{−γt/2} and keeps populations."""
        gamma = 0.4
        rho0 = DensityMatrix(np.full((2, 2), 0.5, dtype=complex))
        times = np.linspace(0.0, 5.0, 6)
        result = evolve(
            _constant(np.zeros((2, 2), dtype=complex)),
            [DissipatorSpec(projector(2, 1), gamma)],
            rho0,
            TIGHT.with_samples(times),
            t_span=(0.0, 5.0),
            basis=BASIS,
        )
        np.testing.assert_allclose(np.abs(result.coherence_h1h2), 0.5 * np.exp(-gamma * times / 2), rtol=1e-6)
        np.testing.assert_allclose(result.population("e"), 0.5, atol=1e-9)


class TestFullModel:
    """Properties of driven evolutions in the rotating frame."""

    def _three_level(self) -> RotatingFrameHamiltonian:
        seq = PulseSequence.around([RamanPulse.pair(stokes_area_rad=2.0 * math.pi)])
        return RotatingFrameHamiltonian(
            LevelSystem(kind=LevelKind.THREE_LEVEL), EnergySpec(small_delta_mev=0.25), DipoleSet(), seq
        )

    def test_closed_system_invariants(self):
        """Test trace, positivity and purity survive a Raman pulse."""
        ham = self._three_level()
        result = evolve(ham, [], DensityMatrix.pure(3, 0), IntegratorConfig())
        assert result.trace_defect <= 1e-9
        assert result.max_positivity_defect <= 1e-7
        assert abs(1.0 - purity(result.final_state.matrix)) <= 1e-6
        assert result.basis == ("h1", "T+", "h2")
        np.testing.assert_allclose(result.populations.sum(axis=1), 1.0, atol=1e-9)

    def test_default_samples_are_window_ends(self):
        """Test without sample times the result holds the start and end of the window."""
        ham = self._three_level()
        result = evolve(ham, [], DensityMatrix.pure(3, 0), IntegratorConfig())
        assert tuple(result.times) == ham.t_span
        assert result.population("h1")[0] == 1.0
        assert 0.0 <= final_population(result, "h2") <= 1.0

    def test_open_system_invariants(self):
        """Test trace and positivity with both dissipators switched on."""
        ham = self._three_level()
        result = evolve(ham, dissipators(ham.system, 0.05, 0.05), DensityMatrix.pure(3, 0), IntegratorConfig())
        assert result.trace_defect <= 1e-9
        assert result.max_positivity_defect <= 1e-7

    def test_step_halving_converged(self):
        """Test halving the step cap moves the final transfer by less than 1e-6."""
        ham = self._three_level()
        coarse = IntegratorConfig(max_step_ps=0.02)
        fine = IntegratorConfig(max_step_ps=0.01)
        c_coarse = final_population(evolve(ham, [], DensityMatrix.pure(3, 0), coarse), "h2")
        c_fine = final_population(evolve(ham, [], DensityMatrix.pure(3, 0), fine), "h2")
        assert c_coarse > 0.9
        assert c_fine == pytest.approx(c_coarse, abs=1e-6)

    def test_free_step_between_pulses(self):
        """Test lifting the step cap in the pulse-free stretch saves steps without changing the answer."""
        pulse = RamanPulse.pair(fwhm_ps=2.0, pump_area_rad=2.0, stokes_area_rad=3.0)
        seq = PulseSequence.around([pulse, pulse.moved_to(100.0)])
        ham = EffectiveHamiltonian(EnergySpec(), DipoleSet(), seq)
        strict = evolve(ham, [], DensityMatrix.pure(2, 0), IntegratorConfig())
        relaxed = evolve(ham, [], DensityMatrix.pure(2, 0), IntegratorConfig(free_step_ps=1.0))
        assert relaxed.steps < strict.steps
        assert final_population(relaxed, "h2") == pytest.approx(final_population(strict, "h2"), abs=1e-6)


class TestErrors:
    """Invalid inputs and integrator failure."""

    def test_unordered_samples(self):
        """Test sample times must be ordered."""
        with pytest.raises(ValidationError):
            IntegratorConfig(sample_times_ps=(1.0, 0.5))

    def test_samples_outside_window(self):
        """Test sample times beyond the window raise."""
        cfg = IntegratorConfig(sample_times_ps=(0.0, 10.0))
        with pytest.raises(ValueError):
            evolve(_constant(np.zeros((2, 2))), [], DensityMatrix.pure(2, 0), cfg, t_span=(0.0, 1.0))

    def test_bare_callable_needs_span(self):
        """Test a plain function without t_span raises."""
        with pytest.raises(ValueError):
            evolve(_constant(np.zeros((2, 2))), [], DensityMatrix.pure(2, 0), IntegratorConfig())

    def test_invalid_initial_state(self):
        """Test a non-physical ρ0 is rejected."""
        with pytest.raises(InvalidStateError):
            evolve(
                _constant(np.zeros((2, 2))),
                [],
                DensityMatrix(np.diag([2.0, -1.0])),
                IntegratorConfig(),
                t_span=(0.0, 1.0),
            )

    def test_basis_mismatch(self):
        """Test a basis with the wrong number of labels is rejected."""
        with pytest.raises(InvalidStateError):
            evolve(
                _constant(np.zeros((2, 2))),
                [],
                DensityMatrix.pure(2, 0),
                IntegratorConfig(),
                t_span=(0.0, 1.0),
                basis=("a", "b", "c"),
            )

    def test_unknown_level(self):
        """Test final_population rejects labels outside the basis."""
        result = evolve(
            _constant(np.zeros((2, 2))), [], DensityMatrix.pure(2, 0), IntegratorConfig(), t_span=(0.0, 0.1), basis=BASIS
        )
        with pytest.raises(UnknownLevelError):
            final_population(result, "h3")

    def test_step_underflow(self):
        """Test a failed step surfaces as StepSizeUnderflowError with the time."""
        solver = MagicMock()
        solver.status = "failed"
        solver.t = 0.25
        solver.step_size = 1e-15
        with patch("raman_qubit.services.lindblad.RK45", return_value=solver):
            with pytest.raises(StepSizeUnderflowError) as info:
                evolve(
                    _constant(np.zeros((2, 2))), [], DensityMatrix.pure(2, 0), IntegratorConfig(), t_span=(0.0, 1.0)
                )
        assert info.value.time_ps == 0.25
