"""Unit tests for raman_qubit.services.fitting."""

import math

import numpy as np
import pytest

from raman_qubit.core.constants import FWHM_PER_SIGMA
from raman_qubit.core.errors import FitError, NonUniformSamplingError
from raman_qubit.services.fitting import (
    MAX_ITERATIONS,
    PARAMETERS,
    FitModel,
    evaluate_model,
    fft_spectrum,
    find_spectral_peaks,
    fit,
    fit_fringe,
    fringe_amplitude,
    fringe_phase,
    gaussian_fwhm,
)

SYNTHETIC = [
    (FitModel.GAUSSIAN, np.linspace(-10.0, 10.0, 201), {"amplitude": 0.8, "center": 1.5, "sigma": 2.0, "offset": 0.1}),
    (FitModel.SINUSOID, np.linspace(0.0, 10.0, 401), {"amplitude": 0.4, "frequency": 1.042, "phase": 0.7, "offset": 0.5}),
    (FitModel.EXP_DECAY, np.linspace(0.0, 600.0, 61), {"amplitude": 0.9, "tau": 159.0, "offset": 0.05}),
    (FitModel.LORENTZIAN, np.linspace(-3.0, 3.0, 301), {"amplitude": 1.0, "center": 0.3, "gamma": 0.5, "offset": 0.02}),
    (FitModel.SATURATION, np.linspace(10.0, 2000.0, 50), {"amplitude": 1.0, "p0": 396.0}),
]


class TestFit:
    """Levenberg–Marquardt fits on noiseless data."""

    @pytest.mark.parametrize("model,x,truth", SYNTHETIC, ids=[m.value for m, _, _ in SYNTHETIC])
    def test_recovers_parameters(self, model, x, truth):
        """Test each model recovers the parameters it was generated with."""
        result = fit(model, x, evaluate_model(model, x, truth))
        assert result.converged
        assert set(result.params) == set(PARAMETERS[model])
        for name, value in truth.items():
            assert result[name] == pytest.approx(value, rel=1e-6, abs=1e-9), name

    def test_too_few_points(self):
        """Test a fit needs twice as many points as parameters."""
        x = np.arange(5.0)
        with pytest.raises(FitError):
            fit(FitModel.GAUSSIAN, x, x)

    def test_unknown_init(self):
        """Test overriding a parameter the model does not have raises."""
        x = np.linspace(0.0, 1.0, 20)
        with pytest.raises(FitError):
            fit(FitModel.EXP_DECAY, x, np.exp(-x), init={"frequency": 1.0})

    def test_init_override(self):
        """Test an explicit starting point is honoured and still converges."""
        x = np.linspace(0.0, 600.0, 61)
        y = 0.9 * np.exp(-x / 159.0)
        result = fit(FitModel.EXP_DECAY, x, y, init={"tau": 100.0, "offset": 0.0})
        assert result["tau"] == pytest.approx(159.0, rel=1e-6)

    def test_gaussian_fwhm(self):
        """Test FWHM = 2√(2 ln 2)·σ."""
        x = np.linspace(-10.0, 10.0, 201)
        truth = {"amplitude": 1.0, "center": 0.0, "sigma": 1.7, "offset": 0.0}
        result = fit(FitModel.GAUSSIAN, x, evaluate_model(FitModel.GAUSSIAN, x, truth))
        assert gaussian_fwhm(result) == pytest.approx(FWHM_PER_SIGMA * 1.7, rel=1e-6)

    def test_iterations_count_lm_steps(self):
        """Test iterations counts LM steps: few from the truth, more from far away, within the cap."""
        x = np.linspace(0.0, 600.0, 61)
        truth = {"amplitude": 0.9, "tau": 159.0, "offset": 0.05}
        y = evaluate_model(FitModel.EXP_DECAY, x, truth)
        near = fit(FitModel.EXP_DECAY, x, y, init=truth)
        far = fit(FitModel.EXP_DECAY, x, y, init={"amplitude": 0.5, "tau": 60.0, "offset": 0.2})
        assert 1 <= near.iterations <= 3
        assert near.iterations < far.iterations <= MAX_ITERATIONS
        assert far["tau"] == pytest.approx(159.0, rel=1e-6)

    def test_singular_normal_matrix(self):
        """Test a flat trace leaves centre and width undetermined and raises FitError."""
        x = np.linspace(-10.0, 10.0, 41)
        with pytest.raises(FitError, match="singular"):
            fit(FitModel.GAUSSIAN, x, np.full_like(x, 0.3))

    def test_uncertainties_from_normal_matrix(self):
        """Test a noiseless fit reports finite, near-zero uncertainties."""
        x = np.linspace(-3.0, 3.0, 301)
        truth = {"amplitude": 1.0, "center": 0.3, "gamma": 0.5, "offset": 0.02}
        result = fit(FitModel.LORENTZIAN, x, evaluate_model(FitModel.LORENTZIAN, x, truth))
        sigmas = np.array(list(result.param_uncertainties.values()))
        assert np.all(np.isfinite(sigmas))
        assert np.all(sigmas < 1e-6)

    def test_predict(self):
        """Test a fitted result reproduces its data."""
        x = np.linspace(10.0, 2000.0, 50)
        y = x / (396.0 + x)
        result = fit(FitModel.SATURATION, x, y)
        np.testing.assert_allclose(result.predict(x), y, atol=1e-9)


class TestSpectrum:
    """Windowed FFT estimates."""

    def test_peak_frequency(self):
        """Test the peak of a 1.042 THz fringe sampled for 50 ps."""
        t = np.arange(0.0, 50.0 + 1e-9, 0.05)
        spectrum = fft_spectrum(t, 0.3 * np.cos(2 * np.pi * 1.042 * t) + 0.5)
        assert spectrum.peak_frequency == pytest.approx(1.042, rel=0.025)

    def test_parseval(self):
        """Test the windowed series and its spectrum carry the same energy."""
        rng = np.random.default_rng(1)
        t = np.arange(256) * 0.1
        spectrum = fft_spectrum(t, rng.normal(size=256))
        assert spectrum.spectral_energy == pytest.approx(spectrum.windowed_energy, rel=1e-9)

    def test_non_uniform(self):
        """Test jittered sample times raise."""
        t = np.arange(16, dtype=float)
        t[5] += 0.3
        with pytest.raises(NonUniformSamplingError):
            fft_spectrum(t, np.sin(t))

    def test_too_short(self):
        """Test fewer than eight samples raise."""
        t = np.arange(7, dtype=float)
        with pytest.raises(FitError):
            fft_spectrum(t, np.sin(t))

    def test_flat_series_has_no_peak(self):
        """Test a constant series reports peak frequency 0."""
        t = np.arange(32, dtype=float)
        assert fft_spectrum(t, np.full(32, 0.4)).peak_frequency == 0.0

    def test_two_tones(self):
        """Test both tones of a two-tone series are found, ascending."""
        t = np.arange(0.0, 100.0, 0.05)
        y = np.cos(2 * np.pi * 1.0 * t) + 0.6 * np.cos(2 * np.pi * 2.5 * t)
        peaks = find_spectral_peaks(fft_spectrum(t, y), count=2)
        assert peaks == pytest.approx([1.0, 2.5], abs=0.01)


class TestFringes:
    """Fringe amplitude and phase extraction."""

    def test_phase_at_known_frequency(self):
        """Test the projected phase of an exact cosine."""
        x = np.linspace(0.0, 20.0, 400)
        y = 0.2 * np.cos(2 * np.pi * 1.042 * x + 0.3) + 0.5
        assert fringe_phase(x, y, 1.042) == pytest.approx(0.3, abs=1e-9)

    def test_phase_needs_points(self):
        """Test two points are not enough for a phase."""
        with pytest.raises(FitError):
            fringe_phase([0.0, 1.0], [0.0, 1.0], 1.0)

    def test_constant_fringe(self):
        """Test a flat trace has zero amplitude."""
        x = np.linspace(0.0, 5.0, 50)
        assert fringe_amplitude(x, np.full(50, 0.3)) == 0.0

    def test_late_window(self):
        """Test a fringe sampled far from x = 0 keeps its amplitude and absolute phase."""
        x = 100.0 + np.linspace(0.0, 5.0, 201)
        y = 0.3 * np.cos(2 * np.pi * 1.042 * x + 1.1) + 0.4
        result = fit_fringe(x, y)
        assert fringe_amplitude(x, y) == pytest.approx(0.3, rel=1e-6)
        assert result["frequency"] == pytest.approx(1.042, rel=1e-7)
        assert math.remainder(result["phase"] - 1.1, 2 * math.pi) == pytest.approx(0.0, abs=1e-4)
