"""Curve fitting and spectral estimation for simulated traces.

Model functions
---------------
========== ================================================ ===========================
name       formula                                          parameters
========== ================================================ ===========================
gaussian   a·exp(−(x−c)²/2s²) + b                           amplitude, center, sigma, offset
sinusoid   a·cos(2πfx + φ) + b                              amplitude, frequency, phase, offset
exp_decay  a·exp(−x/τ) + b                                  amplitude, tau, offset
lorentzian a·(Γ/2)²/((x−x0)² + (Γ/2)²) + b                  amplitude, center, gamma, offset
saturation a·p/(p0 + p)                                     amplitude, p0
========== ================================================ ===========================

Fits run MINPACK's Levenberg–Marquardt (`lmder`) through
`scipy.optimize.least_squares` with a forward-difference Jacobian, starting
from data-driven initial guesses, which callers may override.  One Jacobian
evaluation is one LM iteration, so `FitResult.iterations` counts iterations
rather than function calls.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from enum import Enum
from typing import Final

import numpy as np
import numpy.typing as npt
import structlog
from scipy.optimize import approx_fprime, least_squares
from scipy.signal import find_peaks
from scipy.signal.windows import hann

from raman_qubit.core.constants import FWHM_PER_SIGMA
from raman_qubit.core.errors import FitError, NonUniformSamplingError

logger = structlog.get_logger(__name__)

MAX_ITERATIONS: Final = 500
X_TOL: Final = 1e-10
G_TOL: Final = 1e-12
DIFF_STEP: Final = 1.5e-8
MIN_FFT_LENGTH: Final = 8
UNIFORM_TOL: Final = 1e-6


class FitModel(str, Enum):
    GAUSSIAN = "gaussian"
    SINUSOID = "sinusoid"
    EXP_DECAY = "exp_decay"
    LORENTZIAN = "lorentzian"
    SATURATION = "saturation"


# ---------------------------------------------------------------------------
# Model functions
# ---------------------------------------------------------------------------


def gaussian(x: np.ndarray, amplitude: float, center: float, sigma: float, offset: float) -> np.ndarray:
    return amplitude * np.exp(-0.5 * ((x - center) / sigma) ** 2) + offset


def sinusoid(x: np.ndarray, amplitude: float, frequency: float, phase: float, offset: float) -> np.ndarray:
    return amplitude * np.cos(2.0 * np.pi * frequency * x + phase) + offset


def exp_decay(x: np.ndarray, amplitude: float, tau: float, offset: float) -> np.ndarray:
    return amplitude * np.exp(-x / tau) + offset


def lorentzian(x: np.ndarray, amplitude: float, center: float, gamma: float, offset: float) -> np.ndarray:
    half = 0.5 * gamma
    return amplitude * half**2 / ((x - center) ** 2 + half**2) + offset


def saturation(x: np.ndarray, amplitude: float, p0: float) -> np.ndarray:
    return amplitude * x / (p0 + x)


_FUNCTIONS: Final[dict[FitModel, Callable[..., np.ndarray]]] = {
    FitModel.GAUSSIAN: gaussian,
    FitModel.SINUSOID: sinusoid,
    FitModel.EXP_DECAY: exp_decay,
    FitModel.LORENTZIAN: lorentzian,
    FitModel.SATURATION: saturation,
}

PARAMETERS: Final[dict[FitModel, tuple[str, ...]]] = {
    FitModel.GAUSSIAN: ("amplitude", "center", "sigma", "offset"),
    FitModel.SINUSOID: ("amplitude", "frequency", "phase", "offset"),
    FitModel.EXP_DECAY: ("amplitude", "tau", "offset"),
    FitModel.LORENTZIAN: ("amplitude", "center", "gamma", "offset"),
    FitModel.SATURATION: ("amplitude", "p0"),
}


def evaluate_model(model: FitModel | str, x: npt.ArrayLike, params: Mapping[str, float]) -> np.ndarray:
    model = FitModel(model)
    return _FUNCTIONS[model](np.asarray(x, dtype=float), *(params[n] for n in PARAMETERS[model]))


@dataclass(frozen=True)
class FitResult:
    model: FitModel
    params: dict[str, float]
    residual_norm: float
    iterations: int
    converged: bool
    param_uncertainties: dict[str, float] = field(default_factory=dict)

    def __getitem__(self, name: str) -> float:
        return self.params[name]

    def predict(self, x: npt.ArrayLike) -> np.ndarray:
        return evaluate_model(self.model, x, self.params)

    def as_dict(self) -> dict[str, object]:
        return {
            "model": self.model.value,
            "params": self.params,
            "uncertainties": self.param_uncertainties,
            "residual_norm": self.residual_norm,
            "iterations": self.iterations,
            "converged": self.converged,
        }


# ---------------------------------------------------------------------------
# Initial guesses
# ---------------------------------------------------------------------------


def _guess_gaussian(x: np.ndarray, y: np.ndarray) -> dict[str, float]:
    offset = float(np.median(y))
    k = int(np.argmax(np.abs(y - offset)))
    w = np.abs(y - offset)
    span = float(np.ptp(x)) or 1.0
    if w.sum() > 0:
        center = float(x[k])
        sigma = math.sqrt(float(np.sum(w * (x - center) ** 2) / w.sum())) or span / 4
    else:
        center, sigma = float(np.mean(x)), span / 4
    return {"amplitude": float(y[k] - offset), "center": center, "sigma": sigma, "offset": offset}


def _dominant_frequency(x: np.ndarray, y: np.ndarray) -> float:
    grid = np.linspace(x[0], x[-1], len(x))
    spectrum = fft_spectrum(grid, np.interp(grid, x, y))
    if spectrum.peak_frequency > 0:
        return spectrum.peak_frequency
    return 1.0 / (float(np.ptp(x)) or 1.0)


def _project(x: np.ndarray, y: np.ndarray, frequency: float) -> tuple[float, float, float]:
    """Linear least squares for a·cos(2πfx+φ) + b at fixed f → (amplitude, phase, offset)."""
    arg = 2.0 * np.pi * frequency * x
    design = np.column_stack([np.cos(arg), np.sin(arg), np.ones_like(x)])
    (c, s, b), *_ = np.linalg.lstsq(design, y, rcond=None)
    return float(math.hypot(c, s)), float(math.atan2(-s, c)), float(b)


def _guess_sinusoid(x: np.ndarray, y: np.ndarray) -> dict[str, float]:
    frequency = _dominant_frequency(x, y)
    amplitude, phase, offset = _project(x, y, frequency)
    return {"amplitude": amplitude, "frequency": frequency, "phase": phase, "offset": offset}


def _guess_exp_decay(x: np.ndarray, y: np.ndarray) -> dict[str, float]:
    sign = 1.0 if y[0] >= y[-1] else -1.0
    z = sign * y
    span = float(np.ptp(z)) or 1.0
    floor = float(z.min()) - 1e-3 * span
    slope, intercept = np.polyfit(x, np.log(z - floor), 1)
    tau = -1.0 / slope if slope < 0 else float(np.ptp(x)) or 1.0
    return {
        "amplitude": sign * math.exp(intercept),
        "tau": float(tau),
        "offset": sign * floor,
    }


def _guess_lorentzian(x: np.ndarray, y: np.ndarray) -> dict[str, float]:
    offset = float(np.median(y))
    k = int(np.argmax(np.abs(y - offset)))
    amplitude = float(y[k] - offset)
    above = np.abs(y - offset) >= 0.5 * abs(amplitude)
    step = float(np.ptp(x)) / max(len(x) - 1, 1)
    gamma = max(int(above.sum()), 1) * step if amplitude else float(np.ptp(x)) / 10
    return {"amplitude": amplitude, "center": float(x[k]), "gamma": gamma, "offset": offset}


def _guess_saturation(x: np.ndarray, y: np.ndarray) -> dict[str, float]:
    usable = (x > 0) & (y > 0)
    if usable.sum() >= 2:
        slope, intercept = np.polyfit(1.0 / x[usable], 1.0 / y[usable], 1)
        if intercept > 0 and slope > 0:
            amplitude = 1.0 / intercept
            return {"amplitude": amplitude, "p0": slope * amplitude}
    return {"amplitude": float(np.max(y)) * 2.0, "p0": float(np.median(x)) or 1.0}


_GUESSES: Final[dict[FitModel, Callable[[np.ndarray, np.ndarray], dict[str, float]]]] = {
    FitModel.GAUSSIAN: _guess_gaussian,
    FitModel.SINUSOID: _guess_sinusoid,
    FitModel.EXP_DECAY: _guess_exp_decay,
    FitModel.LORENTZIAN: _guess_lorentzian,
    FitModel.SATURATION: _guess_saturation,
}


def initial_guess(model: FitModel | str, x: npt.ArrayLike, y: npt.ArrayLike) -> dict[str, float]:
    model = FitModel(model)
    return _GUESSES[model](np.asarray(x, dtype=float), np.asarray(y, dtype=float))


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------


def _canonical(model: FitModel, params: dict[str, float]) -> dict[str, float]:
    """Fold sign and phase ambiguities into one representation."""
    p = dict(params)
    if model is FitModel.SINUSOID:
        if p["amplitude"] < 0:
            p["amplitude"] = -p["amplitude"]
            p["phase"] += math.pi
        if p["frequency"] < 0:
            p["frequency"] = -p["frequency"]
            p["phase"] = -p["phase"]
        p["phase"] = math.remainder(p["phase"], 2.0 * math.pi)
    elif model is FitModel.GAUSSIAN:
        p["sigma"] = abs(p["sigma"])
    elif model is FitModel.LORENTZIAN:
        p["gamma"] = abs(p["gamma"])
    return p


def fit(
    model: FitModel | str,
    x: npt.ArrayLike,
    y: npt.ArrayLike,
    init: Mapping[str, float] | None = None,
) -> FitResult:
    """Least-squares fit of `model` to (x, y).

    `init` overrides individual entries of the heuristic starting point.  A fit
    that exhausts the evaluation budget is returned with ``converged=False``; a
    rank-deficient Jacobian at the solution raises `FitError`.
    """
    model = FitModel(model)
    names = PARAMETERS[model]
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise FitError("x and y must be one-dimensional series of equal length")
    if len(x) < 2 * len(names):
        raise FitError(f"{model.value} fit needs at least {2 * len(names)} points, got {len(x)}")

    start = initial_guess(model, x, y)
    if init:
        unknown = set(init) - set(names)
        if unknown:
            raise FitError(f"unknown parameters for {model.value}: {sorted(unknown)}")
        start.update(init)
    p0 = np.array([start[n] for n in names], dtype=float)
    if not np.all(np.isfinite(p0)):
        raise FitError(f"non-finite starting point {start}")

    fn = _FUNCTIONS[model]

    def residuals(p: np.ndarray) -> np.ndarray:
        return fn(x, *p) - y

    def jacobian(p: np.ndarray) -> np.ndarray:
        step = DIFF_STEP * np.maximum(np.abs(p), 1.0)
        return np.atleast_2d(approx_fprime(p, residuals, step)).reshape(len(x), len(p))

    try:
        # every iteration evaluates the residuals at least once
        result = least_squares(
            residuals,
            p0,
            jac=jacobian,
            method="lm",
            xtol=X_TOL,
            gtol=G_TOL,
            ftol=1e-15,
            max_nfev=MAX_ITERATIONS,
        )
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise FitError(f"{model.value} fit failed: {exc}") from exc

    normal = result.jac.T @ result.jac
    rank = int(np.linalg.matrix_rank(result.jac))
    if rank < len(names) or not np.all(np.isfinite(normal)):
        logger.warning("fit_singular_normal_matrix", model=model.value, rank=rank, parameters=len(names))
        raise FitError(
            f"{model.value} fit: normal matrix is singular at the solution "
            f"(Jacobian rank {rank} of {len(names)}); raising the damping cannot recover"
        )

    params = _canonical(model, dict(zip(names, result.x.tolist())))
    dof = max(len(x) - len(names), 1)
    variance = 2.0 * result.cost / dof
    cov = np.linalg.inv(normal) * variance
    sigmas = np.sqrt(np.clip(np.diag(cov), 0.0, None))

    iterations = int(result.njev)
    converged = bool(result.status > 0)
    if not converged:
        logger.warning(
            "fit_not_converged", model=model.value, iterations=iterations, message=result.message
        )
    return FitResult(
        model=model,
        params=params,
        residual_norm=float(np.linalg.norm(result.fun)),
        iterations=iterations,
        converged=converged,
        param_uncertainties=dict(zip(names, sigmas.tolist())),
    )


def gaussian_fwhm(result: FitResult) -> float:
    return FWHM_PER_SIGMA * abs(result.params["sigma"])


# ---------------------------------------------------------------------------
# Spectra
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Spectrum:
    frequencies: np.ndarray  # 1/x units: THz for ps sampling
    magnitudes: np.ndarray
    peak_frequency: float
    windowed_energy: float
    spectral_energy: float


def _uniform_step(x: np.ndarray) -> float:
    if len(x) < MIN_FFT_LENGTH:
        raise FitError(f"spectrum needs at least {MIN_FFT_LENGTH} samples, got {len(x)}")
    step = (x[-1] - x[0]) / (len(x) - 1)
    if step <= 0:
        raise NonUniformSamplingError("sample times must increase")
    deviation = float(np.max(np.abs(np.diff(x) - step)))
    if deviation > UNIFORM_TOL * step:
        raise NonUniformSamplingError(
            f"non-uniform sampling: max step deviation {deviation:.3e} exceeds {UNIFORM_TOL:g} of {step:.6g}"
        )
    return float(step)


def _refine(magnitudes: np.ndarray, k: int) -> float:
    """Fractional bin of the vertex of the parabola through bins k−1, k, k+1."""
    if k <= 0 or k >= len(magnitudes) - 1:
        return float(k)
    left, mid, right = magnitudes[k - 1], magnitudes[k], magnitudes[k + 1]
    denom = left - 2.0 * mid + right
    if denom == 0:
        return float(k)
    return k + 0.5 * (left - right) / denom


def fft_spectrum(x: npt.ArrayLike, y: npt.ArrayLike) -> Spectrum:
    """Hann-windowed magnitude spectrum of a uniformly sampled, mean-removed series."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    step = _uniform_step(x)
    n = len(y)
    window = hann(n, sym=False)
    windowed = (y - y.mean()) * window

    full = np.fft.fft(windowed)
    half = np.fft.rfft(windowed)
    magnitudes = np.abs(half) * 2.0 / window.sum()
    frequencies = np.fft.rfftfreq(n, d=step)

    if magnitudes[1:].max(initial=0.0) <= 1e-12 * max(1.0, float(np.abs(y).max())):
        peak = 0.0
    else:
        k = 1 + int(np.argmax(magnitudes[1:]))
        peak = float(_refine(magnitudes, k) * (frequencies[1] - frequencies[0]))

    return Spectrum(
        frequencies=frequencies,
        magnitudes=magnitudes,
        peak_frequency=peak,
        windowed_energy=float(np.sum(np.abs(windowed) ** 2)),
        spectral_energy=float(np.sum(np.abs(full) ** 2) / n),
    )


def find_spectral_peaks(spectrum: Spectrum, count: int = 2, min_height_fraction: float = 0.1) -> list[float]:
    """Refined frequencies of the `count` strongest resolved peaks, ascending."""
    mags = spectrum.magnitudes
    if mags.max(initial=0.0) <= 0:
        return []
    indices, props = find_peaks(mags, height=min_height_fraction * mags.max())
    strongest = indices[np.argsort(props["peak_heights"])[::-1][:count]]
    df = spectrum.frequencies[1] - spectrum.frequencies[0]
    return sorted(float(_refine(mags, int(k)) * df) for k in strongest)


# ---------------------------------------------------------------------------
# Fringes
# ---------------------------------------------------------------------------


def fit_fringe(x: npt.ArrayLike, y: npt.ArrayLike) -> FitResult:
    """Sinusoid fit with the starting frequency taken from the FFT peak."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.ptp(y) == 0:
        return FitResult(
            model=FitModel.SINUSOID,
            params={"amplitude": 0.0, "frequency": 0.0, "phase": 0.0, "offset": float(y[0])},
            residual_norm=0.0,
            iterations=0,
            converged=True,
        )
    # shifting x to start at zero keeps the phase/offset guesses well conditioned
    shifted = fit(FitModel.SINUSOID, x - x[0], y)
    params = dict(shifted.params)
    params["phase"] = math.remainder(params["phase"] - 2.0 * math.pi * params["frequency"] * x[0], 2.0 * math.pi)
    return FitResult(
        model=FitModel.SINUSOID,
        params=params,
        residual_norm=shifted.residual_norm,
        iterations=shifted.iterations,
        converged=shifted.converged,
        param_uncertainties=shifted.param_uncertainties,
    )


def fringe_amplitude(x: npt.ArrayLike, y: npt.ArrayLike) -> float:
    result = fit_fringe(x, y)
    if not result.converged:
        raise FitError("fringe fit did not converge")
    return abs(result.params["amplitude"])


def fringe_phase(x: npt.ArrayLike, y: npt.ArrayLike, frequency: float) -> float:
    """Phase φ of a·cos(2πfx + φ) + b at known frequency, wrapped to (−π, π]."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 3:
        raise FitError("fringe phase needs at least 3 points")
    _, phase, _ = _project(x, y, frequency)
    return phase


__all__ = [
    "FitModel",
    "FitResult",
    "PARAMETERS",
    "Spectrum",
    "evaluate_model",
    "exp_decay",
    "fft_spectrum",
    "find_spectral_peaks",
    "fit",
    "fit_fringe",
    "fringe_amplitude",
    "fringe_phase",
    "gaussian",
    "gaussian_fwhm",
    "initial_guess",
    "lorentzian",
    "saturation",
    "sinusoid",
]
