"""Gaussian pump/Stokes pulse pairs, sequences and experimental jitter.

* A `PulseSpec` is one colour: Gaussian Rabi envelope with a given area on its
  reference transition, a center, a width and an optical phase.
* A `RamanPulse` is a pump + Stokes pair sharing center and width; the relative
  phase Φ rides on the Stokes component.
* `perturb` applies the vibration / power noise model with draws from a
  counter-based stream keyed by (seed, sample_index), so Monte-Carlo samples can
  be evaluated in any order or in parallel and still agree bit for bit.
"""

from __future__ import annotations

import math
from enum import Enum
from typing import Final

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from raman_qubit.core.constants import (
    AREA_NOISE_FWHM_FRACTION,
    FWHM_PER_SIGMA,
    PHASE_NOISE_FWHM_RAD,
    PULSE_FWHM_PS,
    PUMP_AREA_RAD,
    SPAN_NOISE_FWHM_FRACTION,
)

WINDOW_SIGMAS: Final = 4.0
_SQRT_2PI: Final = math.sqrt(2.0 * math.pi)


class PulseRole(str, Enum):
    PUMP = "pump"
    STOKES = "stokes"


def sigma_from_fwhm(fwhm: float) -> float:
    return fwhm / FWHM_PER_SIGMA


class PulseSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    center_ps: float = 0.0
    fwhm_ps: float = Field(PULSE_FWHM_PS, gt=0.0)
    area_rad: float = Field(..., ge=0.0)
    phase_rad: float = 0.0
    role: PulseRole

    @field_validator("center_ps", "fwhm_ps", "area_rad", "phase_rad")
    @classmethod
    def _finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("must be finite")
        return v

    @property
    def sigma_ps(self) -> float:
        return sigma_from_fwhm(self.fwhm_ps)

    @property
    def peak(self) -> float:
        """Envelope value at the center, rad/ps."""
        return self.area_rad / (self.sigma_ps * _SQRT_2PI)

    def shifted(self, delay_ps: float) -> "PulseSpec":
        return self.model_copy(update={"center_ps": self.center_ps + delay_ps})


def envelope(p: PulseSpec, t: float | npt.ArrayLike) -> float | np.ndarray:
    """Instantaneous Rabi scale (rad/ps) of `p` on its reference transition."""
    sigma = p.sigma_ps
    x = (np.asarray(t, dtype=float) - p.center_ps) / sigma
    value = p.peak * np.exp(-0.5 * x * x)
    return float(value) if np.ndim(value) == 0 else value


class RamanPulse(BaseModel):
    """Pump + Stokes pair.  The Stokes phase is the relative phase Φ."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    pump: PulseSpec
    stokes: PulseSpec
    stokes_delay_ps: float = 0.0

    @model_validator(mode="after")
    def _check_pair(self) -> "RamanPulse":
        if self.pump.role is not PulseRole.PUMP or self.stokes.role is not PulseRole.STOKES:
            raise ValueError("a Raman pulse needs one pump and one stokes component")
        if self.pump.fwhm_ps != self.stokes.fwhm_ps:
            raise ValueError("pump and stokes must share fwhm_ps")
        offset = self.stokes.center_ps - self.pump.center_ps
        if abs(offset - self.stokes_delay_ps) > 1e-9:
            raise ValueError(
                "stokes center must equal pump center unless stokes_delay_ps is set"
            )
        return self

    @classmethod
    def pair(
        cls,
        *,
        center_ps: float = 0.0,
        fwhm_ps: float = PULSE_FWHM_PS,
        pump_area_rad: float = PUMP_AREA_RAD,
        stokes_area_rad: float,
        relative_phase_rad: float = 0.0,
        stokes_delay_ps: float = 0.0,
    ) -> "RamanPulse":
        return cls(
            pump=PulseSpec(
                center_ps=center_ps, fwhm_ps=fwhm_ps, area_rad=pump_area_rad,
                role=PulseRole.PUMP,
            ),
            stokes=PulseSpec(
                center_ps=center_ps + stokes_delay_ps, fwhm_ps=fwhm_ps,
                area_rad=stokes_area_rad, phase_rad=relative_phase_rad,
                role=PulseRole.STOKES,
            ),
            stokes_delay_ps=stokes_delay_ps,
        )

    @property
    def center_ps(self) -> float:
        return self.pump.center_ps

    @property
    def fwhm_ps(self) -> float:
        return self.pump.fwhm_ps

    @property
    def sigma_ps(self) -> float:
        return self.pump.sigma_ps

    @property
    def relative_phase(self) -> float:
        return self.stokes.phase_rad - self.pump.phase_rad

    @property
    def earliest_center_ps(self) -> float:
        return min(self.pump.center_ps, self.stokes.center_ps)

    @property
    def latest_center_ps(self) -> float:
        return max(self.pump.center_ps, self.stokes.center_ps)

    def moved_to(self, center_ps: float) -> "RamanPulse":
        d = center_ps - self.center_ps
        return self.model_copy(
            update={"pump": self.pump.shifted(d), "stokes": self.stokes.shifted(d)}
        )

    def with_stokes_area(self, area_rad: float) -> "RamanPulse":
        return self.model_copy(
            update={"stokes": self.stokes.model_copy(update={"area_rad": area_rad})}
        )

    def with_pump_area(self, area_rad: float) -> "RamanPulse":
        return self.model_copy(
            update={"pump": self.pump.model_copy(update={"area_rad": area_rad})}
        )

    def scaled(self, factor: float) -> "RamanPulse":
        """Both fields multiplied by `factor`; the two-photon area goes as factor²."""
        if factor < 0 or not math.isfinite(factor):
            raise ValueError(f"field scale must be finite and non-negative, got {factor}")
        return self.with_pump_area(self.pump.area_rad * factor).with_stokes_area(
            self.stokes.area_rad * factor
        )

    def with_phase(self, phase_rad: float) -> "RamanPulse":
        return self.model_copy(
            update={
                "stokes": self.stokes.model_copy(
                    update={"phase_rad": self.pump.phase_rad + phase_rad}
                )
            }
        )

    def with_stokes_delay(self, delay_ps: float) -> "RamanPulse":
        return self.model_copy(
            update={
                "stokes": self.stokes.model_copy(
                    update={"center_ps": self.pump.center_ps + delay_ps}
                ),
                "stokes_delay_ps": delay_ps,
            }
        )


def _span(pulses: tuple[RamanPulse, ...], margin_sigmas: float) -> tuple[float, float]:
    start = min(p.earliest_center_ps - margin_sigmas * p.sigma_ps for p in pulses)
    end = max(p.latest_center_ps + margin_sigmas * p.sigma_ps for p in pulses)
    return start, end


class PulseSequence(BaseModel):
    """Time-ordered Raman pulses and the integration window around them."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    pulses: tuple[RamanPulse, ...] = Field(..., min_length=1)
    t_start_ps: float
    t_end_ps: float

    @model_validator(mode="after")
    def _check_window(self) -> "PulseSequence":
        start, end = _span(self.pulses, WINDOW_SIGMAS)
        if self.t_start_ps > start:
            raise ValueError(f"t_start_ps must be <= {start:.6f} (earliest center - 4 sigma)")
        if self.t_end_ps < end:
            raise ValueError(f"t_end_ps must be >= {end:.6f} (latest center + 4 sigma)")
        return self

    @classmethod
    def around(
        cls,
        pulses: list[RamanPulse] | tuple[RamanPulse, ...],
        *,
        t_end_ps: float | None = None,
    ) -> "PulseSequence":
        """Sequence whose window is the pulses ±4σ (end optionally extended)."""
        ordered = tuple(sorted(pulses, key=lambda p: p.center_ps))
        start, end = _span(ordered, WINDOW_SIGMAS)
        return cls(
            pulses=ordered,
            t_start_ps=start,
            t_end_ps=end if t_end_ps is None else max(end, t_end_ps),
        )


# ---------------------------------------------------------------------------
# Noise model
# ---------------------------------------------------------------------------


class NoiseSpec(BaseModel):
    """Gaussian jitter on phase, phase-scan span and pulse area, given as FWHMs."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    phase_fwhm_rad: float = Field(PHASE_NOISE_FWHM_RAD, ge=0.0)
    span_fraction_fwhm: float = Field(SPAN_NOISE_FWHM_FRACTION, ge=0.0)
    area_fraction_fwhm: float = Field(AREA_NOISE_FWHM_FRACTION, ge=0.0)
    seed: int = 0

    @property
    def is_zero(self) -> bool:
        return (
            self.phase_fwhm_rad == 0.0
            and self.span_fraction_fwhm == 0.0
            and self.area_fraction_fwhm == 0.0
        )


def noise_stream(seed: int, sample_index: int) -> np.random.Generator:
    """Independent Philox stream for one Monte-Carlo sample."""
    key = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, int(sample_index)])
    return np.random.Generator(np.random.Philox(key))


def perturb(seq: PulseSequence, noise: NoiseSpec, sample_index: int) -> PulseSequence:
    """Copy of `seq` with one draw of the jitter model applied to every pulse.

    Per pulse, in this order: phase offset, phase-scan span scale, pump area
    scale, Stokes area scale.
    """
    rng = noise_stream(noise.seed, sample_index)
    phase_sigma = noise.phase_fwhm_rad / FWHM_PER_SIGMA
    span_sigma = noise.span_fraction_fwhm / FWHM_PER_SIGMA
    area_sigma = noise.area_fraction_fwhm / FWHM_PER_SIGMA

    jittered = []
    for pulse in seq.pulses:
        g_phase, g_span, g_pump, g_stokes = rng.standard_normal(4)
        phi = pulse.relative_phase
        phi = phi * (1.0 + span_sigma * g_span) + phase_sigma * g_phase
        jittered.append(
            pulse.with_phase(phi)
            .with_pump_area(pulse.pump.area_rad * (1.0 + area_sigma * g_pump))
            .with_stokes_area(pulse.stokes.area_rad * (1.0 + area_sigma * g_stokes))
        )
    return seq.model_copy(update={"pulses": tuple(jittered)})


__all__ = [
    "NoiseSpec",
    "PulseRole",
    "PulseSequence",
    "PulseSpec",
    "RamanPulse",
    "envelope",
    "noise_stream",
    "perturb",
    "sigma_from_fwhm",
]
