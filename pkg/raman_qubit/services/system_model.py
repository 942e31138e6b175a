"""Level structures, Hamiltonians and dissipators of the hole-orbital Λ systems.

Frames
~~~~~~
* Lab frame: diag(0, ω_t, ω_t + Δhot, Δ12) plus carriers e^{±iω_P t},
  e^{±iω_S t} with ω_P = ω_t + Δ and ω_S = ω_t − (Δ_t − Δ + δ).
* Rotating frame: U0 removes the carriers; the result is diag(Δ, 0, Δhot, Δ−δ)
  with the residual beat e^{∓iEt}, E = Δ_t + δ, on the cross couplings.

Δ_t is Δ12 for the h1–h2 systems and Δ13 for the h1–h3 system.  Internally
everything is rad/ps; energies are configured in meV.

Every Raman pulse is a delayed replica of a reference pair emitted at t = 0, so
pulse k's Stokes couplings carry the optical phase Φ_k + E·t_k (t_k = pump
center).  Pulse areas are referenced to the transition each colour is meant to
drive: pump → transition 1, Stokes → transition 2 (transition 5 for h1–h3).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from enum import Enum
from typing import Final, Protocol

import numpy as np
import numpy.typing as npt
import structlog
from pydantic import BaseModel, ConfigDict, Field, model_validator

from raman_qubit.core.algebra import ComplexMatrix, projector
from raman_qubit.core.constants import (
    BIG_DELTA_MEV,
    DELTA12_MEV,
    GAMMA1_PER_PS,
    GAMMA2_PER_PS,
    H1,
    H2,
    H3,
    HBAR_MEV_PS,
    HOT_TRION,
    MU1,
    MU2,
    MU3,
    MU4,
    PLACEHOLDER_DELTA13_FACTOR,
    PLACEHOLDER_DELTA_HOT_MEV,
    PLACEHOLDER_MU5,
    SMALL_DELTA_MEV,
    TRION,
)
from raman_qubit.core.errors import UnknownLevelError
from raman_qubit.services.drive import PulseSequence, RamanPulse, envelope

logger = structlog.get_logger(__name__)

# Envelopes are below 1e-12 of their peak beyond this many sigmas.
QUIET_SIGMAS: Final = 7.5


def mev_to_rad_per_ps(energy_mev: float) -> float:
    return energy_mev / HBAR_MEV_PS


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


class LevelKind(str, Enum):
    THREE_LEVEL = "three_level"
    FOUR_LEVEL_HOT = "four_level_hot"
    FOUR_LEVEL_HIGH = "four_level_high"
    TWO_LEVEL_EFFECTIVE = "two_level_effective"


_BASES: Final[dict[LevelKind, tuple[str, ...]]] = {
    LevelKind.THREE_LEVEL: (H1, TRION, H2),
    LevelKind.FOUR_LEVEL_HOT: (H1, TRION, HOT_TRION, H2),
    LevelKind.FOUR_LEVEL_HIGH: (H1, TRION, H2, H3),
    LevelKind.TWO_LEVEL_EFFECTIVE: (H1, H2),
}


class LevelSystem(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: LevelKind = LevelKind.FOUR_LEVEL_HOT

    @property
    def basis(self) -> tuple[str, ...]:
        return _BASES[self.kind]

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def target(self) -> str:
        """Upper qubit level addressed by the Raman pair."""
        return H3 if self.kind is LevelKind.FOUR_LEVEL_HIGH else H2

    def index(self, label: str) -> int:
        try:
            return self.basis.index(label)
        except ValueError as exc:
            raise UnknownLevelError(
                f"level '{label}' not in basis {self.basis} of {self.kind.value}"
            ) from exc


@functools.lru_cache(maxsize=None)
def placeholder_value(field: str, kind: LevelKind, value: float) -> float:
    """`value` for an unmeasured parameter of `kind`, flagged once per process."""
    logger.warning("placeholder_parameter_used", field=field, system=kind.value, value=value)
    return value


class EnergySpec(BaseModel):
    """Level splittings and laser detunings, meV."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    delta12_mev: float = Field(DELTA12_MEV, gt=0.0)
    delta_hot_mev: float | None = None
    delta13_mev: float | None = None
    big_delta_mev: float = Field(BIG_DELTA_MEV, gt=0.0)
    small_delta_mev: float = SMALL_DELTA_MEV

    @model_validator(mode="after")
    def _check(self) -> "EnergySpec":
        if abs(self.small_delta_mev) >= self.big_delta_mev:
            raise ValueError("|small_delta_mev| must be smaller than big_delta_mev")
        if self.delta13_mev is not None and self.delta13_mev <= self.delta12_mev:
            raise ValueError("delta13_mev must exceed delta12_mev")
        return self

    @property
    def delta23_mev(self) -> float | None:
        if self.delta13_mev is None:
            return None
        return self.delta13_mev - self.delta12_mev

    def with_small_delta(self, small_delta_mev: float) -> "EnergySpec":
        return self.model_copy(update={"small_delta_mev": small_delta_mev})

    @property
    def hot_trion_mev(self) -> float:
        """Δhot, or its flagged placeholder."""
        if self.delta_hot_mev is not None:
            return self.delta_hot_mev
        return placeholder_value("delta_hot_mev", LevelKind.FOUR_LEVEL_HOT, PLACEHOLDER_DELTA_HOT_MEV)

    @property
    def high_orbital_mev(self) -> float:
        """Δ13, or its flagged placeholder."""
        if self.delta13_mev is not None:
            return self.delta13_mev
        return placeholder_value(
            "delta13_mev", LevelKind.FOUR_LEVEL_HIGH, PLACEHOLDER_DELTA13_FACTOR * self.delta12_mev
        )

    def with_placeholders(self, kind: LevelKind) -> "EnergySpec":
        """Copy with the unmeasured splittings `kind` needs filled in."""
        if kind is LevelKind.FOUR_LEVEL_HOT and self.delta_hot_mev is None:
            return self.model_copy(update={"delta_hot_mev": self.hot_trion_mev})
        if kind is LevelKind.FOUR_LEVEL_HIGH and self.delta13_mev is None:
            return self.model_copy(update={"delta13_mev": self.high_orbital_mev})
        return self


class DipoleSet(BaseModel):
    """Relative transition dipoles; transition 1 (h1 ↔ T+) is the unit."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    mu1: float = MU1
    mu2: float = Field(MU2, gt=0.0)
    mu3: float = Field(MU3, gt=0.0)
    mu4: float = Field(MU4, gt=0.0)
    mu5: float | None = Field(None, gt=0.0)

    @model_validator(mode="after")
    def _check(self) -> "DipoleSet":
        if self.mu1 != 1.0:
            raise ValueError("mu1 is the reference dipole and must be 1")
        return self

    def with_placeholders(self, kind: LevelKind) -> "DipoleSet":
        if kind is LevelKind.FOUR_LEVEL_HIGH and self.mu5 is None:
            return self.model_copy(update={"mu5": placeholder_value("mu5", kind, PLACEHOLDER_MU5)})
        return self


@dataclass(frozen=True, eq=False)
class DissipatorSpec:
    operator: ComplexMatrix
    rate: float  # 1/ps; enters the master equation as (rate/2)·L[operator]


class Hamiltonian(Protocol):
    dim: int
    basis: tuple[str, ...]
    t_span: tuple[float, float]

    def __call__(self, t: float) -> ComplexMatrix: ...

    def quiet_intervals(self) -> list[tuple[float, float]]: ...


# ---------------------------------------------------------------------------
# Couplings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Coupling:
    ground: int
    trion: int
    mu: str
    upper: bool  # True for h2/h3 (pump beats at +E), False for h1 (Stokes beats at −E)


@dataclass(frozen=True)
class _Layout:
    diagonal: np.ndarray  # rad/ps
    couplings: tuple[_Coupling, ...]
    stokes_reference: str
    splitting_rad: float  # Δ_t
    beat_rad: float  # E = Δ_t + δ
    lab_diagonal_offsets: np.ndarray  # lab energies relative to the trion carrier


def _layout(system: LevelSystem, e: EnergySpec, d: DipoleSet) -> _Layout:
    big = mev_to_rad_per_ps(e.big_delta_mev)
    small = mev_to_rad_per_ps(e.small_delta_mev)
    d12 = mev_to_rad_per_ps(e.delta12_mev)
    kind = system.kind

    if kind is LevelKind.THREE_LEVEL:
        return _Layout(
            diagonal=np.array([big, 0.0, big - small]),
            couplings=(_Coupling(0, 1, "mu1", False), _Coupling(2, 1, "mu2", True)),
            stokes_reference="mu2",
            splitting_rad=d12,
            beat_rad=d12 + small,
            lab_diagonal_offsets=np.array([0.0, 0.0, d12]),
        )
    if kind is LevelKind.FOUR_LEVEL_HOT:
        hot = mev_to_rad_per_ps(e.hot_trion_mev)
        return _Layout(
            diagonal=np.array([big, 0.0, hot, big - small]),
            couplings=(
                _Coupling(0, 1, "mu1", False),
                _Coupling(3, 1, "mu2", True),
                _Coupling(0, 2, "mu3", False),
                _Coupling(3, 2, "mu4", True),
            ),
            stokes_reference="mu2",
            splitting_rad=d12,
            beat_rad=d12 + small,
            lab_diagonal_offsets=np.array([0.0, 0.0, hot, d12]),
        )
    if kind is LevelKind.FOUR_LEVEL_HIGH:
        d13 = mev_to_rad_per_ps(e.high_orbital_mev)
        d23 = d13 - d12
        return _Layout(
            diagonal=np.array([big, 0.0, big - small - d23, big - small]),
            couplings=(
                _Coupling(0, 1, "mu1", False),
                _Coupling(2, 1, "mu2", True),
                _Coupling(3, 1, "mu5", True),
            ),
            stokes_reference="mu5",
            splitting_rad=d13,
            beat_rad=d13 + small,
            lab_diagonal_offsets=np.array([0.0, 0.0, d12, d13]),
        )
    raise ValueError(f"{kind.value} has no optical couplings; use EffectiveHamiltonian")


class _PulseTable:
    """Pulse parameters as arrays, so a time point costs a handful of ufuncs."""

    def __init__(self, seq: PulseSequence, beat_rad: float) -> None:
        pulses = seq.pulses
        self.pump_center = np.array([p.pump.center_ps for p in pulses])
        self.stokes_center = np.array([p.stokes.center_ps for p in pulses])
        self.inv_sigma = np.array([1.0 / p.sigma_ps for p in pulses])
        self.pump_peak = np.array([p.pump.peak for p in pulses])
        self.stokes_peak = np.array([p.stokes.peak for p in pulses])
        self.pump_phasor = np.exp(1j * np.array([p.pump.phase_rad for p in pulses]))
        # replica phase: pulse k is the t=0 reference pair delayed by its pump center
        self.stokes_phasor = np.exp(
            1j * np.array([p.stokes.phase_rad + beat_rad * p.pump.center_ps for p in pulses])
        )
        self.sigma = np.array([p.sigma_ps for p in pulses])

    def fields(self, t: float) -> tuple[complex, complex, float, float]:
        """Complex pump and Stokes Rabi fields (reference transitions) and their moduli."""
        xp = (t - self.pump_center) * self.inv_sigma
        xs = (t - self.stokes_center) * self.inv_sigma
        env_p = self.pump_peak * np.exp(-0.5 * xp * xp)
        env_s = self.stokes_peak * np.exp(-0.5 * xs * xs)
        pump = complex(np.dot(env_p, self.pump_phasor))
        stokes = complex(np.dot(env_s, self.stokes_phasor))
        return pump, stokes, float(env_p.sum()), float(env_s.sum())

    def active_windows(self) -> list[tuple[float, float]]:
        lo = np.minimum(self.pump_center, self.stokes_center) - QUIET_SIGMAS * self.sigma
        hi = np.maximum(self.pump_center, self.stokes_center) + QUIET_SIGMAS * self.sigma
        merged: list[tuple[float, float]] = []
        for a, b in sorted(zip(lo.tolist(), hi.tolist())):
            if merged and a <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], b))
            else:
                merged.append((a, b))
        return merged


def _quiet_between(
    span: tuple[float, float], active: list[tuple[float, float]]
) -> list[tuple[float, float]]:
    quiet: list[tuple[float, float]] = []
    cursor = span[0]
    for a, b in active:
        if a > cursor:
            quiet.append((cursor, min(a, span[1])))
        cursor = max(cursor, b)
        if cursor >= span[1]:
            break
    if cursor < span[1]:
        quiet.append((cursor, span[1]))
    return [(a, b) for a, b in quiet if b > a]


class RotatingFrameHamiltonian:
    """H_Rot(t)/ħ in rad/ps for one (system, energies, dipoles, sequence).

    Instances are plain picklable objects, so they can be shipped to worker
    processes for parallel sweeps.
    """

    def __init__(
        self, system: LevelSystem, energies: EnergySpec, dipoles: DipoleSet, seq: PulseSequence
    ) -> None:
        self.system = system
        self.basis = system.basis
        self.dim = system.dim
        self.sequence = seq
        dipoles = dipoles.with_placeholders(system.kind)
        self.layout = _layout(system, energies, dipoles)
        self.pulses = _PulseTable(seq, self.layout.beat_rad)
        mu_ref_stokes = getattr(dipoles, self.layout.stokes_reference)
        self._rows = np.array([c.ground for c in self.layout.couplings])
        self._cols = np.array([c.trion for c in self.layout.couplings])
        self._pump_ratio = np.array([getattr(dipoles, c.mu) / dipoles.mu1 for c in self.layout.couplings])
        self._stokes_ratio = np.array([getattr(dipoles, c.mu) / mu_ref_stokes for c in self.layout.couplings])
        self._upper = np.array([c.upper for c in self.layout.couplings])
        self._base = np.diag(self.layout.diagonal).astype(np.complex128)

    @property
    def t_span(self) -> tuple[float, float]:
        return self.sequence.t_start_ps, self.sequence.t_end_ps

    def quiet_intervals(self) -> list[tuple[float, float]]:
        return _quiet_between(self.t_span, self.pulses.active_windows())

    def coupling_values(self, t: float) -> np.ndarray:
        """⟨ground|H|trion⟩ for every coupling, rad/ps."""
        pump, stokes, _, _ = self.pulses.fields(t)
        beat = np.exp(1j * self.layout.beat_rad * t)
        # upper levels: pump term beats at +E; h1: Stokes term beats at −E
        pump_factor = np.where(self._upper, beat, 1.0)
        stokes_factor = np.where(self._upper, 1.0, np.conj(beat))
        return 0.5 * (
            self._pump_ratio * pump * pump_factor + self._stokes_ratio * stokes * stokes_factor
        )

    def __call__(self, t: float) -> ComplexMatrix:
        h = self._base.copy()
        v = self.coupling_values(t)
        h[self._rows, self._cols] = v
        h[self._cols, self._rows] = np.conj(v)
        return h


class LabFrameHamiltonian:
    """H_Lab(t)/ħ with explicit optical carriers (use test-scale ω_t)."""

    def __init__(
        self,
        system: LevelSystem,
        energies: EnergySpec,
        dipoles: DipoleSet,
        seq: PulseSequence,
        omega_t: float,
    ) -> None:
        self.rot = RotatingFrameHamiltonian(system, energies, dipoles, seq)
        self.basis = system.basis
        self.dim = system.dim
        self.omega_t = omega_t
        layout = self.rot.layout
        big = layout.diagonal[0]
        small = mev_to_rad_per_ps(energies.small_delta_mev)
        self.omega_pump, self.omega_stokes = carrier_frequencies(
            omega_t, big, small, layout.splitting_rad
        )
        diag = layout.lab_diagonal_offsets.copy()
        for i, label in enumerate(self.basis):
            if label in (TRION, HOT_TRION):
                diag[i] += omega_t
        self._base = np.diag(diag).astype(np.complex128)

    @property
    def t_span(self) -> tuple[float, float]:
        return self.rot.t_span

    def quiet_intervals(self) -> list[tuple[float, float]]:
        # carriers oscillate everywhere in the lab frame
        return []

    def __call__(self, t: float) -> ComplexMatrix:
        rot = self.rot
        pump, stokes, _, _ = rot.pulses.fields(t)
        v = 0.5 * (
            rot._pump_ratio * pump * np.exp(1j * self.omega_pump * t)
            + rot._stokes_ratio * stokes * np.exp(1j * self.omega_stokes * t)
        )
        h = self._base.copy()
        h[rot._rows, rot._cols] = v
        h[rot._cols, rot._rows] = np.conj(v)
        return h


def carrier_frequencies(
    omega_t: float, big_delta: float, small_delta: float, splitting: float
) -> tuple[float, float]:
    """(ω_P, ω_S) in rad/ps for a trion at ω_t."""
    return omega_t + big_delta, omega_t - (splitting - big_delta + small_delta)


# ---------------------------------------------------------------------------
# Spec operations
# ---------------------------------------------------------------------------


def h_rot(
    system: LevelSystem, e: EnergySpec, d: DipoleSet, seq: PulseSequence, t: float
) -> ComplexMatrix:
    return RotatingFrameHamiltonian(system, e, d, seq)(t)


def h_lab(
    system: LevelSystem,
    e: EnergySpec,
    d: DipoleSet,
    seq: PulseSequence,
    omega_t: float,
    t: float,
) -> ComplexMatrix:
    return LabFrameHamiltonian(system, e, d, seq, omega_t)(t)


def u0(
    e: EnergySpec,
    omega_t: float,
    t: float,
    system: LevelSystem | None = None,
) -> ComplexMatrix:
    """Diagonal rotation operator taking H_Lab to H_Rot."""
    system = system or LevelSystem(kind=LevelKind.FOUR_LEVEL_HOT)
    big = mev_to_rad_per_ps(e.big_delta_mev)
    small = mev_to_rad_per_ps(e.small_delta_mev)
    if system.kind is LevelKind.FOUR_LEVEL_HIGH:
        splitting = mev_to_rad_per_ps(e.high_orbital_mev)
    else:
        splitting = mev_to_rad_per_ps(e.delta12_mev)
    omega_p, omega_s = carrier_frequencies(omega_t, big, small, splitting)
    rates = []
    for label in system.basis:
        if label == H1:
            rates.append(omega_t - omega_p)
        elif label in (TRION, HOT_TRION):
            rates.append(omega_t)
        else:
            rates.append(omega_t - omega_s)
    return np.diag(np.exp(-1j * np.array(rates) * t))


def dissipators(
    system: LevelSystem,
    gamma1: float = GAMMA1_PER_PS,
    gamma2: float = GAMMA2_PER_PS,
) -> list[DissipatorSpec]:
    """Pure dephasing A1 = |q⟩⟨q| and relaxation A2 = |h1⟩⟨q| of the upper qubit level q.

    Zero-rate channels are dropped, so γ1 = γ2 = 0 gives a closed system.
    """
    if gamma1 < 0 or gamma2 < 0:
        raise ValueError("dissipation rates must be non-negative")
    dim = system.dim
    q = system.index(system.target)
    g = system.index(H1)
    specs = [
        DissipatorSpec(projector(dim, q), gamma1),
        DissipatorSpec(projector(dim, g, q), gamma2),
    ]
    return [s for s in specs if s.rate > 0.0]


# ---------------------------------------------------------------------------
# Adiabatic elimination of T+
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EffectiveCoupling:
    omega_eff: float | np.ndarray  # rad/ps
    detuning_eff: float | np.ndarray  # rad/ps, h1 minus h2 (Stark shifted)
    adiabatic_ok: bool


def _stark_terms(
    pump_1: np.ndarray,
    stokes_2: np.ndarray,
    mu2: float,
    big: float,
    small: float,
    splitting: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Light shifts of h1 and h2 (rad/ps) from fields with moduli Ω_P1, Ω_S2."""
    stokes_1 = stokes_2 / mu2
    pump_2 = pump_1 * mu2
    shift_h1 = pump_1**2 / (4.0 * big) + stokes_1**2 / (4.0 * (big - splitting - small))
    shift_h2 = stokes_2**2 / (4.0 * (big - small)) + pump_2**2 / (4.0 * (big + splitting))
    return shift_h1, shift_h2


def effective_two_level(
    e: EnergySpec, d: DipoleSet, pulse: RamanPulse, t: float | npt.ArrayLike
) -> EffectiveCoupling:
    """Two-photon Rabi frequency and Stark-shifted detuning after eliminating T+."""
    big = mev_to_rad_per_ps(e.big_delta_mev)
    small = mev_to_rad_per_ps(e.small_delta_mev)
    splitting = mev_to_rad_per_ps(e.delta12_mev)
    pump_1 = np.asarray(envelope(pulse.pump, t))
    stokes_2 = np.asarray(envelope(pulse.stokes, t))
    shift_h1, shift_h2 = _stark_terms(pump_1, stokes_2, d.mu2, big, small, splitting)
    omega = pump_1 * stokes_2 / (2.0 * big)
    detuning = small + shift_h1 - shift_h2

    ok = pulse.pump.peak <= big / 3.0
    if not ok:
        logger.warning(
            "adiabatic_elimination_questionable",
            peak_pump_rabi=pulse.pump.peak,
            big_delta_rad_per_ps=big,
        )
    if np.ndim(omega) == 0:
        return EffectiveCoupling(float(omega), float(detuning), ok)
    return EffectiveCoupling(omega, detuning, ok)


class EffectiveHamiltonian:
    """Two-level (h1, h2) Hamiltonian after adiabatic elimination, rad/ps."""

    basis = (H1, H2)
    dim = 2

    def __init__(self, energies: EnergySpec, dipoles: DipoleSet, seq: PulseSequence) -> None:
        self.sequence = seq
        self.big = mev_to_rad_per_ps(energies.big_delta_mev)
        self.small = mev_to_rad_per_ps(energies.small_delta_mev)
        self.splitting = mev_to_rad_per_ps(energies.delta12_mev)
        self.mu2 = dipoles.mu2
        self.pulses = _PulseTable(seq, self.splitting + self.small)
        if any(p.pump.peak > self.big / 3.0 for p in seq.pulses):
            logger.warning("adiabatic_elimination_questionable", big_delta_rad_per_ps=self.big)

    @property
    def t_span(self) -> tuple[float, float]:
        return self.sequence.t_start_ps, self.sequence.t_end_ps

    def quiet_intervals(self) -> list[tuple[float, float]]:
        return _quiet_between(self.t_span, self.pulses.active_windows())

    def __call__(self, t: float) -> ComplexMatrix:
        pump, stokes, _, _ = self.pulses.fields(t)
        shift_h1, shift_h2 = _stark_terms(
            np.abs(pump), np.abs(stokes), self.mu2, self.big, self.small, self.splitting
        )
        c = stokes * np.conj(pump) / (4.0 * self.big)
        return np.array(
            [[self.small + shift_h1 - shift_h2, np.conj(c)], [c, 0.0]], dtype=np.complex128
        )


def build_hamiltonian(
    system: LevelSystem, energies: EnergySpec, dipoles: DipoleSet, seq: PulseSequence
) -> RotatingFrameHamiltonian | EffectiveHamiltonian:
    if system.kind is LevelKind.TWO_LEVEL_EFFECTIVE:
        return EffectiveHamiltonian(energies, dipoles, seq)
    return RotatingFrameHamiltonian(system, energies, dipoles, seq)


__all__ = [
    "DipoleSet",
    "DissipatorSpec",
    "EffectiveCoupling",
    "EffectiveHamiltonian",
    "EnergySpec",
    "Hamiltonian",
    "LabFrameHamiltonian",
    "LevelKind",
    "LevelSystem",
    "RotatingFrameHamiltonian",
    "build_hamiltonian",
    "carrier_frequencies",
    "dissipators",
    "effective_two_level",
    "h_lab",
    "h_rot",
    "mev_to_rad_per_ps",
    "u0",
]
