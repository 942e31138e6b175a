"""Master-equation time evolution.

dρ/dt = −i[H, ρ] + Σ_k (γ_k/2)·L[A_k]ρ is integrated with scipy's Dormand–Prince
5(4) stepper, driven one accepted step at a time so that ρ can be
re-symmetrised after every step and sample times are filled from the step's
dense output.
"""

from __future__ import annotations

import bisect
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Final

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.integrate import RK45

from raman_qubit.core.algebra import ComplexMatrix, DensityMatrix, hermitize
from raman_qubit.core.errors import InvalidStateError, StepSizeUnderflowError, UnknownLevelError
from raman_qubit.services.system_model import DissipatorSpec

logger = structlog.get_logger(__name__)

MAX_STEP_CAP_PS: Final = 0.02
SIGMA_STEP_FRACTION: Final = 1.0 / 20.0
SAMPLE_SLACK_PS: Final = 1e-9


class IntegratorConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    rel_tol: float = Field(1e-8, gt=0.0)
    abs_tol: float = Field(1e-10, gt=0.0)
    # None → min(σ/20, 0.02 ps) for the narrowest pulse of the sequence
    max_step_ps: float | None = Field(None, gt=0.0)
    sample_times_ps: tuple[float, ...] = ()
    # Step cap inside pulse-free stretches; None keeps max_step everywhere.
    free_step_ps: float | None = Field(None, gt=0.0)

    @model_validator(mode="after")
    def _ordered(self) -> "IntegratorConfig":
        times = self.sample_times_ps
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("sample_times_ps must be ordered")
        return self

    def resolved_max_step(self, sigma_ps: float | None) -> float:
        if self.max_step_ps is not None:
            return self.max_step_ps
        if sigma_ps is None:
            return MAX_STEP_CAP_PS
        return min(sigma_ps * SIGMA_STEP_FRACTION, MAX_STEP_CAP_PS)

    def with_samples(self, times: Sequence[float]) -> "IntegratorConfig":
        return self.model_copy(update={"sample_times_ps": tuple(float(t) for t in times)})


@dataclass(frozen=True, eq=False)
class SimResult:
    times: np.ndarray
    basis: tuple[str, ...]
    populations: np.ndarray  # (n_times, dim)
    coherence_h1h2: np.ndarray  # ρ[h1, upper qubit level], complex
    final_state: DensityMatrix
    trace_defect: float  # at the last sample
    max_positivity_defect: float  # max over samples of −min eigenvalue (≥ 0)
    steps: int

    def population(self, label: str) -> np.ndarray:
        return self.populations[:, _index(self.basis, label)]


def _index(basis: tuple[str, ...], label: str) -> int:
    try:
        return basis.index(label)
    except ValueError as exc:
        raise UnknownLevelError(f"level '{label}' not in basis {basis}") from exc


def final_population(result: SimResult, level: str) -> float:
    return float(result.populations[-1, _index(result.basis, level)])


class _MasterEquation:
    """Right-hand side on the flattened density matrix."""

    def __init__(
        self, hamiltonian: Callable[[float], ComplexMatrix], dissipators: list[DissipatorSpec], dim: int
    ) -> None:
        self.hamiltonian = hamiltonian
        self.dim = dim
        self.jumps = [(d.rate, d.operator, d.operator.conj().T) for d in dissipators]
        loss = np.zeros((dim, dim), dtype=np.complex128)
        for rate, a, a_dag in self.jumps:
            loss += 0.5 * rate * (a_dag @ a)
        self.loss = loss

    def __call__(self, t: float, y: np.ndarray) -> np.ndarray:
        rho = y.reshape(self.dim, self.dim)
        h_eff = self.hamiltonian(t) - 1j * self.loss
        drho = -1j * (h_eff @ rho - rho @ h_eff.conj().T)
        for rate, a, a_dag in self.jumps:
            drho += rate * (a @ rho @ a_dag)
        return drho.reshape(-1)


def _step_cap(
    t: float, cap: float, free: float | None, quiet: list[tuple[float, float]]
) -> float:
    if free is None:
        return cap
    for a, b in quiet:
        if a <= t < b:
            return max(cap, min(free, b - t))
    return cap


def evolve(
    hamiltonian: Callable[[float], ComplexMatrix],
    dissipators: list[DissipatorSpec],
    rho0: DensityMatrix,
    cfg: IntegratorConfig,
    *,
    t_span: tuple[float, float] | None = None,
    basis: tuple[str, ...] | None = None,
) -> SimResult:
    """Integrate ρ0 over the Hamiltonian's window and sample it at cfg.sample_times_ps.

    `hamiltonian` is any callable t → H(t) in rad/ps.  The model objects from
    `system_model` carry their own window, basis and pulse-free intervals; a bare
    callable needs `t_span` and `basis` passed explicitly.
    """
    rho0 = rho0.validated()
    dim = rho0.dim
    t_span = t_span or getattr(hamiltonian, "t_span", None)
    if t_span is None:
        raise ValueError("t_span is required for a bare Hamiltonian callable")
    basis = basis or getattr(hamiltonian, "basis", None) or tuple(f"l{i}" for i in range(dim))
    if len(basis) != dim:
        raise InvalidStateError(f"ρ0 has dimension {dim} but the basis has {len(basis)} levels")
    t0, t1 = float(t_span[0]), float(t_span[1])

    times = np.array(cfg.sample_times_ps or (t0, t1), dtype=float)
    if times[0] < t0 - SAMPLE_SLACK_PS or times[-1] > t1 + SAMPLE_SLACK_PS:
        raise ValueError(f"sample times must lie within [{t0}, {t1}] ps")
    times = np.clip(times, t0, t1)

    sequence = getattr(hamiltonian, "sequence", None)
    sigma = min(p.sigma_ps for p in sequence.pulses) if sequence is not None else None
    cap = cfg.resolved_max_step(sigma)
    quiet = hamiltonian.quiet_intervals() if hasattr(hamiltonian, "quiet_intervals") else []

    rhs = _MasterEquation(hamiltonian, dissipators, dim)
    samples = np.empty((len(times), dim, dim), dtype=np.complex128)
    filled = bisect.bisect_right(times.tolist(), t0)
    samples[:filled] = rho0.matrix

    steps = 0
    if filled < len(times):
        solver = RK45(
            rhs,
            t0,
            rho0.matrix.reshape(-1).copy(),
            t1,
            max_step=_step_cap(t0, cap, cfg.free_step_ps, quiet),
            rtol=cfg.rel_tol,
            atol=cfg.abs_tol,
        )
        while filled < len(times):
            solver.step()
            if solver.status == "failed":
                logger.error(
                    "integrator_failed", time_ps=solver.t, step_ps=solver.step_size
                )
                raise StepSizeUnderflowError(solver.t, solver.step_size or 0.0, "step rejected")
            steps += 1
            interpolant = solver.dense_output()
            while filled < len(times) and times[filled] <= solver.t:
                samples[filled] = hermitize(interpolant(times[filled]).reshape(dim, dim))
                filled += 1
            solver.y[:] = hermitize(solver.y.reshape(dim, dim)).reshape(-1)
            solver.max_step = _step_cap(solver.t, cap, cfg.free_step_ps, quiet)
            if solver.status == "finished":
                break
        if filled < len(times):
            samples[filled:] = solver.y.reshape(dim, dim)

    populations = np.real(np.einsum("kii->ki", samples))
    upper = dim - 1 if dim > 1 else 0
    coherence = samples[:, 0, upper]
    traces = np.real(np.einsum("kii->k", samples))
    min_eigs = np.linalg.eigvalsh(samples)[:, 0]
    final = DensityMatrix(samples[-1])

    return SimResult(
        times=times,
        basis=tuple(basis),
        populations=populations,
        coherence_h1h2=coherence,
        final_state=final,
        trace_defect=float(abs(traces[-1] - 1.0)),
        max_positivity_defect=float(max(0.0, -min_eigs.min())),
        steps=steps,
    )


__all__ = ["IntegratorConfig", "SimResult", "evolve", "final_population"]
