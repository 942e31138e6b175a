"""Parallel evaluation of independent simulation tasks.

* A `SimulationTask` bundles everything one `evolve` call needs, so it can be
  pickled to a worker process.
* `evaluate` maps a module-level function over tasks and returns results in
  task order whatever the worker count; reductions downstream therefore see a
  fixed index order.
* Worker count comes from ``RAMAN_WORKERS`` unless given explicitly; 1 runs
  in-process.
"""

from __future__ import annotations

import time
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import TypeVar

import structlog

from raman_qubit.core.algebra import DensityMatrix
from raman_qubit.core.constants import H1
from raman_qubit.core.settings import get_settings
from raman_qubit.services.drive import NoiseSpec, PulseSequence, perturb
from raman_qubit.services.lindblad import IntegratorConfig, SimResult, evolve, final_population
from raman_qubit.services.system_model import (
    DipoleSet,
    DissipatorSpec,
    EnergySpec,
    LevelSystem,
    build_hamiltonian,
)

logger = structlog.get_logger(__name__)

T = TypeVar("T")
R = TypeVar("R")


@dataclass(frozen=True)
class SimulationTask:
    system: LevelSystem
    energies: EnergySpec
    dipoles: DipoleSet
    sequence: PulseSequence
    integrator: IntegratorConfig
    dissipators: tuple[DissipatorSpec, ...] = ()
    observable: str = "h2"
    initial_level: str = H1
    noise: NoiseSpec | None = None
    sample_index: int = 0

    def with_noise(self, noise: NoiseSpec, sample_index: int) -> "SimulationTask":
        return replace(self, noise=noise, sample_index=sample_index)


def run_task(task: SimulationTask) -> SimResult:
    seq = task.sequence
    if task.noise is not None:
        seq = perturb(seq, task.noise, task.sample_index)
    hamiltonian = build_hamiltonian(task.system, task.energies, task.dipoles, seq)
    rho0 = DensityMatrix.pure(task.system.dim, task.system.index(task.initial_level))
    return evolve(hamiltonian, list(task.dissipators), rho0, task.integrator)


def task_population(task: SimulationTask) -> float:
    """Final population of the task's observable level."""
    return final_population(run_task(task), task.observable)


def task_series(task: SimulationTask) -> list[float]:
    """Observable population at every sample time."""
    return run_task(task).population(task.observable).tolist()


def _annotated(fn: Callable[[T], R], index: int, item: T) -> R:
    try:
        return fn(item)
    except Exception as exc:
        exc.add_note(f"while evaluating sweep point {index}")
        raise


def _indexed_call(args: tuple[Callable[[T], R], int, T]) -> R:
    fn, index, item = args
    return _annotated(fn, index, item)


def evaluate(
    items: Sequence[T],
    fn: Callable[[T], R] = task_population,  # type: ignore[assignment]
    *,
    workers: int | None = None,
) -> list[R]:
    """Apply `fn` to every item, in parallel when more than one worker is configured."""
    workers = workers or get_settings().workers
    started = time.perf_counter()
    logger.info("sweep_started", points=len(items), workers=workers)

    if workers <= 1 or len(items) <= 1:
        results = [_annotated(fn, i, item) for i, item in enumerate(items)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(
                    _indexed_call,
                    [(fn, i, item) for i, item in enumerate(items)],
                    chunksize=max(1, len(items) // (4 * workers)),
                )
            )

    logger.info(
        "sweep_finished",
        points=len(items),
        workers=workers,
        runtime_s=round(time.perf_counter() - started, 3),
    )
    return results


__all__ = ["SimulationTask", "evaluate", "run_task", "task_population", "task_series"]
