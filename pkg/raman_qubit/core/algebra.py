"""Dense complex matrix algebra for few-level systems (dimension 2–8).

Everything here is a pure function over numpy arrays.  Matrices are plain
``complex128`` ndarrays; `as_matrix` is the single place where shape and
finiteness are checked.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Final

import numpy as np
import numpy.typing as npt

from raman_qubit.core.errors import DimensionMismatchError, InvalidStateError

ComplexMatrix = npt.NDArray[np.complex128]

MIN_DIM: Final = 2
MAX_DIM: Final = 8
DEFAULT_TOLERANCE: Final = 1e-9


def as_matrix(a: npt.ArrayLike) -> ComplexMatrix:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {m.shape}")
    if not MIN_DIM <= m.shape[0] <= MAX_DIM:
        raise DimensionMismatchError(
            f"dimension {m.shape[0]} outside supported range {MIN_DIM}..{MAX_DIM}"
        )
    if not np.all(np.isfinite(m)):
        raise DimensionMismatchError("matrix has non-finite entries")
    return m


def _same_dim(a: ComplexMatrix, b: ComplexMatrix) -> None:
    if a.shape != b.shape:
        raise DimensionMismatchError(f"dimension mismatch: {a.shape} vs {b.shape}")


def commutator(a: npt.ArrayLike, b: npt.ArrayLike) -> ComplexMatrix:
    """Return ab − ba."""
    a, b = as_matrix(a), as_matrix(b)
    _same_dim(a, b)
    return a @ b - b @ a


def lindblad_apply(a: npt.ArrayLike, rho: npt.ArrayLike) -> ComplexMatrix:
    """Return L[A]ρ = 2AρA† − A†Aρ − ρA†A."""
    a, rho = as_matrix(a), as_matrix(rho)
    _same_dim(a, rho)
    a_dag = a.conj().T
    a_dag_a = a_dag @ a
    return 2.0 * (a @ rho @ a_dag) - a_dag_a @ rho - rho @ a_dag_a


def projector(dim: int, row: int, col: int | None = None) -> ComplexMatrix:
    """|row⟩⟨col| (⟨row| when col is omitted) in a dim-level basis."""
    m = np.zeros((dim, dim), dtype=np.complex128)
    m[row, row if col is None else col] = 1.0
    return m


def hermitize(m: ComplexMatrix) -> ComplexMatrix:
    return 0.5 * (m + m.conj().T)


def hermiticity_defect(m: ComplexMatrix) -> float:
    return float(np.max(np.abs(m - m.conj().T)))


def purity(m: ComplexMatrix) -> float:
    return float(np.real(np.trace(m @ m)))


@dataclass(frozen=True)
class DensityReport:
    trace_defect: float
    hermiticity_defect: float
    min_eigenvalue: float

    def is_valid(self, tolerance: float = DEFAULT_TOLERANCE) -> bool:
        return (
            self.trace_defect <= tolerance
            and self.hermiticity_defect <= tolerance
            and self.min_eigenvalue >= -tolerance
        )


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """State of an n-level system: trace 1, Hermitian, positive semidefinite."""

    matrix: ComplexMatrix
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self) -> None:
        object.__setattr__(self, "matrix", as_matrix(self.matrix))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def pure(cls, dim: int, index: int) -> "DensityMatrix":
        return cls(projector(dim, index))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=np.complex128) / dim)

    def validated(self) -> "DensityMatrix":
        report = validate_density(self)
        if not report.is_valid(self.tolerance):
            raise InvalidStateError(
                "invalid density matrix: "
                f"trace defect {report.trace_defect:.3e}, "
                f"Hermiticity defect {report.hermiticity_defect:.3e}, "
                f"min eigenvalue {report.min_eigenvalue:.3e}"
            )
        return self


def validate_density(rho: DensityMatrix | npt.ArrayLike) -> DensityReport:
    """Diagnostics only: trace defect, Hermiticity defect, smallest eigenvalue."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else as_matrix(rho)
    eigenvalues = np.linalg.eigvalsh(hermitize(m))
    return DensityReport(
        trace_defect=float(abs(np.trace(m) - 1.0)),
        hermiticity_defect=hermiticity_defect(m),
        min_eigenvalue=float(eigenvalues[0]),
    )


__all__ = [
    "ComplexMatrix",
    "DensityMatrix",
    "DensityReport",
    "as_matrix",
    "commutator",
    "hermitize",
    "hermiticity_defect",
    "lindblad_apply",
    "projector",
    "purity",
    "validate_density",
]
