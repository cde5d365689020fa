# app/models/operators.py

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from app.core.config import settings


def _hermitian_defect(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


class ComplexOperator(BaseModel):
    """
    Dense dim x dim complex matrix. The entries are copied on construction
    and frozen, so an operator can be shared freely between threads.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    entries: np.ndarray

    @field_validator("entries", mode="before")
    @classmethod
    def validate_square(cls, v):
        arr = np.array(v, dtype=np.complex128, copy=True)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
            raise ValueError(f"operator entries must be a non-empty square matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("operator entries must be finite")
        arr.setflags(write=False)
        return arr

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def adjoint(self) -> "ComplexOperator":
        return ComplexOperator(entries=self.entries.conj().T)

    def is_hermitian(self, tol: float | None = None) -> bool:
        tol = settings.TOL_HERM if tol is None else tol
        return _hermitian_defect(self.entries) <= tol


class DensityOperator(BaseModel):
    """Hermitian, unit-trace, positive semidefinite operator."""

    model_config = ConfigDict(frozen=True)

    op: ComplexOperator

    @model_validator(mode="after")
    def validate_state(self):
        a = self.op.entries
        defect = _hermitian_defect(a)
        if defect > settings.TOL_HERM:
            raise ValueError(f"density operator is not Hermitian (defect {defect:.3e})")
        tr = np.trace(a)
        if abs(tr - 1.0) > settings.TOL_TRACE:
            raise ValueError(f"density operator trace is {tr.real:.12g}, expected 1")
        lowest = float(np.linalg.eigvalsh((a + a.conj().T) / 2).min())
        if lowest < -settings.TOL_PSD:
            raise ValueError(f"density operator is not positive semidefinite (eigenvalue {lowest:.3e})")
        return self

    @classmethod
    def from_array(cls, entries) -> "DensityOperator":
        return cls(op=ComplexOperator(entries=entries))

    @property
    def dim(self) -> int:
        return self.op.dim

    @property
    def entries(self) -> np.ndarray:
        return self.op.entries


class ProjectorOperator(BaseModel):
    """Orthogonal projector: Hermitian and idempotent."""

    model_config = ConfigDict(frozen=True)

    op: ComplexOperator

    @model_validator(mode="after")
    def validate_projector(self):
        a = self.op.entries
        defect = _hermitian_defect(a)
        if defect > settings.TOL_HERM:
            raise ValueError(f"projector is not Hermitian (defect {defect:.3e})")
        idem = float(np.max(np.abs(a @ a - a)))
        if idem > settings.TOL_PROJECTOR:
            raise ValueError(f"projector is not idempotent (defect {idem:.3e})")
        return self

    @classmethod
    def from_array(cls, entries) -> "ProjectorOperator":
        return cls(op=ComplexOperator(entries=entries))

    @property
    def dim(self) -> int:
        return self.op.dim

    @property
    def entries(self) -> np.ndarray:
        return self.op.entries

    @property
    def rank(self) -> int:
        return int(round(np.trace(self.op.entries).real))
