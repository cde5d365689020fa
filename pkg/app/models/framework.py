# app/models/framework.py

from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.config import settings
from app.models.operators import ComplexOperator, ProjectorOperator


class Verdict(str, Enum):
    IDEAL = "Ideal"
    NORMAL = "Normal"
    UNCLASSIFIED = "Unclassified"


class MicroState(BaseModel):
    """Pure state psi = sum_r c_r u_r of the microsystem, u_r the energy eigenbasis."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    amplitudes: np.ndarray

    @field_validator("amplitudes", mode="before")
    @classmethod
    def validate_normalized(cls, v):
        arr = np.array(v, dtype=np.complex128, copy=True).ravel()
        if arr.size == 0:
            raise ValueError("a microstate needs at least one amplitude")
        if arr.size > settings.MAX_VECTOR_DIM:
            raise ValueError(f"microstate dimension {arr.size} exceeds cap {settings.MAX_VECTOR_DIM}")
        norm = float(np.sum(np.abs(arr) ** 2))
        if abs(norm - 1.0) > settings.TOL_TRACE:
            raise ValueError(f"amplitudes must satisfy sum |c_r|^2 = 1, got {norm:.12g}")
        arr.setflags(write=False)
        return arr

    @classmethod
    def normalized(cls, values) -> "MicroState":
        arr = np.asarray(values, dtype=np.complex128).ravel()
        return cls(amplitudes=arr / np.linalg.norm(arr))

    @property
    def n(self) -> int:
        return self.amplitudes.size

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


class MicroSystem(BaseModel):
    """Energy levels eps_1..eps_n; the Hamiltonian is diagonal in the standard basis."""

    model_config = ConfigDict(frozen=True)

    energies: tuple[float, ...]

    @field_validator("energies")
    @classmethod
    def validate_finite(cls, v):
        if not v:
            raise ValueError("a microsystem needs at least one energy level")
        if not all(np.isfinite(v)):
            raise ValueError("energies must be finite")
        return v

    @property
    def n(self) -> int:
        return len(self.energies)


class InstrumentModel(BaseModel):
    """
    Finite instrument: free Hamiltonian K, one coupling V_r per microsystem
    level and a partition of unity by the phase-cell projectors.
    """

    model_config = ConfigDict(frozen=True)

    K: ComplexOperator
    couplings: tuple[ComplexOperator, ...]
    cells: tuple[ProjectorOperator, ...]

    @model_validator(mode="after")
    def validate_instrument(self):
        dim = self.K.dim
        if not self.couplings:
            raise ValueError("an instrument needs at least one coupling")
        if not self.cells:
            raise ValueError("an instrument needs at least one phase cell")
        for name, op in [("K", self.K)] + [(f"V[{r}]", v) for r, v in enumerate(self.couplings)]:
            if op.dim != dim:
                raise ValueError(f"{name} has dimension {op.dim}, expected {dim}")
            if not op.is_hermitian():
                raise ValueError(f"{name} must be Hermitian")

        projectors = [p.entries for p in self.cells]
        for alpha, p in enumerate(projectors):
            if p.shape[0] != dim:
                raise ValueError(f"cell {alpha} has dimension {p.shape[0]}, expected {dim}")
        for alpha in range(len(projectors)):
            for beta in range(alpha + 1, len(projectors)):
                overlap = float(np.max(np.abs(projectors[alpha] @ projectors[beta])))
                if overlap > settings.TOL_PROJECTOR:
                    raise ValueError(f"cells {alpha} and {beta} are not orthogonal ({overlap:.3e})")
        completeness = float(np.max(np.abs(sum(projectors) - np.eye(dim))))
        if completeness > settings.TOL_PROJECTOR:
            raise ValueError(f"cells do not sum to the identity ({completeness:.3e})")
        return self

    @property
    def dimK(self) -> int:
        return self.K.dim

    @property
    def n(self) -> int:
        return len(self.couplings)

    @property
    def n_cells(self) -> int:
        return len(self.cells)


class FTensor(BaseModel):
    """
    values[r, s, alpha] = Tr(Omega_{r,s}(t) Pi_alpha). Validation enforces the
    row sums, the range of the diagonal, Hermiticity in (r, s) and positivity
    of every per-cell matrix.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def validate_laws(cls, v):
        arr = np.array(v, dtype=np.complex128, copy=True)
        if arr.ndim != 3 or arr.shape[0] != arr.shape[1] or 0 in arr.shape:
            raise ValueError(f"F must have shape (n, n, n_cells), got {arr.shape}")
        tol = settings.TOL_TRACE
        n = arr.shape[0]
        diag = arr[np.arange(n), np.arange(n), :]

        if np.max(np.abs(diag.imag)) > tol:
            raise ValueError("diagonal entries F[r, r, alpha] must be real")
        row_sums = diag.real.sum(axis=1)
        if np.max(np.abs(row_sums - 1.0)) > tol:
            raise ValueError(f"rows of F must sum to 1 over cells, got {row_sums}")
        if diag.real.min() < -tol or diag.real.max() > 1 + tol:
            raise ValueError("diagonal entries of F must lie in [0, 1]")
        herm = float(np.max(np.abs(arr - np.conj(np.transpose(arr, (1, 0, 2))))))
        if herm > tol:
            raise ValueError(f"F must satisfy F[r, s] = conj(F[s, r]) (defect {herm:.3e})")
        for alpha in range(arr.shape[2]):
            block = arr[:, :, alpha]
            lowest = float(np.linalg.eigvalsh((block + block.conj().T) / 2).min())
            if lowest < -settings.TOL_PSD:
                raise ValueError(f"F[:, :, {alpha}] is not positive semidefinite ({lowest:.3e})")
        arr.setflags(write=False)
        return arr

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def n_cells(self) -> int:
        return self.values.shape[2]

    def diagonal(self) -> np.ndarray:
        """(n, n_cells) real array of F[r, r, alpha]."""
        n = self.n
        return self.values[np.arange(n), np.arange(n), :].real.copy()

    @classmethod
    def ideal(cls, assignment, n_cells: int | None = None) -> "FTensor":
        """F[r, r, alpha] = delta(a(r), alpha) with vanishing off-diagonal entries."""
        n = len(assignment)
        n_cells = n if n_cells is None else n_cells
        values = np.zeros((n, n, n_cells), dtype=np.complex128)
        for r, alpha in enumerate(assignment):
            values[r, r, alpha] = 1.0
        return cls(values=values)


class ClassificationReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    verdict: Verdict
    assignment: tuple[int, ...] | None = None
    eta: float = Field(ge=0.0)
    offdiag_max: float = 0.0
    offdiag_within_bound: bool = True
    diagnostic: str | None = None
    details: dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def validate_verdict(self):
        if self.verdict is Verdict.NORMAL:
            if self.assignment is None or sorted(self.assignment) != list(range(len(self.assignment))):
                raise ValueError("a Normal verdict needs a permutation assignment")
            if not self.has_deficit():
                raise ValueError("a Normal verdict needs a strictly positive eta")
        return self

    def has_deficit(self) -> bool:
        return self.eta > 0
