# app/models/chain.py

from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.integrate import cumulative_trapezoid, trapezoid

from app.core.config import settings
from app.models.framework import ClassificationReport
from app.models.operators import DensityOperator


class Branch(str, Enum):
    PLUS = "+"
    MINUS = "-"


class OverlapKind(str, Enum):
    PLUS_IN_MINUS = "plus_in_minus"
    MINUS_IN_PLUS = "minus_in_plus"


class ChainParams(BaseModel):
    """Chain of N = 2L+1 spins with polarization m and coupling J = integral of V."""

    model_config = ConfigDict(frozen=True)

    L: int = Field(ge=0)
    m: float = Field(ge=-1.0, le=1.0)
    J: float

    @field_validator("J")
    @classmethod
    def validate_finite(cls, v):
        if not np.isfinite(v):
            raise ValueError("J must be finite")
        return v

    @property
    def N(self) -> int:
        return 2 * self.L + 1


class PotentialSpec(BaseModel):
    """
    Real potential sampled on a uniform grid over its support [a, b] and
    taken as the piecewise-linear interpolant there, zero outside.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    a: float
    b: float
    profile: np.ndarray

    @field_validator("profile", mode="before")
    @classmethod
    def validate_profile(cls, v):
        arr = np.array(v, dtype=np.float64, copy=True).ravel()
        if arr.size < 2:
            raise ValueError("potential profile needs at least two grid points")
        if not np.all(np.isfinite(arr)):
            raise ValueError("potential profile must be bounded")
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def validate_support(self):
        if not self.b > self.a:
            raise ValueError(f"potential support needs b > a, got [{self.a}, {self.b}]")
        return self

    @classmethod
    def rectangular(cls, a: float, b: float, J: float, points: int = 201) -> "PotentialSpec":
        return cls(a=a, b=b, profile=np.full(points, J / (b - a)))

    @classmethod
    def triangular(cls, a: float, b: float, height: float, points: int = 201) -> "PotentialSpec":
        x = np.linspace(a, b, points)
        mid = (a + b) / 2
        return cls(a=a, b=b, profile=height * (1.0 - np.abs(x - mid) / (mid - a)))

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.profile.size)

    def antiderivative(self, y) -> np.ndarray:
        """G(y) = integral of V from -inf to y, exact for the piecewise-linear profile."""
        xs, vs = self.grid, self.profile
        cumulative = cumulative_trapezoid(vs, xs, initial=0.0)
        y = np.clip(np.asarray(y, dtype=np.float64), self.a, self.b)
        k = np.clip(np.searchsorted(xs, y, side="right") - 1, 0, xs.size - 2)
        h = y - xs[k]
        slope = (vs[k + 1] - vs[k]) / (xs[k + 1] - xs[k])
        return cumulative[k] + h * (vs[k] + 0.5 * slope * h)


class PacketSpec(BaseModel):
    """Wave packet phi sampled on a uniform grid over its support [c, d]."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    c: float
    d: float
    amplitudes: np.ndarray

    @field_validator("amplitudes", mode="before")
    @classmethod
    def validate_amplitudes(cls, v):
        arr = np.array(v, dtype=np.complex128, copy=True).ravel()
        if arr.size < 2:
            raise ValueError("packet needs at least two grid points")
        if not np.all(np.isfinite(arr)):
            raise ValueError("packet amplitudes must be finite")
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def validate_normalized(self):
        if not self.d > self.c:
            raise ValueError(f"packet support needs d > c, got [{self.c}, {self.d}]")
        norm = float(trapezoid(np.abs(self.amplitudes) ** 2, self.grid))
        if abs(norm - 1.0) > settings.QUAD_TOL:
            raise ValueError(f"packet must satisfy integral |phi|^2 = 1, got {norm:.9g}")
        return self

    @classmethod
    def bump(cls, c: float, d: float, points: int = 401) -> "PacketSpec":
        """Smooth compactly supported bump exp(-1/(1-u^2)), u in (-1, 1), normalized on its grid."""
        x = np.linspace(c, d, points)
        u = 2.0 * (x - c) / (d - c) - 1.0
        inside = np.abs(u) < 1.0
        phi = np.zeros(points)
        phi[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
        phi /= np.sqrt(trapezoid(phi**2, x))
        return cls(c=c, d=d, amplitudes=phi)

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(self.c, self.d, self.amplitudes.size)

    def __call__(self, x) -> np.ndarray:
        """Linear interpolation of phi, zero outside [c, d]."""
        x = np.asarray(x, dtype=np.float64)
        grid = self.grid
        re = np.interp(x, grid, self.amplitudes.real, left=0.0, right=0.0)
        im = np.interp(x, grid, self.amplitudes.imag, left=0.0, right=0.0)
        return re + 1j * im


class SiteState(BaseModel):
    model_config = ConfigDict(frozen=True)

    branch: Branch
    state: DensityOperator

    @model_validator(mode="after")
    def validate_qubit(self):
        if self.state.dim != 2:
            raise ValueError(f"a site state is 2x2, got dimension {self.state.dim}")
        return self

    @property
    def entries(self) -> np.ndarray:
        return self.state.entries


class PerturbedChain(BaseModel):
    """
    Product state of the chain where the listed sites (1-based) carry
    arbitrary single-site states and every other site carries the
    polarized state of `base`.
    """

    model_config = ConfigDict(frozen=True)

    base: ChainParams
    flips: tuple[tuple[int, DensityOperator], ...] = ()

    @model_validator(mode="after")
    def validate_flips(self):
        sites = [site for site, _ in self.flips]
        if len(set(sites)) != len(sites):
            raise ValueError(f"duplicate site in flips: {sites}")
        for site, state in self.flips:
            if not 1 <= site <= self.base.N:
                raise ValueError(f"flipped site {site} outside [1, {self.base.N}]")
            if state.dim != 2:
                raise ValueError(f"flipped site {site} needs a 2x2 state")
        return self

    @property
    def flipped_sites(self) -> dict[int, DensityOperator]:
        return dict(self.flips)


class GridConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    x_min: float
    x_max: float
    points: int = Field(ge=2)
    dt: float = Field(gt=0.0)

    @model_validator(mode="after")
    def validate_range(self):
        if not self.x_max > self.x_min:
            raise ValueError(f"grid needs x_max > x_min, got [{self.x_min}, {self.x_max}]")
        return self

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.points)


class TimeSeriesRecord(BaseModel):
    """
    F_values[r, s, alpha] with index 0 for '+' and 1 for '-' on every axis;
    w are the pointer probabilities for the configured microstate.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    t: float
    F_values: np.ndarray
    w: tuple[float, float]
    stationary: bool = False

    @field_validator("F_values", mode="before")
    @classmethod
    def validate_entries(cls, v):
        arr = np.array(v, dtype=np.complex128, copy=True)
        if arr.shape != (2, 2, 2):
            raise ValueError(f"F_values must have shape (2, 2, 2), got {arr.shape}")
        tol = settings.TOL_TRACE
        for r in range(2):
            diag = arr[r, r, :]
            if np.max(np.abs(diag.imag)) > tol or diag.real.min() < -tol or diag.real.max() > 1 + tol:
                raise ValueError(f"diagonal entries F[{r},{r},:] must be real and in [0, 1]")
            if abs(diag.real.sum() - 1.0) > tol:
                raise ValueError(f"row F[{r},{r},:] must sum to 1, got {diag.real.sum():.12g}")
        arr.setflags(write=False)
        return arr


class ModelClassificationReport(ClassificationReport):
    """
    Closed-form verdict for the chain. The overlaps can underflow double
    precision at large L, so the deficit is also carried as its logarithm.
    """

    overlap_plus_in_minus: float
    overlap_minus_in_plus: float
    log_overlap_plus_in_minus: float
    log_overlap_minus_in_plus: float
    decay_rate: float
    predicted_eta: float
    predicted_eta_per_length: float
    in_proposition_regime: bool

    @property
    def log_eta(self) -> float:
        return max(self.log_overlap_plus_in_minus, self.log_overlap_minus_in_plus)

    def has_deficit(self) -> bool:
        return self.log_eta > -np.inf
