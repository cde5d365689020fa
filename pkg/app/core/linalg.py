"""
Dense complex-operator kernel.

Kronecker convention: kron(A, B)[i*dimB + k, j*dimB + l] = A[i, j] * B[k, l]
(numpy.kron), so the first factor carries the most significant index.
Evolution operators follow exp(+i t H), hbar = 1.
"""

import logging
from functools import reduce
from typing import Iterable

import numpy as np
from scipy import linalg as sla

from app.core.config import settings
from app.core.errors import DimensionError, NumericalConsistencyError, ValidationFailure
from app.models.operators import ComplexOperator

logger = logging.getLogger(__name__)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
for _pauli in (SIGMA_X, SIGMA_Y, SIGMA_Z):
    _pauli.setflags(write=False)


def as_operator(a) -> ComplexOperator:
    if isinstance(a, ComplexOperator):
        return a
    entries = getattr(a, "entries", a)
    return ComplexOperator(entries=entries)


def identity(dim: int) -> ComplexOperator:
    return ComplexOperator(entries=np.eye(dim, dtype=np.complex128))


def adjoint(a: ComplexOperator) -> ComplexOperator:
    return as_operator(a).adjoint()


def is_hermitian(a, tol: float | None = None) -> bool:
    return as_operator(a).is_hermitian(tol)


def kron(a, b, max_dim: int | None = None) -> ComplexOperator:
    a, b = as_operator(a), as_operator(b)
    max_dim = settings.MAX_DENSE_DIM if max_dim is None else max_dim
    dim = a.dim * b.dim
    if dim > max_dim:
        raise DimensionError(f"kron result dimension {dim} exceeds the dense cap {max_dim}")
    return ComplexOperator(entries=np.kron(a.entries, b.entries))


def kron_all(ops: Iterable, max_dim: int | None = None) -> ComplexOperator:
    ops = [as_operator(op) for op in ops]
    if not ops:
        raise ValidationFailure("kron_all needs at least one factor")
    return reduce(lambda x, y: kron(x, y, max_dim=max_dim), ops)


def embed_site(op, site: int, n_sites: int, max_dim: int | None = None) -> ComplexOperator:
    """Single-site operator acting on `site` (1-based) of an n_sites chain of spins."""
    if not 1 <= site <= n_sites:
        raise ValidationFailure(f"site {site} outside [1, {n_sites}]")
    factors = [identity(2)] * n_sites
    factors[site - 1] = as_operator(op)
    return kron_all(factors, max_dim=max_dim)


def expm_hermitian(h, scale: float) -> ComplexOperator:
    """
    exp(i * scale * H) for Hermitian H, through the eigendecomposition
    H = V diag(w) V^*.
    """
    h = as_operator(h)
    if not h.is_hermitian():
        raise ValidationFailure("expm_hermitian requires a Hermitian generator")
    if scale == 0:
        return identity(h.dim)

    a = h.entries
    w, v = sla.eigh((a + a.conj().T) / 2)
    u = (v * np.exp(1j * scale * w)) @ v.conj().T

    defect = float(np.max(np.abs(u @ u.conj().T - np.eye(h.dim))))
    if defect > settings.TOL_UNITARY:
        raise NumericalConsistencyError(f"propagator lost unitarity (defect {defect:.3e})")
    logger.debug("expm_hermitian dim=%d scale=%g unitarity defect=%.2e", h.dim, scale, defect)
    return ComplexOperator(entries=u)


def trace_product(a, b) -> complex:
    """Tr(A B) as sum_ij A_ij B_ji, without forming the product."""
    a, b = getattr(a, "entries", a), getattr(b, "entries", b)
    if a.shape != b.shape:
        raise DimensionError(f"trace_product dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.sum(a * b.T))
