"""
Generic measurement model: a finite microsystem coupled to a finite
instrument of the first kind, and the statistics read off the F-tensor.

Composite evolution: U_c(t) = sum_r P(u_r) (x) U_r(t), U_r(t) = exp(i K_r t),
Phi(t) = U_c(t)^* [P(psi) (x) Omega] U_c(t)
       = sum_{r,s} c_r conj(c_s) |u_r><u_s| (x) Omega_{r,s}(t),
Omega_{r,s}(t) = U_r(t)^* Omega U_s(t).
Every functional below is a trace against this Phi(t); in particular the
per-cell partial trace Tr_K[Phi(t)(I (x) Pi_alpha)] has entries
c_r conj(c_s) F[r, s, alpha].
"""

import logging

import numpy as np

from app.core.config import settings
from app.core.errors import (
    DimensionError,
    NumericalConsistencyError,
    UndefinedConditionalError,
    ValidationFailure,
)
from app.core.linalg import as_operator, expm_hermitian, trace_product
from app.models.framework import (
    ClassificationReport,
    FTensor,
    InstrumentModel,
    MicroState,
    MicroSystem,
    Verdict,
)
from app.models.operators import ComplexOperator, DensityOperator

logger = logging.getLogger(__name__)


def _check_index(r: int, n: int, name: str = "r") -> None:
    if not 0 <= r < n:
        raise ValidationFailure(f"index {name}={r} out of range [0, {n - 1}]")


def _check_compatible(sys: MicroSystem, inst: InstrumentModel) -> None:
    if sys.n != inst.n:
        raise ValidationFailure(f"microsystem has {sys.n} levels but the instrument has {inst.n} couplings")


def _check_observable(a, n: int) -> np.ndarray:
    a = as_operator(a)
    if a.dim != n:
        raise DimensionError(f"observable has dimension {a.dim}, expected {n}")
    if not a.is_hermitian():
        raise ValidationFailure("observable must be Hermitian")
    return a.entries


def effective_hamiltonian(sys: MicroSystem, inst: InstrumentModel, r: int) -> ComplexOperator:
    """K_r = K + V_r + eps_r I."""
    _check_compatible(sys, inst)
    _check_index(r, sys.n)
    k_r = inst.K.entries + inst.couplings[r].entries + sys.energies[r] * np.eye(inst.dimK)
    return ComplexOperator(entries=k_r)


def propagators(sys: MicroSystem, inst: InstrumentModel, t: float) -> list[ComplexOperator]:
    if t < 0:
        raise ValidationFailure(f"time must be non-negative, got {t}")
    return [expm_hermitian(effective_hamiltonian(sys, inst, r), t) for r in range(sys.n)]


def _check_state(inst: InstrumentModel, omega: DensityOperator) -> None:
    if omega.dim != inst.dimK:
        raise DimensionError(f"instrument state has dimension {omega.dim}, instrument has {inst.dimK}")


def cross_evolved_state(
    inst: InstrumentModel,
    sys: MicroSystem,
    omega: DensityOperator,
    r: int,
    s: int,
    t: float,
) -> ComplexOperator:
    """Omega_{r,s}(t) = U_r(t)^* Omega U_s(t)."""
    _check_compatible(sys, inst)
    _check_state(inst, omega)
    _check_index(r, sys.n, "r")
    _check_index(s, sys.n, "s")
    if t < 0:
        raise ValidationFailure(f"time must be non-negative, got {t}")
    u_r = expm_hermitian(effective_hamiltonian(sys, inst, r), t).entries
    u_s = u_r if s == r else expm_hermitian(effective_hamiltonian(sys, inst, s), t).entries
    return ComplexOperator(entries=u_r.conj().T @ omega.entries @ u_s)


def f_tensor(inst: InstrumentModel, sys: MicroSystem, omega: DensityOperator, t: float) -> FTensor:
    """F[r, s, alpha] = Tr(Omega_{r,s}(t) Pi_alpha), every (r, s, alpha)."""
    _check_compatible(sys, inst)
    _check_state(inst, omega)
    us = [u.entries for u in propagators(sys, inst, t)]

    n = sys.n
    values = np.empty((n, n, inst.n_cells), dtype=np.complex128)
    for r in range(n):
        left = us[r].conj().T @ omega.entries
        for s in range(n):
            evolved = left @ us[s]
            for alpha, cell in enumerate(inst.cells):
                values[r, s, alpha] = trace_product(evolved, cell.entries)
    logger.debug("f_tensor n=%d cells=%d dimK=%d t=%g", n, inst.n_cells, inst.dimK, t)
    return FTensor(values=values)


def cell_reduced_states(F: FTensor, psi: MicroState) -> np.ndarray:
    """
    rho_alpha[r, s] = c_r conj(c_s) F[r, s, alpha], the microsystem block of
    Phi(t)(I (x) Pi_alpha). Shape (n_cells, n, n).
    """
    if psi.n != F.n:
        raise DimensionError(f"state has {psi.n} amplitudes, F has n={F.n}")
    c = psi.amplitudes
    coherence = np.outer(c, c.conj())
    return np.transpose(F.values, (2, 0, 1)) * coherence[None, :, :]


def pointer_probabilities(F: FTensor, psi: MicroState) -> np.ndarray:
    """w_alpha = sum_r |c_r|^2 F[r, r, alpha]."""
    if psi.n != F.n:
        raise DimensionError(f"state has {psi.n} amplitudes, F has n={F.n}")
    w = psi.probabilities @ F.diagonal()
    tol = settings.TOL_TRACE
    if abs(w.sum() - 1.0) > tol or w.min() < -tol or w.max() > 1 + tol:
        raise NumericalConsistencyError(f"pointer probabilities are not a distribution: {w}")
    return w


def _real_part(value: complex, what: str) -> float:
    if abs(value.imag) > settings.TOL_IMAG:
        raise NumericalConsistencyError(f"{what} has imaginary residue {value.imag:.3e}")
    return float(value.real)


def expectation(F: FTensor, psi: MicroState, A) -> float:
    """
    E(A) = sum_r |c_r|^2 A_rr + sum_{r != s} sum_alpha F[r, s, alpha] c_r conj(c_s) A_sr.
    """
    a = _check_observable(A, F.n)
    rho = reduced_state_matrix(F, psi)
    return _real_part(complex(trace_product(rho, a)), "E(A)")


def conditional_expectation(F: FTensor, psi: MicroState, A, alpha: int) -> float:
    """E(A | K_alpha) = Tr(rho_alpha A) / w_alpha, defined for w_alpha above W_FLOOR."""
    a = _check_observable(A, F.n)
    _check_index(alpha, F.n_cells, "alpha")
    w = pointer_probabilities(F, psi)
    if w[alpha] <= settings.W_FLOOR:
        raise UndefinedConditionalError(
            f"conditional expectation undefined: w[{alpha}] = {w[alpha]:.3e} is below the floor {settings.W_FLOOR:.1e}"
        )
    rho_alpha = cell_reduced_states(F, psi)[alpha]
    return _real_part(complex(trace_product(rho_alpha, a)) / w[alpha], f"E(A|K_{alpha})")


def reduced_state_matrix(F: FTensor, psi: MicroState) -> np.ndarray:
    rho = cell_reduced_states(F, psi).sum(axis=0)
    # the diagonal is exactly |c_r|^2 by the row-sum law; pin it to avoid roundoff drift
    np.fill_diagonal(rho, psi.probabilities)
    return rho


def reduced_state(F: FTensor, psi: MicroState) -> DensityOperator:
    """Density matrix rho of S with Tr(rho A) = E(A) for every Hermitian A."""
    return DensityOperator.from_array(reduced_state_matrix(F, psi))


def consistency_residual(F: FTensor, psi: MicroState, A) -> float:
    """|sum_alpha w_alpha E(A|K_alpha) - E(A)| over the cells with w_alpha above W_FLOOR."""
    w = pointer_probabilities(F, psi)
    total = 0.0
    for alpha in range(F.n_cells):
        if w[alpha] > settings.W_FLOOR:
            total += w[alpha] * conditional_expectation(F, psi, A, alpha)
    return abs(total - expectation(F, psi, A))


def composite_state(
    sys: MicroSystem,
    inst: InstrumentModel,
    omega: DensityOperator,
    psi: MicroState,
    t: float,
    max_dim: int | None = None,
) -> np.ndarray:
    """Dense Phi(t) = U_c(t)^* [P(psi) (x) Omega] U_c(t) on H (x) K."""
    _check_compatible(sys, inst)
    _check_state(inst, omega)
    max_dim = settings.MAX_COMPOSITE_DIM if max_dim is None else max_dim
    dim = sys.n * inst.dimK
    if dim > max_dim:
        raise DimensionError(f"composite dimension {dim} exceeds cap {max_dim}")

    u_c = np.zeros((dim, dim), dtype=np.complex128)
    for r, u in enumerate(propagators(sys, inst, t)):
        block = slice(r * inst.dimK, (r + 1) * inst.dimK)
        u_c[block, block] = u.entries
    c = psi.amplitudes
    phi0 = np.kron(np.outer(c, c.conj()), omega.entries)
    return u_c.conj().T @ phi0 @ u_c


def classify(
    F: FTensor,
    ideal_tol: float | None = None,
    eta_threshold: float | None = None,
    tie_tol: float | None = None,
) -> ClassificationReport:
    """
    Assignment a(r) = argmax_alpha F[r, r, alpha]; eta = max_r (1 - F[r, r, a(r)]).
    Ties in the argmax are refused rather than broken.
    """
    ideal_tol = settings.IDEAL_TOL if ideal_tol is None else ideal_tol
    eta_threshold = settings.ETA_THRESHOLD if eta_threshold is None else eta_threshold
    tie_tol = settings.TIE_TOL if tie_tol is None else tie_tol

    diag = F.diagonal()
    n, n_cells = diag.shape
    details = {f"F[{r},{r},{alpha}]": float(diag[r, alpha]) for r in range(n) for alpha in range(n_cells)}

    offdiag = [abs(F.values[r, s, alpha]) for r in range(n) for s in range(n) if r != s for alpha in range(n_cells)]
    offdiag_max = float(max(offdiag, default=0.0))

    assignment = tuple(int(np.argmax(diag[r])) for r in range(n))
    eta = float(max(0.0, max(1.0 - diag[r, assignment[r]] for r in range(n))))

    def report(verdict: Verdict, diagnostic: str | None = None) -> ClassificationReport:
        is_permutation = sorted(assignment) == list(range(n)) and n_cells == n
        return ClassificationReport(
            verdict=verdict,
            assignment=assignment if is_permutation else None,
            eta=eta,
            offdiag_max=offdiag_max,
            offdiag_within_bound=bool(offdiag_max <= np.sqrt(eta) + settings.TOL_TRACE),
            diagnostic=diagnostic,
            details=details,
        )

    if n_cells > 1:
        for r in range(n):
            top_two = np.sort(diag[r])[-2:]
            if top_two[1] - top_two[0] <= tie_tol:
                return report(Verdict.UNCLASSIFIED, f"tie in argmax for r={r}: {top_two[1]:.12g} vs {top_two[0]:.12g}")

    if n_cells != n or len(set(assignment)) != n:
        return report(Verdict.UNCLASSIFIED, f"assignment {assignment} is not a permutation")
    if eta <= ideal_tol:
        return report(Verdict.IDEAL)
    if eta < eta_threshold:
        return report(Verdict.NORMAL)
    return report(Verdict.UNCLASSIFIED, f"eta={eta:.6g} is not below the threshold {eta_threshold:g}")


__all__ = [
    "classify",
    "cell_reduced_states",
    "composite_state",
    "conditional_expectation",
    "consistency_residual",
    "cross_evolved_state",
    "effective_hamiltonian",
    "expectation",
    "f_tensor",
    "pointer_probabilities",
    "propagators",
    "reduced_state",
    "reduced_state_matrix",
]
