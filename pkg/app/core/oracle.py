"""
Brute-force counterparts of the closed forms in app.core.coleman_hepp and
of the F-tensor path in app.core.framework.

The electron's position is never discretized as an operator. With linear
dispersion the composite propagator acts diagonally in x up to a
translation, and the translation cancels under every trace against
I (x) Pi_alpha. The minus-branch chain operator at packet point x is
W_x(t) = (x)_n exp(i F_{n,t}(x) sigma_{n,x}), with the phase integral
F_{n,t}(x) = int_0^t V(x + s - n) ds, so that only quadratures over x remain:

    F[-,-;alpha](t) = sum_x q_x Tr(W_x^* Omega W_x Pi_alpha),
    F[+,-;alpha](t) = sum_x q_x Tr(Omega W_x Pi_alpha),
    F[+,+;alpha]    = Tr(Omega Pi_alpha),

with q_x the trapezoid weights times |phi(x)|^2.
"""

import logging

import numpy as np

from app.core import coleman_hepp as ch
from app.core.config import settings
from app.core.errors import DimensionError, GridError, ValidationFailure
from app.core.framework import (
    composite_state,
    conditional_expectation,
    expectation,
    f_tensor,
    pointer_probabilities,
)
from app.core.linalg import SIGMA_X, expm_hermitian, kron_all, trace_product
from app.core.parallel import ordered_map
from app.core.summation import CompensatedSum
from app.models.chain import (
    ChainParams,
    GridConfig,
    OverlapKind,
    PacketSpec,
    PotentialSpec,
    TimeSeriesRecord,
)
from app.models.framework import FTensor, InstrumentModel, MicroState, MicroSystem
from app.models.operators import ComplexOperator, DensityOperator, ProjectorOperator
from app.models.oracle import CompositeCheckReport, OracleCheck

logger = logging.getLogger(__name__)

majority_projectors = ch.majority_projectors

DENSE_TIME_RESOLVED_MAX_L = 3
ENUMERATION_CHUNK = 1 << 18

_BYTE_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)


def _popcount(values: np.ndarray) -> np.ndarray:
    counts = np.zeros(values.shape, dtype=np.int64)
    for shift in range(0, 32, 8):
        counts += _BYTE_POPCOUNT[(values >> shift) & 0xFF]
    return counts


def enumerate_overlap(L: int, m: float, J: float, which: OverlapKind | str) -> float:
    """
    Sum of the z-basis weights of all 2^(2L+1) bitstrings lying in the
    opposing majority cell. A set bit is a down spin.
    """
    which = OverlapKind(which)
    if L < 0:
        raise ValidationFailure(f"chain half-length L must be non-negative, got {L}")
    if L > settings.L_MAX_ENUM:
        raise DimensionError(f"enumeration needs L <= {settings.L_MAX_ENUM}, got {L}")
    if not -1.0 <= m <= 1.0:
        raise ValidationFailure(f"polarization m must lie in [-1, 1], got {m}")

    n_sites = 2 * L + 1
    if which is OverlapKind.PLUS_IN_MINUS:
        up, down = (1 + m) / 2, (1 - m) / 2
    else:
        mc = m * np.cos(2 * J)
        up, down = (1 + mc) / 2, (1 - mc) / 2

    total = 1 << n_sites
    acc = CompensatedSum()
    for start in range(0, total, ENUMERATION_CHUNK):
        index = np.arange(start, min(start + ENUMERATION_CHUNK, total), dtype=np.int64)
        downs = _popcount(index)
        ups = n_sites - downs
        in_cell = ups <= L if which is OverlapKind.PLUS_IN_MINUS else ups >= L + 1
        weights = np.power(up, ups[in_cell]) * np.power(down, downs[in_cell])
        acc += weights
    logger.debug("enumerate_overlap L=%d m=%g J=%g %s: %d bitstrings", L, m, J, which.value, total)
    return acc.value


def dense_kick_operator(L: int, J: float) -> ComplexOperator:
    """Z = (x)_n exp(i J sigma_{n,x}) on the 2^(2L+1) chain space."""
    if L > settings.L_MAX_DENSE:
        raise DimensionError(f"dense kick needs L <= {settings.L_MAX_DENSE}, got {L}")
    site_kick = expm_hermitian(SIGMA_X, J)
    return kron_all([site_kick] * (2 * L + 1))


def accumulated_phase(V: PotentialSpec, n: int, x, t: float):
    """F_{n,t}(x) = int_0^t V(x + s - n) ds, through the exact antiderivative of V."""
    if t < 0:
        raise ValidationFailure(f"time must be non-negative, got {t}")
    x = np.asarray(x, dtype=np.float64)
    phase = V.antiderivative(x + t - n) - V.antiderivative(x - n)
    return float(phase) if phase.ndim == 0 else phase


def default_inputs(
    params: ChainParams,
    a: float = -1.0,
    b: float = 0.0,
    c: float = -1.0,
    d: float = 0.0,
    points: int = 401,
    dt: float = 0.5,
) -> tuple[PotentialSpec, PacketSpec, GridConfig]:
    """Rectangular V of integral J on [a, b], bump packet on [c, d] and a grid matching the packet samples."""
    V = PotentialSpec.rectangular(a, b, params.J)
    phi = PacketSpec.bump(c, d, points=points)
    grid = GridConfig(x_min=c, x_max=d, points=points, dt=dt)
    return V, phi, grid


def _check_dynamics_inputs(params: ChainParams, V: PotentialSpec, phi: PacketSpec, grid: GridConfig) -> None:
    if params.L > settings.L_MAX_TIME_RESOLVED:
        raise DimensionError(f"time-resolved dynamics needs L <= {settings.L_MAX_TIME_RESOLVED}, got {params.L}")
    if phi.d > V.a + 1:
        raise ValidationFailure(f"packet support must end before the first site potential: d={phi.d} > a+1={V.a + 1}")
    J = ch.coupling_strength(V)
    if abs(J - params.J) > settings.QUAD_TOL:
        raise ValidationFailure(f"potential integrates to J={J:.9g}, chain parameters say J={params.J:.9g}")
    if grid.x_min > phi.c or grid.x_max < phi.d:
        raise GridError(f"grid [{grid.x_min}, {grid.x_max}] does not cover the packet support [{phi.c}, {phi.d}]")


def _packet_quadrature(phi: PacketSpec, grid: GridConfig) -> tuple[np.ndarray, np.ndarray]:
    x = grid.x
    weights = np.full(x.size, (grid.x_max - grid.x_min) / (grid.points - 1))
    weights[0] /= 2
    weights[-1] /= 2
    mass = weights * np.abs(phi(x)) ** 2
    total = float(mass.sum())
    if abs(total - 1.0) > settings.QUAD_TOL:
        raise GridError(f"grid too coarse: packet quadrature gives {total:.9g}, expected 1")
    keep = mass > 0
    return x[keep], mass[keep] / total


def _majority_up_mass(up: np.ndarray, down: np.ndarray, L: int) -> np.ndarray:
    """P(at least L+1 sites up) per row, sites independent with weights up[:, n], down[:, n]."""
    dist = np.ones((up.shape[0], 1), dtype=up.dtype)
    for n in range(up.shape[1]):
        nxt = np.zeros((up.shape[0], dist.shape[1] + 1), dtype=up.dtype)
        nxt[:, :-1] += dist * down[:, n, None]
        nxt[:, 1:] += dist * up[:, n, None]
        dist = nxt
    return dist[:, L + 1 :].sum(axis=1)


def _phases(params: ChainParams, V: PotentialSpec, x: np.ndarray, t: float) -> np.ndarray:
    """theta[i, n-1] = F_{n,t}(x_i)."""
    return np.stack([accumulated_phase(V, n, x, t) for n in range(1, params.N + 1)], axis=1)


def _f_values_factorized(params: ChainParams, theta: np.ndarray, mass: np.ndarray) -> np.ndarray:
    p_up, p_down = (1 + params.m) / 2, (1 - params.m) / 2
    ones = np.ones((1, params.N))
    plus_cell = float(_majority_up_mass(p_up * ones, p_down * ones, params.L)[0])
    plus = np.array([plus_cell, 1.0 - plus_cell])

    cos2, sin2 = np.cos(theta) ** 2, np.sin(theta) ** 2
    kicked_up = p_up * cos2 + p_down * sin2
    kicked_down = p_up * sin2 + p_down * cos2
    minus_plus = _majority_up_mass(kicked_up, kicked_down, params.L)
    minus_plus_cell = float(mass @ minus_plus)

    # diag(omega exp(i theta sigma_x)) = cos(theta) * diag(omega) on every site
    coherence = float(mass @ np.prod(np.cos(theta), axis=1))

    values = np.zeros((2, 2, 2), dtype=np.complex128)
    values[0, 0] = plus
    values[1, 1] = (minus_plus_cell, 1.0 - minus_plus_cell)
    values[0, 1] = coherence * plus
    values[1, 0] = np.conj(values[0, 1])
    return values


def _f_values_dense(params: ChainParams, theta: np.ndarray, mass: np.ndarray) -> np.ndarray:
    if params.L > DENSE_TIME_RESOLVED_MAX_L:
        raise DimensionError(f"dense time-resolved path needs L <= {DENSE_TIME_RESOLVED_MAX_L}, got {params.L}")
    omega = ch.dense_chain_state(params).entries
    cells = [p.entries for p in majority_projectors(params.L)]

    values = np.zeros((2, 2, 2), dtype=np.complex128)
    for alpha, cell in enumerate(cells):
        values[0, 0, alpha] = trace_product(omega, cell)
    for angles, q in zip(theta, mass):
        w_x = kron_all([expm_hermitian(SIGMA_X, angle) for angle in angles]).entries
        evolved = w_x.conj().T @ omega @ w_x
        cross = omega @ w_x
        for alpha, cell in enumerate(cells):
            values[1, 1, alpha] += q * trace_product(evolved, cell)
            values[0, 1, alpha] += q * trace_product(cross, cell)
    values[1, 0] = np.conj(values[0, 1])
    return values


def _f_values(params, V, phi, grid, t: float, dense: bool) -> np.ndarray:
    x, mass = _packet_quadrature(phi, grid)
    theta = _phases(params, V, x, t)
    if dense:
        return _f_values_dense(params, theta, mass)
    return _f_values_factorized(params, theta, mass)


def _record(
    t: float,
    values: np.ndarray,
    psi: MicroState,
    reference: np.ndarray | None,
    stat_tol: float,
) -> TimeSeriesRecord:
    probs = psi.probabilities
    w = probs[0] * values[0, 0].real + probs[1] * values[1, 1].real
    stationary = reference is not None and float(np.max(np.abs(values - reference))) <= stat_tol
    return TimeSeriesRecord(t=t, F_values=values, w=(float(w[0]), float(w[1])), stationary=stationary)


def _default_psi(psi: MicroState | None) -> MicroState:
    if psi is None:
        return MicroState.normalized([1.0, 1.0])
    if psi.n != 2:
        raise DimensionError(f"the electron spin has two levels, psi has {psi.n}")
    return psi


def time_resolved_f(
    params: ChainParams,
    V: PotentialSpec,
    phi: PacketSpec,
    grid: GridConfig,
    t: float,
    psi: MicroState | None = None,
    dense: bool = False,
    stat_tol: float | None = None,
) -> TimeSeriesRecord:
    """F-tensor of the chain at time t.

    Stationarity is only assessed from max(critical_time, saturation_time) on, where every
    phase integral has saturated. With b > 0 that is 2b past tau, so records for t in
    [tau, tau + 2b) report stationary=False even though the pointer has already responded.
    """
    _check_dynamics_inputs(params, V, phi, grid)
    if t < 0:
        raise ValidationFailure(f"time must be non-negative, got {t}")
    psi = _default_psi(psi)
    values = _f_values(params, V, phi, grid, t, dense)
    t_stat = ch.stationarity_time(params.L, V.b, phi.c)
    reference = _f_values(params, V, phi, grid, t_stat, dense) if t >= t_stat else None
    stat_tol = settings.STAT_TOL if stat_tol is None else stat_tol
    return _record(t, values, psi, reference, stat_tol)


def time_schedule(t_max: float, dt: float, marks=()) -> list[float]:
    steps = int(np.floor(t_max / dt + 1e-9))
    times = {round(k * dt, 12) for k in range(steps + 1)}
    times.update(float(mark) for mark in marks if 0 <= mark <= t_max)
    return sorted(times)


def time_series(
    params: ChainParams,
    V: PotentialSpec,
    phi: PacketSpec,
    grid: GridConfig,
    t_max: float,
    psi: MicroState | None = None,
    dense: bool = False,
    threads: int = 1,
    stat_tol: float | None = None,
) -> list[TimeSeriesRecord]:
    """Records on a uniform schedule with step grid.dt through t_max, always including tau."""
    _check_dynamics_inputs(params, V, phi, grid)
    psi = _default_psi(psi)
    tau = ch.critical_time(params.L, V.b, phi.c)
    t_stat = ch.stationarity_time(params.L, V.b, phi.c)
    if t_max < t_stat:
        raise ValidationFailure(f"t_max={t_max} must reach the stationarity time {t_stat}")

    stat_tol = settings.STAT_TOL if stat_tol is None else stat_tol
    reference = _f_values(params, V, phi, grid, t_stat, dense)
    times = time_schedule(t_max, grid.dt, marks=(tau, t_stat))

    def one(t: float) -> TimeSeriesRecord:
        values = _f_values(params, V, phi, grid, t, dense)
        return _record(t, values, psi, reference if t >= t_stat else None, stat_tol)

    records = ordered_map(one, times, threads)
    logger.info("time_series L=%d: %d records, tau=%g", params.L, len(records), tau)
    return records


def dense_composite_check(
    sys: MicroSystem,
    inst: InstrumentModel,
    omega: DensityOperator,
    psi: MicroState,
    t: float,
    A,
) -> CompositeCheckReport:
    """Compare the F-tensor statistics with traces taken directly on Phi(t)."""
    phi = composite_state(sys, inst, omega, psi, t)
    a = np.asarray(getattr(A, "entries", A), dtype=np.complex128)
    eye_s, eye_k = np.eye(sys.n), np.eye(inst.dimK)

    F = f_tensor(inst, sys, omega, t)
    e_dev = abs(trace_product(phi, np.kron(a, eye_k)) - expectation(F, psi, a))

    w = pointer_probabilities(F, psi)
    p_dev, c_dev = 0.0, 0.0
    for alpha, cell in enumerate(inst.cells):
        w_direct = trace_product(phi, np.kron(eye_s, cell.entries))
        p_dev = max(p_dev, abs(w_direct - w[alpha]))
        if w[alpha] > settings.W_FLOOR:
            cond_direct = trace_product(phi, np.kron(a, cell.entries)) / w_direct
            c_dev = max(c_dev, abs(cond_direct - conditional_expectation(F, psi, a, alpha)))

    return CompositeCheckReport(
        expectation_deviation=float(e_dev),
        probability_deviation=float(p_dev),
        conditional_deviation=float(c_dev),
        composite_dim=phi.shape[0],
    )


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> ComplexOperator:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return ComplexOperator(entries=scale * (z + z.conj().T) / 2)


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> DensityOperator:
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return DensityOperator.from_array(rho / np.trace(rho).real)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_cells(dimK: int, n_cells: int, rng: np.random.Generator) -> tuple[ProjectorOperator, ...]:
    """Partition of unity by n_cells projectors onto spans of columns of a random unitary."""
    if not 1 <= n_cells <= dimK:
        raise ValidationFailure(f"need 1 <= n_cells <= dimK, got n_cells={n_cells}, dimK={dimK}")
    q = random_unitary(dimK, rng)
    cuts = np.sort(rng.choice(np.arange(1, dimK), size=n_cells - 1, replace=False)) if n_cells > 1 else []
    groups = np.split(np.arange(dimK), cuts)
    return tuple(ProjectorOperator.from_array(q[:, g] @ q[:, g].conj().T) for g in groups)


def random_instance(
    n: int,
    dimK: int,
    rng: np.random.Generator,
    n_cells: int | None = None,
) -> tuple[MicroSystem, InstrumentModel, DensityOperator, MicroState]:
    n_cells = n if n_cells is None else n_cells
    sys = MicroSystem(energies=tuple(float(e) for e in rng.normal(size=n)))
    inst = InstrumentModel(
        K=random_hermitian(dimK, rng),
        couplings=tuple(random_hermitian(dimK, rng) for _ in range(n)),
        cells=random_cells(dimK, n_cells, rng),
    )
    psi = MicroState.normalized(rng.normal(size=n) + 1j * rng.normal(size=n))
    return sys, inst, random_density(dimK, rng), psi


ORACLE_M_VALUES = (0.0, 0.25, 0.5, 0.9, 1.0)
ORACLE_J_VALUES = (np.pi / 4, np.pi / 3, np.pi / 2)

DEFAULT_CHECK_TOLERANCES = {
    "enumeration_vs_closed_form": 1e-11,
    "kick_product_vs_exponential": 1e-11,
    "kick_conjugation_vs_site_states": 1e-12,
    "framework_laws": 1e-10,
    "dense_composite": 1e-11,
    "time_resolved_vs_closed_form": 1e-7,
    "time_resolved_dense_vs_factorized": 1e-12,
}


def _enumeration_deviation(L: int) -> float:
    worst = 0.0
    for m in ORACLE_M_VALUES:
        for J in ORACLE_J_VALUES:
            worst = max(
                worst,
                abs(enumerate_overlap(L, m, J, OverlapKind.PLUS_IN_MINUS) - ch.overlap_plus_in_minus(L, m)),
                abs(enumerate_overlap(L, m, J, OverlapKind.MINUS_IN_PLUS) - ch.overlap_minus_in_plus(L, m, J)),
            )
    return worst


def _kick_deviations(L_values) -> tuple[float, float]:
    exp_dev, conj_dev = 0.0, 0.0
    for L in L_values:
        for J in ORACLE_J_VALUES:
            z = dense_kick_operator(L, J).entries
            z_sum = expm_hermitian(ch.kick_generator(L, J), 1.0).entries
            exp_dev = max(exp_dev, float(np.max(np.abs(z - z_sum))))
            for m in ORACLE_M_VALUES:
                params = ChainParams(L=L, m=m, J=J)
                omega = ch.dense_chain_state(params).entries
                kicked = kron_all([ch.kicked_site_state(ch.site_state_plus(m).entries, J)] * params.N).entries
                printed = kron_all([ch.site_state_minus(m, J).entries] * params.N).entries
                conj_dev = max(
                    conj_dev,
                    float(np.max(np.abs(z.conj().T @ omega @ z - kicked))),
                    float(np.max(np.abs(z @ omega @ z.conj().T - printed))),
                )
    return exp_dev, conj_dev


def _random_deviations(seed_sequence: np.random.SeedSequence) -> tuple[float, float]:
    rng = np.random.default_rng(seed_sequence)
    n = int(rng.integers(1, 4))
    dimK = int(rng.integers(max(n, 2), 17))
    sys, inst, omega, psi = random_instance(n, dimK, rng)
    t = float(rng.uniform(0.0, 5.0))
    F = f_tensor(inst, sys, omega, t)
    diag = F.diagonal()
    laws = max(
        float(np.max(np.abs(diag.sum(axis=1) - 1.0))),
        float(np.max(np.abs(F.values - np.conj(np.transpose(F.values, (1, 0, 2)))))),
    )
    a = random_hermitian(n, rng)
    report = dense_composite_check(sys, inst, omega, psi, t, a)
    return laws, report.max_deviation


def _time_resolved_deviations() -> tuple[float, float]:
    closed_dev = 0.0
    for m, J in ((0.8, 1.2), (1.0, np.pi / 2), (0.5, np.pi / 3)):
        params = ChainParams(L=1, m=m, J=J)
        V, phi, grid = default_inputs(params)
        t_stat = ch.stationarity_time(params.L, V.b, phi.c)
        record = time_resolved_f(params, V, phi, grid, t_stat)
        closed_dev = max(
            closed_dev,
            abs(record.F_values[0, 0, 1].real - ch.overlap_plus_in_minus(params.L, m)),
            abs(record.F_values[1, 1, 0].real - ch.overlap_minus_in_plus(params.L, m, J)),
        )

    params = ChainParams(L=1, m=0.7, J=1.1)
    V, phi, grid = default_inputs(params, points=101)
    t_mid = ch.critical_time(params.L, V.b, phi.c) / 2
    factorized = time_resolved_f(params, V, phi, grid, t_mid).F_values
    dense = time_resolved_f(params, V, phi, grid, t_mid, dense=True).F_values
    return closed_dev, float(np.max(np.abs(factorized - dense)))


def run_oracle_checks(
    L_max: int = 10,
    instances: int = 20,
    seed: int = 0,
    tol: float | None = None,
    threads: int = 1,
) -> list[OracleCheck]:
    """Every equivalence between brute force and closed form, with its worst deviation."""
    if L_max < 0:
        raise ValidationFailure(f"L_max must be non-negative, got {L_max}")
    if L_max > settings.L_MAX_ENUM:
        raise DimensionError(f"oracle enumeration needs L_max <= {settings.L_MAX_ENUM}, got {L_max}")

    def tolerance(name: str) -> float:
        return DEFAULT_CHECK_TOLERANCES[name] if tol is None else tol

    checks = []
    enum_devs = ordered_map(_enumeration_deviation, range(L_max + 1), threads)
    checks.append(OracleCheck(
        name="enumeration_vs_closed_form",
        max_deviation=max(enum_devs),
        tolerance=tolerance("enumeration_vs_closed_form"),
        cases=len(enum_devs) * len(ORACLE_M_VALUES) * len(ORACLE_J_VALUES) * 2,
    ))

    kick_L = range(min(2, settings.L_MAX_DENSE) + 1)
    exp_dev, conj_dev = _kick_deviations(kick_L)
    checks.append(OracleCheck(
        name="kick_product_vs_exponential",
        max_deviation=exp_dev,
        tolerance=tolerance("kick_product_vs_exponential"),
        cases=len(kick_L) * len(ORACLE_J_VALUES),
    ))
    checks.append(OracleCheck(
        name="kick_conjugation_vs_site_states",
        max_deviation=conj_dev,
        tolerance=tolerance("kick_conjugation_vs_site_states"),
        cases=len(kick_L) * len(ORACLE_J_VALUES) * len(ORACLE_M_VALUES),
    ))

    seeds = np.random.SeedSequence(seed).spawn(instances)
    random_devs = ordered_map(_random_deviations, seeds, threads)
    checks.append(OracleCheck(
        name="framework_laws",
        max_deviation=max((d[0] for d in random_devs), default=0.0),
        tolerance=tolerance("framework_laws"),
        cases=instances,
    ))
    checks.append(OracleCheck(
        name="dense_composite",
        max_deviation=max((d[1] for d in random_devs), default=0.0),
        tolerance=tolerance("dense_composite"),
        cases=instances,
    ))

    closed_dev, dense_dev = _time_resolved_deviations()
    checks.append(OracleCheck(
        name="time_resolved_vs_closed_form",
        max_deviation=closed_dev,
        tolerance=tolerance("time_resolved_vs_closed_form"),
        cases=3,
    ))
    checks.append(OracleCheck(
        name="time_resolved_dense_vs_factorized",
        max_deviation=dense_dev,
        tolerance=tolerance("time_resolved_dense_vs_factorized"),
        cases=1,
    ))

    for check in checks:
        logger.info("oracle check %s: max deviation %.3e (tol %.1e)", check.name, check.max_deviation, check.tolerance)
    return checks


__all__ = [
    "accumulated_phase",
    "default_inputs",
    "dense_composite_check",
    "dense_kick_operator",
    "enumerate_overlap",
    "majority_projectors",
    "random_cells",
    "random_density",
    "random_hermitian",
    "random_instance",
    "random_unitary",
    "run_oracle_checks",
    "time_resolved_f",
    "time_schedule",
    "time_series",
]
