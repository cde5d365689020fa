import math

import numpy as np
import pytest

from app.core import coleman_hepp as ch
from app.core import oracle
from app.core.errors import DimensionError, GridError, ValidationFailure
from app.core.linalg import SIGMA_X, expm_hermitian
from app.models.chain import ChainParams, GridConfig, OverlapKind, PotentialSpec
from app.models.framework import MicroState

HALF_PI = math.pi / 2


# ---------- enumeration ----------

@pytest.mark.parametrize("L", range(0, 5))
@pytest.mark.parametrize("m, J", [(0.0, 1.0), (0.3, HALF_PI), (0.8, 1.2), (1.0, HALF_PI), (-0.6, 0.4)])
def test_enumeration_matches_the_binomial_tails(L, m, J):
    assert oracle.enumerate_overlap(L, m, J, OverlapKind.PLUS_IN_MINUS) == pytest.approx(
        ch.overlap_plus_in_minus(L, m), abs=1e-13
    )
    assert oracle.enumerate_overlap(L, m, J, "minus_in_plus") == pytest.approx(
        ch.overlap_minus_in_plus(L, m, J), abs=1e-13
    )


def test_enumeration_across_chunks():
    # 2^21 bitstrings, eight chunks
    assert oracle.enumerate_overlap(10, 0.4, 1.3, "plus_in_minus") == pytest.approx(
        ch.overlap_plus_in_minus(10, 0.4), abs=1e-12
    )


def test_enumeration_is_capped():
    with pytest.raises(DimensionError):
        oracle.enumerate_overlap(13, 0.5, 1.0, "plus_in_minus")
    with pytest.raises(ValueError):
        oracle.enumerate_overlap(1, 0.5, 1.0, "sideways")


# ---------- kick ----------

def test_zero_kick_is_the_identity():
    np.testing.assert_allclose(oracle.dense_kick_operator(2, 0.0).entries, np.eye(32), atol=1e-15)


def test_half_turn_on_one_site_is_i_sigma_x():
    np.testing.assert_allclose(oracle.dense_kick_operator(0, HALF_PI).entries, 1j * SIGMA_X, atol=1e-14)


def test_kick_product_is_the_exponential_of_the_sum():
    z = oracle.dense_kick_operator(1, 0.9).entries
    z_sum = expm_hermitian(ch.kick_generator(1, 0.9), 1.0).entries
    np.testing.assert_allclose(z, z_sum, atol=1e-12)


def test_dense_kick_is_capped():
    with pytest.raises(DimensionError):
        oracle.dense_kick_operator(6, 1.0)


# ---------- phases ----------

def test_accumulated_phase_before_during_and_after_the_site():
    V = PotentialSpec.rectangular(-1.0, 0.0, 1.3)
    assert oracle.accumulated_phase(V, 1, -1.0, 0.0) == 0.0
    assert oracle.accumulated_phase(V, 1, -1.0, 1.5) == pytest.approx(0.65, abs=1e-12)
    assert oracle.accumulated_phase(V, 1, -1.0, 10.0) == pytest.approx(1.3, abs=1e-12)
    np.testing.assert_allclose(oracle.accumulated_phase(V, 3, np.array([-1.0, -0.5, 0.0]), 2.0), 0.0)


def test_accumulated_phase_rejects_negative_time():
    with pytest.raises(ValidationFailure):
        oracle.accumulated_phase(PotentialSpec.rectangular(-1.0, 0.0, 1.0), 1, -0.5, -1.0)


# ---------- time-resolved F ----------

@pytest.fixture
def small_chain_inputs():
    params = ChainParams(L=1, m=0.8, J=1.2)
    return (params, *oracle.default_inputs(params))


def test_nothing_happens_before_the_electron_arrives(small_chain_inputs):
    params, V, phi, grid = small_chain_inputs
    F = oracle.time_resolved_f(params, V, phi, grid, 0.0).F_values
    np.testing.assert_allclose(F[1, 1], F[0, 0], atol=1e-14)
    np.testing.assert_allclose(F[0, 1], F[0, 0], atol=1e-14)
    assert F[0, 0, 1].real == pytest.approx(ch.overlap_plus_in_minus(1, 0.8), abs=1e-14)


def test_stationary_tensor_matches_the_closed_form(small_chain_inputs):
    params, V, phi, grid = small_chain_inputs
    t_stat = ch.stationarity_time(params.L, V.b, phi.c)
    record = oracle.time_resolved_f(params, V, phi, grid, t_stat)
    assert record.stationary
    assert record.F_values[1, 1, 0].real == pytest.approx(ch.overlap_minus_in_plus(1, 0.8, 1.2), abs=1e-10)
    assert abs(record.F_values[0, 1, 0]) == pytest.approx(abs(np.cos(1.2)) ** 3 * record.F_values[0, 0, 0].real, abs=1e-10)


def test_default_microstate_is_the_equal_superposition(small_chain_inputs):
    params, V, phi, grid = small_chain_inputs
    record = oracle.time_resolved_f(params, V, phi, grid, 2.0)
    F = record.F_values
    np.testing.assert_allclose(record.w, 0.5 * (F[0, 0].real + F[1, 1].real), atol=1e-14)
    assert not record.stationary


def test_dense_and_factorized_paths_agree():
    params = ChainParams(L=1, m=0.6, J=0.9)
    V, phi, grid = oracle.default_inputs(params, points=81)
    for t in (0.0, 1.7, 2.5, 4.0):
        factorized = oracle.time_resolved_f(params, V, phi, grid, t).F_values
        dense = oracle.time_resolved_f(params, V, phi, grid, t, dense=True).F_values
        np.testing.assert_allclose(factorized, dense, atol=1e-12)


def test_dense_path_is_capped():
    params = ChainParams(L=4, m=0.6, J=0.9)
    V, phi, grid = oracle.default_inputs(params, points=21)
    with pytest.raises(DimensionError):
        oracle.time_resolved_f(params, V, phi, grid, 1.0, dense=True)


def test_packet_may_not_start_inside_a_potential():
    params = ChainParams(L=1, m=0.6, J=0.9)
    V, phi, grid = oracle.default_inputs(params, d=0.5)
    with pytest.raises(ValidationFailure, match="packet support"):
        oracle.time_resolved_f(params, V, phi, grid, 1.0)


def test_potential_must_integrate_to_the_coupling():
    params = ChainParams(L=1, m=0.6, J=0.9)
    _, phi, grid = oracle.default_inputs(params)
    with pytest.raises(ValidationFailure, match="integrates"):
        oracle.time_resolved_f(params, PotentialSpec.rectangular(-1.0, 0.0, 1.0), phi, grid, 1.0)


def test_grid_must_cover_the_packet():
    params = ChainParams(L=1, m=0.6, J=0.9)
    V, phi, _ = oracle.default_inputs(params)
    with pytest.raises(GridError):
        oracle.time_resolved_f(params, V, phi, GridConfig(x_min=-0.5, x_max=0.0, points=101, dt=0.5), 1.0)


def test_coarse_grid_is_reported():
    params = ChainParams(L=1, m=0.6, J=0.9)
    V, phi, _ = oracle.default_inputs(params)
    with pytest.raises(GridError, match="coarse"):
        oracle.time_resolved_f(params, V, phi, GridConfig(x_min=-1.0, x_max=0.0, points=4, dt=0.5), 1.0)


def test_time_schedule_includes_marks():
    assert oracle.time_schedule(5.0, 2.0, marks=(3.0, 7.0)) == [0.0, 2.0, 3.0, 4.0]


def test_time_series_reaches_stationarity(small_chain_inputs):
    params, V, phi, grid = small_chain_inputs
    t_stat = ch.stationarity_time(params.L, V.b, phi.c)
    tau = ch.critical_time(params.L, V.b, phi.c)
    records = oracle.time_series(params, V, phi, grid, t_stat + 1.0)
    times = [r.t for r in records]
    assert tau in times
    assert times == sorted(times)
    assert all(r.stationary for r in records if r.t >= t_stat)
    assert not any(r.stationary for r in records if r.t < t_stat)


def test_time_series_is_independent_of_thread_count(small_chain_inputs):
    params, V, phi, grid = small_chain_inputs
    psi = MicroState(amplitudes=[0.6, 0.8])
    serial = oracle.time_series(params, V, phi, grid, 5.0, psi=psi)
    pooled = oracle.time_series(params, V, phi, grid, 5.0, psi=psi, threads=3)
    for a, b in zip(serial, pooled, strict=True):
        assert a.t == b.t
        np.testing.assert_array_equal(a.F_values, b.F_values)


def test_time_series_must_reach_stationarity(small_chain_inputs):
    params, V, phi, grid = small_chain_inputs
    with pytest.raises(ValidationFailure, match="stationarity"):
        oracle.time_series(params, V, phi, grid, 1.0)


# ---------- generic framework oracle ----------

def test_random_cells_partition_the_identity(rng):
    cells = oracle.random_cells(7, 3, rng)
    np.testing.assert_allclose(sum(c.entries for c in cells), np.eye(7), atol=1e-12)
    assert sum(c.rank for c in cells) == 7


def test_random_density_rank(rng):
    rho = oracle.random_density(5, rng, rank=2)
    assert np.trace(rho.entries).real == pytest.approx(1.0)
    assert np.linalg.matrix_rank(rho.entries, tol=1e-10) == 2


def test_dense_composite_agrees_with_the_f_tensor(small_instance, rng):
    sys, inst, omega, psi = small_instance
    A = oracle.random_hermitian(2, rng)
    for t in (0.0, 0.4, 3.0):
        report = oracle.dense_composite_check(sys, inst, omega, psi, t, A)
        assert report.composite_dim == 12
        assert report.max_deviation < 1e-11


def test_oracle_checks_pass_on_a_small_run():
    checks = oracle.run_oracle_checks(L_max=3, instances=4, seed=7)
    assert [c.name for c in checks] == list(oracle.DEFAULT_CHECK_TOLERANCES)
    failed = [(c.name, c.max_deviation) for c in checks if not c.passed]
    assert not failed


def test_impossible_tolerance_fails_some_check():
    checks = oracle.run_oracle_checks(L_max=2, instances=2, tol=1e-20)
    assert not all(c.passed for c in checks)


def test_oracle_checks_are_capped():
    with pytest.raises(DimensionError):
        oracle.run_oracle_checks(L_max=13)
