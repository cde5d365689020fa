# app/cli/time_series.py

import logging

import click

from app.cli.common import common_options, handle_errors, load_run_config, write_csv
from app.core import oracle
from app.core.coleman_hepp import critical_time, saturation_time, stationarity_time
from app.models.chain import ChainParams, GridConfig, PacketSpec, PotentialSpec

logger = logging.getLogger(__name__)

HEADER = [
    "t",
    "F_pp_plus",
    "F_pp_minus",
    "F_mm_plus",
    "F_mm_minus",
    "F_pm_plus_re",
    "F_pm_plus_im",
    "F_pm_minus_re",
    "F_pm_minus_im",
    "w_plus",
    "w_minus",
    "stationary",
]


def record_row(record) -> list:
    F = record.F_values
    return [
        record.t,
        F[0, 0, 0].real,
        F[0, 0, 1].real,
        F[1, 1, 0].real,
        F[1, 1, 1].real,
        F[0, 1, 0].real,
        F[0, 1, 0].imag,
        F[0, 1, 1].real,
        F[0, 1, 1].imag,
        record.w[0],
        record.w[1],
        record.stationary,
    ]


@click.command("time-series")
@click.option("--L", "L", type=int, default=None, help="Chain half-length; at most 7.")
@click.option("--m", "m", type=str, default=None)
@click.option("--J", "J", type=str, default=None)
@click.option("--t-max", "t_max", type=str, default=None, help="Last sampled time (default: stationarity time + 1).")
@click.option("--points", "grid_points", type=int, default=None, help="Packet and quadrature grid points.")
@click.option("--dt", "grid_dt", type=float, default=None, help="Time step of the schedule.")
@click.option("--dense/--factorized", default=False, help="Build W_x on the full chain space (L <= 3).")
@common_options
@handle_errors
def cmd_time_series(config_path, out, threads, seed, dense, **flags):
    """F-tensor entries and pointer probabilities along the electron's passage."""
    config = load_run_config(config_path, threads=threads, seed=seed, **flags)
    params = ChainParams(L=config.L, m=config.m, J=config.J)
    V = PotentialSpec.rectangular(config.a, config.b, config.J)
    phi = PacketSpec.bump(config.c_supp, config.d, points=config.grid_points)
    grid = GridConfig(x_min=config.c_supp, x_max=config.d, points=config.grid_points, dt=config.grid_dt)

    tau = critical_time(params.L, config.b, config.c_supp)
    t_stat = stationarity_time(params.L, config.b, config.c_supp)
    t_max = t_stat + 1.0 if config.t_max is None else config.t_max
    records = oracle.time_series(
        params,
        V,
        phi,
        grid,
        t_max,
        psi=config.microstate(),
        dense=dense,
        threads=config.threads,
        stat_tol=config.tol_stat,
    )
    metadata = {
        "L": params.L,
        "m": params.m,
        "J": params.J,
        "a": config.a,
        "b": config.b,
        "c_supp": config.c_supp,
        "d": config.d,
        "grid.points": config.grid_points,
        "grid.dt": config.grid_dt,
        "psi": config.psi,
        "tau": tau,
        "saturation_time": saturation_time(params.L, config.b, config.c_supp),
        "stationarity_time": t_stat,
        "stationary_from": t_stat,
    }
    write_csv(out, "time-series", metadata, HEADER, [record_row(r) for r in records])
