# app/cli/sweep.py

import logging

import click
import numpy as np

from app.cli.common import common_options, handle_errors, load_run_config, write_csv
from app.core.coleman_hepp import decay_rate, log_overlap_minus_in_plus, log_overlap_plus_in_minus
from app.core.parallel import ordered_map
from app.models.chain import ChainParams

logger = logging.getLogger(__name__)

HEADER = [
    "L",
    "N",
    "overlap_plus_in_minus",
    "overlap_minus_in_plus",
    "log_overlap_per_N",
    "predicted_rate",
]


def sweep_row(m: float, J: float, L: int) -> list:
    params = ChainParams(L=L, m=m, J=J)
    log_pm = log_overlap_plus_in_minus(L, m)
    log_mp = log_overlap_minus_in_plus(L, m, J)
    return [
        L,
        params.N,
        float(np.exp(log_pm)),
        float(np.exp(log_mp)),
        max(log_pm, log_mp) / params.N,
        -decay_rate(m, J),
    ]


@click.command("sweep")
@click.option("--m", "m", type=str, default=None, help="Polarization in [-1, 1].")
@click.option("--J", "J", type=str, default=None, help="Coupling in radians; pi/2 is accepted.")
@click.option("--L-min", "sweep_L_min", type=int, default=None)
@click.option("--L-max", "sweep_L_max", type=int, default=None)
@click.option("--L-step", "sweep_L_step", type=int, default=None)
@common_options
@handle_errors
def cmd_sweep(config_path, out, threads, seed, **flags):
    """Overlaps and per-spin log-rate over a range of chain lengths at fixed (m, J)."""
    config = load_run_config(config_path, threads=threads, seed=seed, **flags)
    lengths = config.sweep_lengths()
    rows = ordered_map(lambda L: sweep_row(config.m, config.J, L), lengths, config.threads)
    logger.info("sweep m=%g J=%g over %d lengths", config.m, config.J, len(rows))
    metadata = {
        "m": config.m,
        "J": config.J,
        "sweep.L_min": config.sweep_L_min,
        "sweep.L_max": config.sweep_L_max,
        "sweep.L_step": config.sweep_L_step,
        "decay_rate": decay_rate(config.m, config.J),
    }
    write_csv(out, "sweep", metadata, HEADER, rows)
