# app/cli/classify.py

import logging

import click

from app.cli.common import common_options, handle_errors, load_run_config, write_csv
from app.core.coleman_hepp import classify_model
from app.models.chain import ChainParams

logger = logging.getLogger(__name__)

HEADER = [
    "verdict",
    "L",
    "N",
    "m",
    "J",
    "overlap_plus_in_minus",
    "overlap_minus_in_plus",
    "log_overlap_plus_in_minus",
    "log_overlap_minus_in_plus",
    "eta",
    "decay_rate",
    "predicted_eta",
    "predicted_eta_per_length",
    "in_proposition_regime",
]


@click.command("classify")
@click.option("--L", "L", type=int, default=None, help="Chain half-length; N = 2L+1 spins.")
@click.option("--m", "m", type=str, default=None, help="Polarization in [-1, 1].")
@click.option("--J", "J", type=str, default=None, help="Coupling in radians; pi/2 is accepted.")
@click.option("--tol-ideal", "tol_ideal", type=float, default=None)
@click.option("--tol-eta", "tol_eta", type=float, default=None)
@common_options
@handle_errors
def cmd_classify(config_path, out, threads, seed, **flags):
    """Closed-form verdict for one chain."""
    config = load_run_config(config_path, threads=threads, seed=seed, **flags)
    params = ChainParams(L=config.L, m=config.m, J=config.J)
    report = classify_model(params, ideal_tol=config.tol_ideal, eta_threshold=config.tol_eta)
    logger.info("classify L=%d m=%g J=%g: %s", params.L, params.m, params.J, report.verdict.value)

    row = [
        report.verdict.value,
        params.L,
        params.N,
        params.m,
        params.J,
        report.overlap_plus_in_minus,
        report.overlap_minus_in_plus,
        report.log_overlap_plus_in_minus,
        report.log_overlap_minus_in_plus,
        report.eta,
        report.decay_rate,
        report.predicted_eta,
        report.predicted_eta_per_length,
        report.in_proposition_regime,
    ]
    metadata = {"tol.ideal": config.tol_ideal, "tol.eta": config.tol_eta}
    if report.diagnostic:
        metadata["diagnostic"] = report.diagnostic
    write_csv(out, "classify", metadata, HEADER, [row])
