# app/cli/framework_demo.py

import logging

import click
import numpy as np

from app.cli.common import common_options, handle_errors, load_run_config, write_csv
from app.core.coleman_hepp import chain_instrument
from app.core.errors import UndefinedConditionalError, ValidationFailure
from app.core.framework import (
    classify,
    conditional_expectation,
    consistency_residual,
    expectation,
    f_tensor,
    pointer_probabilities,
    reduced_state_matrix,
)
from app.core.linalg import SIGMA_X
from app.core.oracle import random_hermitian, random_instance
from app.models.chain import ChainParams

logger = logging.getLogger(__name__)

HEADER = ["quantity", "i", "j", "value"]


def build_model(config, rng: np.random.Generator):
    if config.framework_model == "chain":
        sys, inst, omega = chain_instrument(ChainParams(L=config.L, m=config.m, J=config.J))
        t = 1.0
    else:
        sys, inst, omega, _ = random_instance(config.framework_n, config.framework_dimK, rng)
        t = config.framework_t
    psi = config.microstate()
    if psi.n != sys.n:
        raise ValidationFailure(f"psi has {psi.n} amplitudes, the microsystem has {sys.n} levels")
    return sys, inst, omega, psi, t


def build_observable(kind: str, n: int, rng: np.random.Generator) -> np.ndarray:
    if kind == "identity":
        return np.eye(n, dtype=np.complex128)
    if kind == "sigma_x":
        if n != 2:
            raise ValidationFailure(f"sigma_x needs a two-level microsystem, got n={n}")
        return SIGMA_X.copy()
    return random_hermitian(n, rng).entries


@click.command("framework-demo")
@click.option("--model", "framework_model", type=click.Choice(["random", "chain"]), default=None)
@click.option("--observable", "framework_observable", type=click.Choice(["identity", "random", "sigma_x"]), default=None)
@click.option("--n", "framework_n", type=int, default=None, help="Levels of a random microsystem.")
@click.option("--dimK", "framework_dimK", type=int, default=None, help="Dimension of a random instrument.")
@click.option("--t", "framework_t", type=str, default=None, help="Evolution time of a random instance.")
@click.option("--psi", "psi", type=str, default=None, help="Comma-separated amplitudes, e.g. 0.6,0.8.")
@click.option("--L", "L", type=int, default=None, help="Chain half-length for --model chain (at most 5).")
@click.option("--m", "m", type=str, default=None)
@click.option("--J", "J", type=str, default=None)
@common_options
@handle_errors
def cmd_framework_demo(config_path, out, threads, seed, **flags):
    """Expectation, pointer probabilities, conditionals and reduced state of one instance."""
    config = load_run_config(config_path, threads=threads, seed=seed, **flags)
    rng = np.random.default_rng(config.seed)
    sys, inst, omega, psi, t = build_model(config, rng)
    a = build_observable(config.framework_observable, sys.n, rng)

    F = f_tensor(inst, sys, omega, t)
    w = pointer_probabilities(F, psi)
    rows = [["expectation", "", "", expectation(F, psi, a)]]
    rows += [["w", alpha, "", float(w[alpha])] for alpha in range(F.n_cells)]
    for alpha in range(F.n_cells):
        try:
            value = conditional_expectation(F, psi, a, alpha)
        except UndefinedConditionalError as exc:
            logger.info("%s", exc.detail)
            value = float("nan")
        rows.append(["conditional", alpha, "", value])
    rho = reduced_state_matrix(F, psi)
    for r in range(F.n):
        for s in range(F.n):
            rows.append(["rho_re", r, s, float(rho[r, s].real)])
            rows.append(["rho_im", r, s, float(rho[r, s].imag)])
    rows.append(["consistency_residual", "", "", consistency_residual(F, psi, a)])

    report = classify(F)
    metadata = {
        "framework.model": config.framework_model,
        "framework.observable": config.framework_observable,
        "n": sys.n,
        "dimK": inst.dimK,
        "t": t,
        "seed": config.seed,
        "verdict": report.verdict.value,
        "eta": report.eta,
    }
    write_csv(out, "framework-demo", metadata, HEADER, rows)
