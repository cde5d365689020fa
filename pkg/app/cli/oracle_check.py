# app/cli/oracle_check.py

import click

from app.cli.common import common_options, handle_errors, load_run_config, write_csv
from app.core.errors import CheckFailure
from app.core.oracle import run_oracle_checks

HEADER = ["check", "max_deviation", "tolerance", "cases", "passed"]


@click.command("oracle-check")
@click.option("--L-max", "oracle_L_max", type=int, default=None, help="Largest L enumerated.")
@click.option("--instances", "oracle_instances", type=int, default=None, help="Random framework instances.")
@click.option("--tol", "tol_check", type=float, default=None, help="One tolerance for every check.")
@common_options
@handle_errors
def cmd_oracle_check(config_path, out, threads, seed, **flags):
    """Brute force against closed form; exit 1 names the first failing check."""
    config = load_run_config(config_path, threads=threads, seed=seed, **flags)
    checks = run_oracle_checks(
        L_max=config.oracle_L_max,
        instances=config.oracle_instances,
        seed=config.seed,
        tol=config.tol_check,
        threads=config.threads,
    )
    rows = [[c.name, c.max_deviation, c.tolerance, c.cases, c.passed] for c in checks]
    metadata = {"oracle.L_max": config.oracle_L_max, "oracle.instances": config.oracle_instances, "seed": config.seed}
    write_csv(out, "oracle-check", metadata, HEADER, rows)

    failed = [c for c in checks if not c.passed]
    if failed:
        first = failed[0]
        raise CheckFailure(first.name, f"max deviation {first.max_deviation:.3e} exceeds {first.tolerance:.1e}")
