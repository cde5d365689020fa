import logging

import click

from app import __version__
from app.core.config import settings
from app.cli.classify import cmd_classify
from app.cli.sweep import cmd_sweep
from app.cli.time_series import cmd_time_series
from app.cli.oracle_check import cmd_oracle_check
from app.cli.framework_demo import cmd_framework_demo


@click.group(name="measure")
@click.version_option(__version__)
def cli():
    """Measurement-model simulator: generic F-tensor engine and the finite Coleman-Hepp chain."""
    logging.basicConfig(
        level=settings.LOG_LEVEL,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


cli.add_command(cmd_classify)
cli.add_command(cmd_sweep)
cli.add_command(cmd_time_series)
cli.add_command(cmd_oracle_check)
cli.add_command(cmd_framework_demo)


if __name__ == "__main__":
    cli()
