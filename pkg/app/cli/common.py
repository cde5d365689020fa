# app/cli/common.py

import csv
import functools
import logging
import math
import re

import click
import numpy as np
from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from app import __version__
from app.core.config import settings
from app.core.errors import SimulationError, ValidationFailure
from app.models.framework import MicroState

logger = logging.getLogger(__name__)

_PI_TOKEN = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)?)\*?pi(?:/(\d+\.?\d*))?$")


def parse_real(value) -> float:
    """Float, or a multiple of pi written as pi, pi/2, -pi/4, 3*pi/4, 0.5pi."""
    if not isinstance(value, str):
        return value
    token = value.strip().lower().replace(" ", "")
    match = _PI_TOKEN.match(token)
    if match is None:
        return float(token)
    coefficient, divisor = match.groups()
    if coefficient in ("", "+"):
        coefficient = "1"
    elif coefficient == "-":
        coefficient = "-1"
    result = float(coefficient) * math.pi
    return result / float(divisor) if divisor else result


# ---------- Run configuration ----------

class RunConfig(BaseModel):
    """
    Parameters of one CLI run. Field aliases are the keys of the flat
    config file (see config.example.env); flags use the field names.
    """

    model_config = ConfigDict(populate_by_name=True, extra="forbid", frozen=True)

    L: int = Field(10, ge=0)
    m: float = 0.5
    J: float = math.pi / 2
    a: float = -1.0
    b: float = 0.0
    c_supp: float = -1.0
    d: float = 0.0
    grid_points: int = Field(401, alias="grid.points", ge=2)
    grid_dt: float = Field(0.5, alias="grid.dt", gt=0.0)
    tol_ideal: float = Field(settings.IDEAL_TOL, alias="tol.ideal", ge=0.0)
    tol_eta: float = Field(settings.ETA_THRESHOLD, alias="tol.eta", gt=0.0)
    tol_stat: float = Field(settings.STAT_TOL, alias="tol.stat", gt=0.0)
    tol_check: float | None = Field(None, alias="tol.check", gt=0.0)
    sweep_L_min: int = Field(10, alias="sweep.L_min", ge=0)
    sweep_L_max: int = Field(2000, alias="sweep.L_max", ge=0)
    sweep_L_step: int = Field(10, alias="sweep.L_step", ge=1)
    t_max: float | None = None
    psi: str = "0.6,0.8"
    oracle_L_max: int = Field(10, alias="oracle.L_max", ge=0)
    oracle_instances: int = Field(20, alias="oracle.instances", ge=1)
    framework_n: int = Field(2, alias="framework.n", ge=1)
    framework_dimK: int = Field(4, alias="framework.dimK", ge=1)
    framework_t: float = Field(1.0, alias="framework.t", ge=0.0)
    framework_model: str = Field("random", alias="framework.model", pattern="^(random|chain)$")
    framework_observable: str = Field("random", alias="framework.observable", pattern="^(identity|random|sigma_x)$")
    seed: int = 0
    threads: int = Field(1, ge=1)

    @field_validator("m", "J", "a", "b", "c_supp", "d", "t_max", "framework_t", mode="before")
    @classmethod
    def validate_real(cls, v):
        return parse_real(v)

    @field_validator("m")
    @classmethod
    def validate_polarization(cls, v):
        if not -1.0 <= v <= 1.0:
            raise ValueError("m must lie in [-1, 1]")
        return v

    @field_validator("psi")
    @classmethod
    def validate_psi(cls, v):
        amplitudes = np.array([complex(token) for token in v.split(",")])
        norm = float(np.sum(np.abs(amplitudes) ** 2))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"psi amplitudes must be normalized, got sum |c|^2 = {norm:.12g}")
        return v

    def microstate(self) -> MicroState:
        return MicroState.normalized([complex(token) for token in self.psi.split(",")])

    def sweep_lengths(self) -> list[int]:
        if self.sweep_L_max < self.sweep_L_min:
            raise ValidationFailure(f"sweep.L_max={self.sweep_L_max} is below sweep.L_min={self.sweep_L_min}")
        return list(range(self.sweep_L_min, self.sweep_L_max + 1, self.sweep_L_step))


def _key_to_field() -> dict[str, str]:
    return {(info.alias or name): name for name, info in RunConfig.model_fields.items()}


def load_run_config(config_path: str | None = None, **overrides) -> RunConfig:
    """Defaults, then the key = value file, then flags that were actually given."""
    data = {}
    if config_path:
        fields = _key_to_field()
        for key, value in dotenv_values(config_path).items():
            if value is None or value == "":
                continue
            if key not in fields:
                raise ValidationFailure(f"unknown config key '{key}' in {config_path}")
            data[fields[key]] = value
    data.update({name: value for name, value in overrides.items() if value is not None})
    return RunConfig.model_validate(data)


# ---------- CSV output ----------

def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(out: str | None, command: str, metadata: dict, header: list[str], rows) -> None:
    """`#`-prefixed metadata block, then one header row and the data rows."""
    lines = [f"# version: {__version__}", f"# command: {command}"]
    lines += [f"# {key}: {format_value(value)}" for key, value in metadata.items()]

    def emit(stream):
        for line in lines:
            stream.write(line + "\n")
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])

    if out:
        with open(out, "w", newline="", encoding="utf-8") as stream:
            emit(stream)
    else:
        emit(click.get_text_stream("stdout"))


# ---------- Error handling ----------

def _first_error(exc: ValidationError) -> str:
    error = exc.errors()[0]
    location = ".".join(str(part) for part in error.get("loc", ()))
    return f"{location}: {error['msg']}" if location else error["msg"]


def handle_errors(fn):
    """Map library errors onto the exit-code contract: 1 failed check, 2 invalid input."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            return fn(*args, **kwargs)
        except ValidationError as exc:
            click.echo(f"error: {_first_error(exc)}", err=True)
            ctx.exit(ValidationFailure.exit_code)
        except SimulationError as exc:
            click.echo(f"error: {exc.detail}", err=True)
            ctx.exit(exc.exit_code)

    return wrapper


def common_options(fn):
    fn = click.option("--seed", type=int, default=None, help="Seed for randomized inputs.")(fn)
    fn = click.option("--threads", type=int, default=None, help="Worker threads.")(fn)
    fn = click.option("--out", "out", type=click.Path(dir_okay=False), default=None, help="CSV output path (stdout if omitted).")(fn)
    fn = click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None, help="key = value run configuration.")(fn)
    return fn
