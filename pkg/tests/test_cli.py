import csv
import io
import math

import pytest
from click.testing import CliRunner

from app.cli.common import RunConfig, load_run_config, parse_real
from app.core.coleman_hepp import classify_model, decay_rate
from app.core.errors import ValidationFailure
from app.main import cli
from app.models.chain import ChainParams


@pytest.fixture
def runner():
    return CliRunner()


def parse_output(text: str) -> tuple[dict, list[dict]]:
    metadata, body = {}, []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            metadata[key] = value
        elif line:
            body.append(line)
    return metadata, list(csv.DictReader(io.StringIO("\n".join(body))))


def invoke(runner, *args):
    return runner.invoke(cli, [str(a) for a in args])


# ---------- run configuration ----------

@pytest.mark.parametrize(
    "token, expected",
    [("pi", math.pi), ("pi/2", math.pi / 2), ("-pi/4", -math.pi / 4), ("3*pi/4", 3 * math.pi / 4), ("0.25", 0.25)],
)
def test_parse_real(token, expected):
    assert parse_real(token) == pytest.approx(expected, abs=0)


def test_config_file_then_flags(tmp_path):
    path = tmp_path / "run.env"
    path.write_text("L=50\nm=0.9\nJ=pi/2\ngrid.points=101\n")
    config = load_run_config(str(path), m="1")
    assert config.L == 50
    assert config.m == 1.0
    assert config.grid_points == 101
    assert config.J == math.pi / 2


def test_unknown_config_key(tmp_path):
    path = tmp_path / "run.env"
    path.write_text("colour=blue\n")
    with pytest.raises(ValidationFailure, match="colour"):
        load_run_config(str(path))


def test_defaults():
    config = RunConfig()
    assert (config.L, config.m, config.J) == (10, 0.5, math.pi / 2)
    assert config.sweep_lengths()[:3] == [10, 20, 30]
    assert list(config.microstate().probabilities) == pytest.approx([0.36, 0.64])


# ---------- classify ----------

def test_classify_ideal(runner):
    result = invoke(runner, "classify", "--L", 5, "--m", 1, "--J", "pi/2")
    assert result.exit_code == 0, result.output
    metadata, rows = parse_output(result.stdout)
    assert metadata["command"] == "classify"
    assert rows[0]["verdict"] == "Ideal"
    assert float(rows[0]["eta"]) == 0.0


def test_classify_normal_reproduces_the_library(runner):
    result = invoke(runner, "classify", "--L", 50, "--m", 0.9, "--J", "pi/2")
    assert result.exit_code == 0, result.output
    _, rows = parse_output(result.stdout)
    report = classify_model(ChainParams(L=50, m=0.9, J=math.pi / 2))
    assert rows[0]["verdict"] == "Normal"
    assert float(rows[0]["eta"]) == report.eta
    assert float(rows[0]["decay_rate"]) == report.decay_rate
    assert rows[0]["in_proposition_regime"] == "true"


def test_classify_unclassified(runner):
    result = invoke(runner, "classify", "--L", 2, "--m", 0.05, "--J", "pi/4")
    assert result.exit_code == 0, result.output
    metadata, rows = parse_output(result.stdout)
    assert rows[0]["verdict"] == "Unclassified"
    assert "threshold" in metadata["diagnostic"]


def test_classify_reads_a_config_file(runner, tmp_path):
    path = tmp_path / "run.env"
    path.write_text("L=50\nm=0.9\n")
    _, rows = parse_output(invoke(runner, "classify", "--config", path).stdout)
    assert rows[0]["verdict"] == "Normal"
    _, rows = parse_output(invoke(runner, "classify", "--config", path, "--m", 1).stdout)
    assert rows[0]["verdict"] == "Ideal"


@pytest.mark.parametrize("args", [["--m", 1.5], ["--L", -1], ["--J", "half"]])
def test_classify_rejects_invalid_input(runner, args):
    result = invoke(runner, "classify", *args)
    assert result.exit_code == 2
    assert "error" in result.stderr.lower()


def test_classify_writes_to_a_file(runner, tmp_path):
    out = tmp_path / "verdict.csv"
    result = invoke(runner, "classify", "--L", 3, "--out", out)
    assert result.exit_code == 0
    assert result.stdout == ""
    _, rows = parse_output(out.read_text())
    assert rows[0]["L"] == "3"
    assert rows[0]["N"] == "7"


# ---------- sweep ----------

def test_sweep_is_independent_of_thread_count(runner):
    args = ["sweep", "--m", 0.5, "--L-min", 10, "--L-max", 300, "--L-step", 10]
    serial = invoke(runner, *args, "--threads", 1)
    pooled = invoke(runner, *args, "--threads", 4)
    assert serial.exit_code == pooled.exit_code == 0
    assert serial.stdout == pooled.stdout
    _, rows = parse_output(serial.stdout)
    assert [int(r["L"]) for r in rows] == list(range(10, 301, 10))
    assert float(rows[-1]["predicted_rate"]) == -decay_rate(0.5, math.pi / 2)


def test_sweep_without_polarization(runner):
    _, rows = parse_output(invoke(runner, "sweep", "--m", 0, "--L-min", 0, "--L-max", 40).stdout)
    for r in rows:
        assert float(r["overlap_plus_in_minus"]) == pytest.approx(0.5, abs=1e-15)
        assert float(r["overlap_minus_in_plus"]) == pytest.approx(0.5, abs=1e-15)


def test_sweep_of_an_ideal_chain(runner):
    _, rows = parse_output(invoke(runner, "sweep", "--m", 1, "--J", "pi/2", "--L-max", 100).stdout)
    assert all(float(r["overlap_plus_in_minus"]) == 0.0 for r in rows)
    assert all(r["log_overlap_per_N"] == "-inf" for r in rows)
    assert all(r["predicted_rate"] == "-inf" for r in rows)


def test_sweep_range_must_be_ordered(runner):
    assert invoke(runner, "sweep", "--L-min", 50, "--L-max", 10).exit_code == 2


# ---------- time-series ----------

def test_time_series_marks_tau_and_stationarity(runner):
    result = invoke(runner, "time-series", "--L", 1, "--m", 0.8, "--J", 1.2, "--points", 201)
    assert result.exit_code == 0, result.output
    metadata, rows = parse_output(result.stdout)
    tau = float(metadata["tau"])
    assert tau == 4.0
    times = [float(r["t"]) for r in rows]
    assert tau in times
    assert times[-1] == float(metadata["stationarity_time"]) + 1.0
    for row in rows:
        assert row["stationary"] == ("true" if float(row["t"]) >= tau else "false")
        assert float(row["w_plus"]) + float(row["w_minus"]) == pytest.approx(1.0, abs=1e-12)


def test_time_series_reports_stationarity_from_saturation(runner, tmp_path):
    path = tmp_path / "run.env"
    path.write_text("L=1\nm=0.8\nJ=1.2\na=0\nb=0.5\ngrid.points=201\n")
    result = invoke(runner, "time-series", "--config", path)
    assert result.exit_code == 0, result.output
    metadata, rows = parse_output(result.stdout)
    assert float(metadata["tau"]) == 3.5
    assert float(metadata["saturation_time"]) == 4.5
    assert float(metadata["stationary_from"]) == 4.5
    flags = {float(r["t"]): r["stationary"] for r in rows}
    assert flags[3.5] == flags[4.0] == "false"
    assert flags[4.5] == flags[5.5] == "true"


def test_time_series_dense_path_is_capped(runner):
    result = invoke(runner, "time-series", "--L", 4, "--points", 21, "--dense")
    assert result.exit_code == 2
    assert "dense" in result.stderr


def test_time_series_length_cap(runner):
    assert invoke(runner, "time-series", "--L", 8).exit_code == 2


# ---------- oracle-check ----------

def test_oracle_check_passes(runner):
    result = invoke(runner, "oracle-check", "--L-max", 2, "--instances", 2)
    assert result.exit_code == 0, result.output
    _, rows = parse_output(result.stdout)
    assert len(rows) == 7
    assert {r["passed"] for r in rows} == {"true"}


def test_oracle_check_reports_the_failing_check(runner):
    result = invoke(runner, "oracle-check", "--L-max", 1, "--instances", 2, "--tol", 1e-20)
    assert result.exit_code == 1
    _, rows = parse_output(result.stdout)
    first_failed = next(r["check"] for r in rows if r["passed"] == "false")
    assert first_failed in result.stderr


def test_oracle_check_beyond_the_enumeration_cap(runner):
    assert invoke(runner, "oracle-check", "--L-max", 13).exit_code == 2


# ---------- framework-demo ----------

def rows_by_quantity(rows):
    out = {}
    for r in rows:
        out.setdefault(r["quantity"], []).append(r)
    return out


def test_framework_demo_on_the_ideal_chain(runner):
    result = invoke(
        runner, "framework-demo", "--model", "chain", "--L", 2, "--m", 1, "--J", "pi/2",
        "--psi", "0.6,0.8", "--observable", "identity",
    )
    assert result.exit_code == 0, result.output
    metadata, rows = parse_output(result.stdout)
    by_q = rows_by_quantity(rows)
    w = [float(r["value"]) for r in by_q["w"]]
    assert w == pytest.approx([0.36, 0.64], abs=1e-10)
    assert float(by_q["expectation"][0]["value"]) == pytest.approx(1.0, abs=1e-12)
    assert abs(float(by_q["consistency_residual"][0]["value"])) < 1e-10
    assert metadata["verdict"] == "Ideal"


def test_framework_demo_on_a_random_instance(runner):
    result = invoke(
        runner, "framework-demo", "--n", 3, "--dimK", 6, "--seed", 4, "--t", 0.7, "--psi", "0.6,0.8,0",
    )
    assert result.exit_code == 0, result.output
    metadata, rows = parse_output(result.stdout)
    by_q = rows_by_quantity(rows)
    assert metadata["n"] == "3"
    assert sum(float(r["value"]) for r in by_q["w"]) == pytest.approx(1.0, abs=1e-12)
    assert len(by_q["rho_re"]) == 9
    assert abs(float(by_q["consistency_residual"][0]["value"])) < 1e-10


def test_framework_demo_is_reproducible(runner):
    first = invoke(runner, "framework-demo", "--seed", 11)
    second = invoke(runner, "framework-demo", "--seed", 11)
    assert first.stdout == second.stdout


def test_framework_demo_sigma_x_needs_two_levels(runner):
    result = invoke(runner, "framework-demo", "--n", 3, "--psi", "0.6,0.8,0", "--observable", "sigma_x")
    assert result.exit_code == 2
    assert "sigma_x" in result.stderr


def test_framework_demo_rejects_psi_of_the_wrong_size(runner):
    result = invoke(runner, "framework-demo", "--n", 3, "--dimK", 6, "--psi", "0.6,0.8", "--observable", "identity")
    assert result.exit_code == 2
    assert "amplitudes" in result.stderr
    assert result.stdout == ""
