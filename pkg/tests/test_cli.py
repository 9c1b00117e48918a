"""Command-line interface: artifacts, config precedence, exit codes."""

import json

import pytest

from biobstacle import cli
from biobstacle.errors import AssertionFailure, ConfigError, NoConvergence


def _run(tmp_path, *argv):
    out = tmp_path / "reports"
    code = cli.main([*argv, "--out", str(out)])
    return code, out


def test_solve_writes_report_and_csv(tmp_path):
    code, out = _run(tmp_path, "solve", "--grid", "6", "--dim", "1")
    assert code == 0
    report = json.loads((out / "solve_report.json").read_text())
    assert report["schema"] == "biobstacle-report/1"
    assert report["experiment"] == "solve"
    assert report["parameters"] == {"grid": 6, "dim": 1, "method": "pdas"}
    lines = (out / "solve_solution.csv").read_text().splitlines()
    assert lines[0] == "node,x,y,xi,flag"
    assert len(lines) == 1 + 6


def test_solve_2d_has_both_coordinate_columns(tmp_path):
    code, out = _run(tmp_path, "solve", "--grid", "5", "--dim", "2")
    assert code == 0
    header = (out / "solve_solution.csv").read_text().splitlines()[0]
    assert header == "node,x,y_coord,y,xi,flag"


def test_derivative_mosco_control_smoke(tmp_path):
    code, out = _run(tmp_path, "derivative", "--grid", "12")
    assert code == 0
    report = json.loads((out / "derivative_report.json").read_text())
    assert report["cone_vs_reduced_agreement"] <= 1e-9
    header = (out / "derivative_eta.csv").read_text().splitlines()[0]
    assert header == "node,x,y_coord,eta,in_D"

    code, out = _run(tmp_path / "m", "mosco", "--grid", "10",
                     "--schedule", "2:16")
    assert code == 0
    report = json.loads((out / "mosco_report.json").read_text())
    assert report["parameters"]["schedule"] == [2, 4, 8, 16]
    assert report["errors_nonincreasing_tail"] is True
    header = (out / "mosco_errors.csv").read_text().splitlines()[0]
    assert header == "n,error,state_gap,dim_D,sandwich_ok"

    code, out = _run(tmp_path / "c", "control", "--grid", "10",
                     "--steps", "5")
    assert code == 0
    report = json.loads((out / "control_report.json").read_text())
    assert report["strictly_decreasing"] is True
    lines = (out / "control_trace.csv").read_text().splitlines()
    assert lines[0] == "iter,objective,step,grad_norm,side"
    assert len(lines) == 1 + 5


def test_counterexample_small_run(tmp_path):
    code, out = _run(tmp_path, "counterexample", "--K", "1500")
    assert code == 0
    report = json.loads((out / "counterexample_report.json").read_text())
    assert report["experiment"] == "counterexample"
    assert report["bounded"]["partial_sums_within_bound"] is True
    assert all(entry["ok"] for entry in report["h1_checks"].values())
    header = (out / "counterexample_series.csv").read_text().splitlines()[0]
    assert header == "K,S_K_bounded,S_K_unbounded,lower_bound_partial_sum,ln_K"


def test_reruns_are_byte_identical(tmp_path):
    _, first = _run(tmp_path / "a", "solve", "--grid", "6", "--dim", "1")
    _, second = _run(tmp_path / "b", "solve", "--grid", "6", "--dim", "1")
    for name in ("solve_report.json", "solve_solution.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_seed_changes_the_instance(tmp_path):
    _, first = _run(tmp_path / "a", "solve", "--grid", "6", "--dim", "1")
    _, second = _run(tmp_path / "b", "solve", "--grid", "6", "--dim", "1",
                     "--seed", "9")
    assert (first / "solve_solution.csv").read_bytes() != \
        (second / "solve_solution.csv").read_bytes()


def test_flag_beats_config_beats_default(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"grid": 5, "dim": 1, "seed": 3}))
    code, out = _run(tmp_path, "solve", "--config", str(config),
                     "--grid", "6")
    assert code == 0
    report = json.loads((out / "solve_report.json").read_text())
    assert report["parameters"]["grid"] == 6  # flag wins
    assert report["parameters"]["dim"] == 1  # config beats default
    assert report["seed"] == 3
    assert report["parameters"]["method"] == "pdas"  # default survives


@pytest.mark.parametrize("argv", [
    ["counterexample", "--beta", "0.6"],
    ["counterexample", "--omega-exponent", "0.4"],
    ["mosco", "--grid", "10", "--schedule", "backwards"],
    ["mosco", "--grid", "10", "--schedule", "8:2"],
    ["solve", "--grid", "1", "--dim", "1"],
])
def test_bad_settings_exit_with_code_two(tmp_path, argv, capsys):
    code, _ = _run(tmp_path, *argv)
    assert code == 2
    assert "configuration error" in capsys.readouterr().err


def test_bad_config_files_exit_with_code_two(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    code, _ = _run(tmp_path, "solve", "--config", str(missing))
    assert code == 2

    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    code, _ = _run(tmp_path, "solve", "--config", str(broken))
    assert code == 2

    listy = tmp_path / "list.json"
    listy.write_text("[1, 2]")
    code, _ = _run(tmp_path, "solve", "--config", str(listy))
    assert code == 2
    assert "configuration error" in capsys.readouterr().err


def test_config_error_from_config_file_value(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"method": "bogus", "grid": 5, "dim": 1}))
    code, _ = _run(tmp_path, "solve", "--config", str(config))
    assert code == 2


def test_assertion_failures_exit_with_code_one(tmp_path, monkeypatch, capsys):
    def failing(args):
        raise AssertionFailure("forced failure for the exit-code contract")

    monkeypatch.setitem(cli.RUNNERS, "solve", failing)
    code, _ = _run(tmp_path, "solve")
    assert code == 1
    assert "assertion failed" in capsys.readouterr().err


def test_runtime_errors_exit_with_code_one(tmp_path, monkeypatch, capsys):
    def stuck(args):
        raise NoConvergence("psor", 17, 0.5)

    monkeypatch.setitem(cli.RUNNERS, "solve", stuck)
    code, _ = _run(tmp_path, "solve")
    assert code == 1
    assert "run failed" in capsys.readouterr().err


def test_parse_schedule():
    assert cli._parse_schedule("2:256") == (2, 4, 8, 16, 32, 64, 128, 256)
    assert cli._parse_schedule("3:20") == (3, 6, 12)
    assert cli._parse_schedule("5:5") == (5,)
    for text in ("abc", "4", "0:8", "8:2", "2:256:3"):
        with pytest.raises(ConfigError):
            cli._parse_schedule(text)
