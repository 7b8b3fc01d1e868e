import json

import pytest

from skymec.cli import EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE, main
from skymec.scenario import load, save

from conftest import make_scenario, make_uav, make_user


def test_help_exits_zero(capsys):
    assert main(["--help"]) == EXIT_OK
    assert "experiment" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [[], ["fly"], ["solve", "--users", "x"], ["baseline", "--scheme", "random"],
                                  ["experiment", "--users", "a,b"]])
def test_usage_errors(argv):
    assert main(argv) == EXIT_USAGE


def test_generate_round_trip(tmp_path, capsys):
    assert main(["generate", "--uavs", "2", "--users", "4", "--seed", "3", "--out", str(tmp_path)]) == EXIT_OK
    sc = load(tmp_path / "scenario.json")
    assert sc.num_uavs == 2 and sc.num_users == 4 and sc.rng_seed == 3
    assert main(["generate", "--uavs", "2", "--users", "4"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out.split("\n", 1)[1])["uavs"]


def test_solve_writes_report(tmp_path, capsys):
    assert main(["solve", "--uavs", "2", "--users", "4", "--out", str(tmp_path)]) == EXIT_OK
    rep = json.loads((tmp_path / "report.json").read_text())
    assert len(rep["alpha"]) == 4
    assert main(["solve", "--uavs", "2", "--users", "4", "--seed", "1", "--out", str(tmp_path)]) == EXIT_OK
    assert len((tmp_path / "results.csv").read_text().splitlines()) == 3
    assert "average latency" in capsys.readouterr().out


def test_missing_scenario_file(tmp_path):
    assert main(["solve", "--scenario", str(tmp_path / "nope.json")]) == EXIT_USAGE


def test_infeasible_exit(tmp_path, capsys):
    sc = make_scenario([make_user(0, 0), make_user(1, 0, E=1e-12)], [make_uav(0)])
    path = tmp_path / "bad.json"
    save(sc, path)
    assert main(["solve", "--scenario", str(path)]) == EXIT_INFEASIBLE
    assert "utod" in capsys.readouterr().err


@pytest.mark.parametrize("scheme", ["greedy", "exhaustive", "centralized", "non_collaboration", "uniform",
                                    "proportional"])
def test_baseline_verb(tmp_path, scheme):
    argv = ["baseline", "--scheme", scheme, "--uavs", "2", "--users", "4", "--out", str(tmp_path)]
    assert main(argv) == EXIT_OK
    assert json.loads((tmp_path / "baseline.json").read_text())["scheme"] == scheme


def test_baseline_own_bcd(tmp_path):
    argv = ["baseline", "--scheme", "greedy", "--own-bcd", "--uavs", "2", "--users", "4", "--out", str(tmp_path)]
    assert main(argv) == EXIT_OK


def test_experiment_then_compare(tmp_path, capsys):
    argv = ["experiment", "--users", "4", "--uavs", "2", "--rho", "10", "--repeats", "1", "--out", str(tmp_path)]
    assert main(argv) == EXIT_OK
    assert (tmp_path / "fixed_instance.csv").exists()
    assert main(["compare", "--out", str(tmp_path)]) == EXIT_OK
    assert "greedy_gap" in capsys.readouterr().out


def test_compare_without_results(tmp_path):
    assert main(["compare", "--out", str(tmp_path)]) == EXIT_USAGE


def test_experiment_rejects_unknown_scheme(tmp_path):
    assert main(["experiment", "--scheme", "proposed,bogus", "--out", str(tmp_path)]) == EXIT_USAGE
