import csv
import json
import math

import pytest

from eaco import cli
from eaco.cli import ConfigError, load_config, main, parameter_sweep, run_experiment


def write(path, text):
    path.write_text(text)
    return str(path)


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_two_node_tsp_single_rep(tmp_path):
    graph = write(tmp_path / "two.txt", "2 2\n0 0 0\n1 3 4\n")
    cfg_path = write(tmp_path / "c.ini", f"[problem]\nfile = {graph}\n[experiment]\nmax_iterations = 5\n")
    out = tmp_path / "out"
    assert main(["tsp", "--config", cfg_path, "--out", str(out)]) == 0
    rows = read_rows(out / "report.csv")
    assert len(rows) == 1
    assert rows[0]["success_rate"] == "1" and rows[0]["runs"] == "1"
    assert (out / "run_eaco_0.csv").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["runs"][0]["oracle"] == 10.0


def test_every_reported_run_has_its_csv(tmp_path):
    cfg = load_config("tsp")
    cfg.problem["nodes"] = 6
    cfg.reps, cfg.max_iterations, cfg.algos = 3, 20, ["eaco", "aco", "sa"]
    run_experiment(cfg, tmp_path)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert len(summary["runs"]) == 9
    assert all((tmp_path / r["csv"]).exists() for r in summary["runs"])
    assert all("wall_time" in r for r in summary["runs"])
    assert "wall" not in (tmp_path / "report.csv").read_text()


def test_compare_is_byte_identical(tmp_path):
    cfg_path = write(tmp_path / "c.ini", "[problem]\nkind = bench\nid = g3\n"
                     "[experiment]\nreps = 2\nmax_iterations = 15\n")
    for name in ("a", "b"):
        assert main(["compare", "--config", cfg_path, "--out", str(tmp_path / name),
                     "--algo", "eaco,ga,sa,pso"]) == 0
    files = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    assert len(files) == 9
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_six_significant_digits(tmp_path):
    cfg = load_config("bench")
    cfg.problem["id"] = "g3"
    cfg.max_iterations = 3
    run_experiment(cfg, tmp_path)
    row = (tmp_path / "run_eaco_0.csv").read_text().splitlines()[1].split(",")
    for cell in row[1:]:
        digits = cell.lstrip("-").split("e")[0].replace(".", "").lstrip("0")
        assert len(digits) <= 6


def test_censored_median(tmp_path):
    cfg = load_config("bench")
    cfg.problem["id"] = "g1"
    cfg.max_iterations, cfg.reps, cfg.algos = 2, 1, ["sa"]
    run_experiment(cfg, tmp_path)
    row = read_rows(tmp_path / "report.csv")[0]
    assert row["successes"] == "0" and row["median_iterations"] == "inf"
    assert row["mean_iterations"] == "nan"


@pytest.mark.parametrize("text,where", [
    ("[bogus]\nx = 1\n", ":1"),
    ("[eaco]\nq0 = 0.5\nwhat = 3\n", ":3"),
    ("[experiment]\nreps = many\n", ":2"),
    ("[experiment]\n\nalgo = eaco\nreps = 1\n[problem]\nlevels = x\n", ":6"),
])
def test_config_errors_carry_line(tmp_path, text, where):
    path = write(tmp_path / "bad.ini", text)
    with pytest.raises(ConfigError, match=where):
        load_config("bench", path)


def test_config_error_exit_code(tmp_path, capsys):
    path = write(tmp_path / "bad.ini", "[eaco]\nq0 = 3\n")
    assert main(["bench", "--config", path]) == 2
    assert main(["bench", "--config", str(tmp_path / "missing.ini")]) == 2
    assert main(["tsp", "--algo", "ga"]) == 2
    assert main(["bench", "--reps", "0"]) == 2
    assert "config error" in capsys.readouterr().err


def test_infeasible_environment_exit_code(tmp_path):
    env = write(tmp_path / "env.txt", "box 0 0 10 10\nstart 1 1\ngoal 9 9\n"
                "poly 4 -1 6 -1 6 11 4 11\n")
    cfg_path = write(tmp_path / "c.ini", f"[problem]\nfile = {env}\n")
    assert main(["path", "--config", cfg_path, "--out", str(tmp_path / "o")]) == 3


def test_runtime_failure_exit_code(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("broken run")

    monkeypatch.setattr(cli, "run_one", boom)
    assert main(["tsp", "--out", str(tmp_path)]) == 4


def test_path_run(tmp_path):
    # the environment file is resolved relative to the config
    write(tmp_path / "env.txt", "box 0 0 8 8\nstart 1 1\ngoal 7 7\npoly 3 3 5 3 5 5 3 5\n")
    cfg_path = write(tmp_path / "c.ini", "[problem]\nfile = env.txt\n[experiment]\nmax_iterations = 30\n")
    assert main(["path", "--config", cfg_path, "--out", str(tmp_path / "o")]) == 0
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    run = summary["runs"][0]
    assert run["collision_free"] and run["best"] >= run["oracle"] - 1e-9


def test_gait_run_exports(tmp_path):
    cfg_path = write(tmp_path / "c.ini", "[problem]\nduration = 2\n[experiment]\nmax_iterations = 2\n"
                     "[eaco]\nm_ants = 4\n")
    assert main(["gait", "--config", cfg_path, "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "gait_eaco_0.csv").exists()
    assert (tmp_path / "o" / "gait_eaco_0.json").exists()


def test_sweep_single_cell_matches_experiment(tmp_path):
    cfg = load_config("bench")
    cfg.problem["id"] = "g3"
    cfg.max_iterations, cfg.reps = 5, 2
    cfg.out = tmp_path / "sweep"
    rows = parameter_sweep(cfg, [{"q0": 0.4}])
    plain = load_config("bench")
    plain.problem["id"] = "g3"
    plain.max_iterations, plain.reps = 5, 2
    plain.overrides["eaco"] = {"q0": 0.4}
    run_experiment(plain, tmp_path / "plain")
    for name in ("report.csv", "run_eaco_0.csv", "run_eaco_1.csv"):
        assert (tmp_path / "sweep" / "cell_0" / name).read_bytes() == (tmp_path / "plain" / name).read_bytes()
    assert len(rows) == 1


def test_sweep_sorted_by_mean_iterations(tmp_path):
    cfg = load_config("sweep", write(tmp_path / "s.ini", "[problem]\nkind = tsp\nnodes = 6\n"
                                     "[experiment]\nreps = 2\nmax_iterations = 60\n"
                                     "[sweep]\nq0 = 0.0, 0.9\nm_ants = 2, 10\n"))
    cfg.out = tmp_path / "o"
    assert len(cfg.grid) == 4
    parameter_sweep(cfg)
    rows = read_rows(tmp_path / "o" / "sweep.csv")
    means = [float(r["mean_iterations"]) for r in rows]
    finite = [m for m in means if not math.isnan(m)]
    assert finite == sorted(finite)
    assert means[:len(finite)] == finite


def test_default_sweep_grid_has_five_rows():
    cfg = load_config("sweep")
    assert [c["q0"] for c in cfg.grid] == [0.2, 0.4, 0.6, 0.8, 0.9]


def test_empty_grid_rejected():
    with pytest.raises(ConfigError):
        parameter_sweep(load_config("bench"), [])
