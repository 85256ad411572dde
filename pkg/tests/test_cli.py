import json
import subprocess
import sys

import numpy as np
import pytest

from tvgraph.cli import EXIT_CONFIG, EXIT_DATA, EXIT_OK, EXIT_SOLVER, main
from tvgraph.graphs import GraphGeneratorSpec, generate_graph_sequence, is_laplacian, read_matrix_csv, write_matrix_csv
from tvgraph.signals import corrupt, generate_smooth_signals

TINY = {"generator": {"model": "ER", "n_nodes": 6}, "K": 2, "n_samples": 10,
        "sampling_rates": [0.8], "noise_stds": [0.1], "monte_carlo_runs": 2}


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(TINY))
    return p


@pytest.fixture
def csv_inputs(tmp_path):
    Ls = generate_graph_sequence(GraphGeneratorSpec("ER", 6, seed=1), 2)
    paths = []
    for k, L in enumerate(Ls):
        o = corrupt(generate_smooth_signals(L, 12, rng=k), 0.8, 0.1, rng=k)
        o.mask[0, o.mask.sum(0) == 0] = 1.0
        y, m = tmp_path / f"y{k}.csv", tmp_path / f"m{k}.csv"
        write_matrix_csv(y, o.mask * o.observed)
        write_matrix_csv(m, o.mask)
        paths += ["--signal", str(y), "--mask", str(m)]
    return paths


@pytest.mark.parametrize("cmd", ["synth", "baseline", "scaling"])
def test_experiment_commands(cmd, cfg_path, tmp_path):
    out = tmp_path / "out"
    extra = []
    if cmd == "scaling":
        d = json.loads(cfg_path.read_text())
        d.update(monte_carlo_runs=1, scaling={"n_grid": [10, 20], "sr_grid": [0.7, 0.9]})
        cfg_path.write_text(json.dumps(d))
    assert main([cmd, "--config", str(cfg_path), "--out", str(out), *extra]) == EXIT_OK
    rep = json.loads((out / "report.json").read_text())
    assert rep["kind"] == {"synth": "synthetic"}.get(cmd, cmd)
    assert (out / "report.csv").read_text().startswith("method,")


def test_seed_and_workers_flags(cfg_path, tmp_path):
    main(["synth", "--config", str(cfg_path), "--out", str(tmp_path / "a"), "--seed", "4"])
    main(["synth", "--config", str(cfg_path), "--out", str(tmp_path / "b"), "--seed", "4", "--workers", "2"])
    a = (tmp_path / "a" / "report.csv").read_bytes()
    assert a == (tmp_path / "b" / "report.csv").read_bytes()
    assert json.loads((tmp_path / "a" / "report.json").read_text())["config"]["base_seed"] == 4


def test_trace_flag(cfg_path, tmp_path):
    main(["synth", "--config", str(cfg_path), "--out", str(tmp_path / "o"), "--trace", str(tmp_path / "tr")])
    assert len(list((tmp_path / "tr").glob("trace_*.csv"))) == 2


def test_config_error_exit(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"K": 0}')
    assert main(["synth", "--config", str(p), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    p.write_text("{")
    assert main(["synth", "--config", str(p), "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_solve(csv_inputs, tmp_path):
    out = tmp_path / "s"
    trace = tmp_path / "trace.csv"
    rc = main(["solve", *csv_inputs, "--beta", "0.05", "--trace", str(trace), "--out", str(out)])
    assert rc == EXIT_OK
    for k in range(2):
        assert is_laplacian(read_matrix_csv(out / f"laplacian_{k}.csv"))
        assert read_matrix_csv(out / f"signals_{k}.csv").shape == (6, 12)
    summary = json.loads((out / "report.json").read_text())
    assert summary["status"] == "converged"
    assert trace.read_text().startswith("iteration,objective,primal_G,primal_C,dual")


def test_solve_fusion_csv(csv_inputs, tmp_path):
    A = tmp_path / "A.csv"
    A.write_text("1,0\n-1,1\n")
    assert main(["solve", *csv_inputs, "--fusion-csv", str(A), "--out", str(tmp_path / "s")]) == EXIT_OK


def test_solve_data_errors(csv_inputs, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3,x\n")
    assert main(["solve", "--signal", str(bad), "--mask", str(bad), "--out", str(tmp_path / "s")]) == EXIT_DATA
    y, m = tmp_path / "y.csv", tmp_path / "m.csv"
    write_matrix_csv(y, np.ones((3, 2)))
    write_matrix_csv(m, np.array([[1, 0], [1, 0], [1, 0]]))
    # second column never observed
    assert main(["solve", "--signal", str(y), "--mask", str(m), "--out", str(tmp_path / "s")]) == EXIT_DATA


def test_solve_config_error(csv_inputs, tmp_path):
    assert main(["solve", *csv_inputs, "--rho", "-1", "--out", str(tmp_path / "s")]) == EXIT_CONFIG
    assert main(["solve", *csv_inputs[:6], "--out", str(tmp_path / "s")]) == EXIT_CONFIG
    with pytest.raises(SystemExit) as exc:
        main(["solve", *csv_inputs[:2], "--out", str(tmp_path / "s")])
    assert exc.value.code == EXIT_CONFIG


def test_solve_numerical_failure(csv_inputs, tmp_path, monkeypatch):
    from tvgraph import admm
    from tvgraph.errors import NumericalFailure

    def boom(*a, **k):
        raise NumericalFailure("graphs", "forced")

    monkeypatch.setattr("tvgraph.cli.run", boom)
    assert main(["solve", *csv_inputs, "--out", str(tmp_path / "s")]) == EXIT_SOLVER
    assert admm.run is not boom


def test_real_command(tmp_path, cfg_path):
    data = tmp_path / "d.csv"
    rng = np.random.default_rng(0)
    rows = ["a,b,c,d,e,f"] + [",".join(repr(float(v)) for v in r) for r in rng.standard_normal((4, 6))]
    data.write_text("\n".join(rows) + "\n")
    out = tmp_path / "r"
    assert main(["real", "--config", str(cfg_path), "--data", str(data), "--out", str(out)]) == EXIT_OK
    rep = json.loads((out / "report.json").read_text())
    assert rep["segment_sizes"] == [2, 2, 2]
    data.write_text("1,2\n3,?\n")
    assert main(["real", "--config", str(cfg_path), "--data", str(data), "--out", str(out)]) == EXIT_DATA


def test_real_requires_dataset(cfg_path, tmp_path):
    assert main(["real", "--config", str(cfg_path), "--out", str(tmp_path / "r")]) == EXIT_CONFIG


def test_oracle_command(capsys):
    assert main(["oracle", "--instances", "3"]) == EXIT_OK
    assert "PASS signals" in capsys.readouterr().out


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "tvgraph", "synth", "--config", str(tmp_path / "missing.json")],
                       capture_output=True, text=True)
    assert r.returncode == EXIT_CONFIG
    assert "config error" in r.stderr
