import csv
import json

import pytest

from dosom.experiments import EXPERIMENTS, ConfigError, ExperimentConfig, ResultRow, run_experiment, write_outputs
from dosom.experiments.cli import main
from dosom.experiments.config import CSV_COLUMNS, cell_seed, configs_from_dict, resolve_out, rows_to_csv

SMALL = {
    "E-LATTICE-LIP": {"cases": [{"d": 1, "L": 40}, {"d": 2, "L": 5}], "eps": [0.1], "seeds": 2},
    "E-BETHE": {"L": 2, "n_max": 8, "eps": [0.1], "seeds": 1, "family_size": 8, "rank_one_trials": 5, "rank_one_M": 3,
                "rank_one_L": 2},
    "E-IODS": {"L": 60, "eps": [0.1, 0.03, 0.01], "E_points": 9, "seeds": 1},
    "E-WEAK": {"cases": [{"d": 1, "L": 60}], "seeds": 1, "E_points": 41},
    "E-METRICS": {"pairs": 10, "lp_pairs": 10, "triples": 5},
    "E-HAUSDORFF": {"perturb_trials": 5, "perturb_L": 30, "ks_L": 30, "ks_samples": 3, "example_L": 300,
                    "example_seeds": 3},
    "E-APPA": {"L": [20, 40], "bethe_L": [3, 4], "pieces": 200},
    "E-APB": {"eps": [0.1, 0.02], "lattice_L": 40, "seeds": 1, "bethe_L": 2, "bethe_n_max": 8, "family_size": 8},
}


def test_result_row_pass_flag():
    r = ResultRow.check("E-X", "c", "p", "q", 1.0, 1.0, 0.0)
    assert r.passed and r.asserted
    assert not ResultRow.check("E-X", "c", "p", "q", 1.1, 1.0, 0.05).passed
    rep = ResultRow.report("E-X", "c", "p", "q", 3.0)
    assert not rep.asserted and rep.passed is None
    assert rows_to_csv([r]).splitlines()[0] == ",".join(CSV_COLUMNS)


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig("E-NOPE")
    with pytest.raises(ConfigError):
        ExperimentConfig("E-METRICS", {"bogus": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig("E-METRICS", seed=-1)
    cfg = ExperimentConfig("E-METRICS", {"pairs": 5})
    assert cfg.params["lp_pairs"] == 100 and cfg.params["pairs"] == 5
    assert cfg.config_hash() == ExperimentConfig("E-METRICS", {"pairs": 5}).config_hash()
    assert cfg.config_hash() != ExperimentConfig("E-METRICS", {"pairs": 6}).config_hash()


def test_configs_from_dict():
    cfgs = configs_from_dict({"seed": 3})
    assert [c.experiment for c in cfgs] == list(EXPERIMENTS)
    one = configs_from_dict({"experiment": "E-APPA", "params": {"L": [10, 20]}})
    assert one[0].params["L"] == [10, 20]
    only = configs_from_dict({"experiments": {"E-APPA": {}, "E-METRICS": {}}}, only="E-METRICS")
    assert [c.experiment for c in only] == ["E-METRICS"]


def test_resolve_out(monkeypatch):
    monkeypatch.delenv("DOSOM_OUT", raising=False)
    assert resolve_out(None, None) == "results"
    assert resolve_out(None, "cfg") == "cfg"
    monkeypatch.setenv("DOSOM_OUT", "env")
    assert resolve_out(None, "cfg") == "env"
    assert resolve_out("cli", "cfg") == "cli"


def test_cell_seeds_depend_on_key_and_base():
    assert cell_seed(0, "a") == cell_seed(0, "a")
    assert cell_seed(0, "a") != cell_seed(0, "b")
    assert cell_seed(0, "a") != cell_seed(1, "a")


@pytest.mark.parametrize("exp", EXPERIMENTS)
def test_small_experiment_runs(exp, tmp_path):
    res = run_experiment(ExperimentConfig(exp, SMALL[exp], seed=1))
    assert res.rows
    for r in res.rows:
        if r.asserted:
            assert r.bound is not None
            assert r.passed == (r.measured <= r.bound + r.slack)
    paths = write_outputs(res, str(tmp_path))
    with open(paths["csv"], newline="") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_COLUMNS
    side = json.loads(open(paths["json"]).read())
    assert side["config_hash"] == res.config.config_hash()
    assert side["failed"] == len(res.failed)
    if exp != "E-HAUSDORFF":
        assert not res.failed, [(r.cell, r.quantity, r.measured, r.bound) for r in res.failed]


def test_parallel_and_serial_outputs_identical(tmp_path):
    for threads in (1, 3):
        cfg = ExperimentConfig("E-METRICS", SMALL["E-METRICS"], seed=5, threads=threads)
        write_outputs(run_experiment(cfg), str(tmp_path / f"t{threads}"))
    for name in ("E-METRICS.csv", "E-METRICS.json"):
        assert (tmp_path / "t1" / name).read_bytes() == (tmp_path / "t3" / name).read_bytes()


def test_cli_exit_codes(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"experiment": "E-METRICS", "params": SMALL["E-METRICS"]}))
    assert main(["experiment", "E-METRICS", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "E-METRICS.csv").exists()
    # a bound that cannot hold makes the run fail with exit code 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"experiment": "E-HAUSDORFF", "params": SMALL["E-HAUSDORFF"]}))
    assert main(["experiment", "E-HAUSDORFF", "--config", str(bad), "--out", str(tmp_path / "o")]) == 1
    assert main(["experiment", "E-NOPE"]) == 2
    bogus = tmp_path / "bogus.json"
    bogus.write_text(json.dumps({"experiment": "E-METRICS", "params": {"nope": 1}}))
    assert main(["experiment", "E-METRICS", "--config", str(bogus)]) == 2
    assert main(["experiment", "E-METRICS", "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["experiment", "E-METRICS", "--seed", "-3"]) == 2
    assert main([]) == 2


def test_cli_small_commands(tmp_path, capsys):
    assert main(["ball", "bethe3", "2"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["vertices"] == 10 and out["count_within"] == [1, 4, 10]
    assert main(["ball", "torus", "2"]) == 2
    assert main(["dos", "Z1", "20", "--potential", "zero", "--f", "one"]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == pytest.approx(1.0)
    assert main(["dos", "bethe3", "2", "--backend", "MomentExact", "--n-max", "8", "--potential", "zero",
                 "--f", "one"]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == pytest.approx(1.0)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    a.write_text(json.dumps({"positions": [0.0], "weights": [1.0]}))
    b.write_text(json.dumps({"positions": [1.0], "weights": [1.0]}))
    assert main(["metric", str(a), str(b)]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == pytest.approx(2 / 3)
    assert main(["metric", str(a), str(b), "--metric", "d_krw"]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == pytest.approx(1.0)
