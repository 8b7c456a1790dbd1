"""End-to-end tests of the command-line interface."""

import json

import numpy as np
import pytest

from regretlab.cli import main
from regretlab.sequences import gen_gaussian, save_csv


def test_bounds_prints_optimized_value(capsys):
    assert main(["bounds", "--d", "2", "--T", "1000", "--B", "1",
                 "--optimized"]) == 0
    out = capsys.readouterr().out
    assert "14.4332" in out


def test_bounds_with_lambda(capsys):
    assert main(["bounds", "--d", "2", "--T", "1000", "--B", "1",
                 "--lam", "1.0"]) == 0
    out = capsys.readouterr().out
    assert "adapted 1001.3863" in out
    assert "minimax_reference" in out


def test_unknown_flag_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["bounds", "--nope"])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err.lower()


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_version_reports_backend(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    assert "regretlab 0.1.0" in out
    assert "backend" in out


def test_lowerbound_invalid_alpha_fails_cleanly(capsys):
    code = main(["lowerbound", "--d", "1", "--T", "10", "--alpha", "2",
                 "--trials", "30"])
    assert code == 1
    assert "alpha" in capsys.readouterr().err


def test_run_generated_sequence(tmp_path, capsys):
    out = tmp_path / "report.json"
    code = main(["run", "--gen", "gaussian", "--d", "2", "--T", "200",
                 "--seed", "3", "--forecaster", "zeroreg",
                 "--output", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["schema"] == "regretlab/report/v1"
    report = payload["reports"][0]
    assert report["all_pass"]
    assert report["verdicts"]["zeroreg_exact"]
    assert len(report["rounds"]) == 200
    assert report["config"]["source"]["seed"] == 3
    assert "pass" in capsys.readouterr().out


def test_run_multiple_forecasters(tmp_path):
    out = tmp_path / "report.json"
    code = main(["run", "--d", "2", "--T", "100", "--forecaster", "zeroreg",
                 "--forecaster", "vaw", "--lam", "1.0",
                 "--output", str(out), "--no-rounds"])
    assert code == 0
    payload = json.loads(out.read_text())
    assert [r["forecaster"]["kind"] for r in payload["reports"]] == ["zeroreg", "vaw"]
    assert all("rounds" not in r for r in payload["reports"])


def test_run_from_csv(tmp_path):
    seq = gen_gaussian(2, 50, seed=4)
    src = tmp_path / "seq.csv"
    save_csv(seq, src)
    out = tmp_path / "report.json"
    assert main(["run", "--csv", str(src), "--forecaster", "zeroreg",
                 "--output", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["reports"][0]["T"] == 50


def test_run_csv_report_format(tmp_path):
    out = tmp_path / "report.csv"
    assert main(["run", "--d", "1", "--T", "10", "--forecaster", "zeroreg",
                 "--output", str(out), "--format", "csv"]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "x1,y,yhat,loss"
    assert len(lines) == 11


def test_run_b_violation_fails_cleanly(capsys):
    code = main(["run", "--d", "2", "--T", "50", "--forecaster", "zeroreg",
                 "--B", "1e-9"])
    assert code == 1
    assert "refusing to clip" in capsys.readouterr().err


def test_run_vaw_requires_lambda():
    with pytest.raises(SystemExit):
        main(["run", "--d", "2", "--T", "10", "--forecaster", "vaw"])


def test_verify_fast_exits_zero(capsys):
    assert main(["verify", "--fast"]) == 0
    out = capsys.readouterr().out
    assert "[ok]" in out
    assert "FAIL" not in out


def test_lowerbound_subcommand(tmp_path, capsys):
    out = tmp_path / "lb.json"
    code = main(["lowerbound", "--d", "1", "--T", "15", "--alpha", "3",
                 "--trials", "60", "--seed", "5", "--forecaster", "vaw",
                 "--lam", "1.0", "--regret", "--output", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["holds"]
    assert len(payload["per_round_risk"]) == 15
    assert payload["regret_experiment"]["holds"]
    assert "holds" in capsys.readouterr().out


def test_bench_smoke(capsys):
    assert main(["bench", "--repeat", "1"]) == 0
    out = capsys.readouterr().out
    assert "vaw_run" in out


def test_run_decaying_generator_with_mm(tmp_path):
    out = tmp_path / "mm.json"
    code = main(["run", "--gen", "decaying", "--d", "2", "--T", "30",
                 "--forecaster", "mm", "--B", "1", "--output", str(out)])
    assert code == 0
    report = json.loads(out.read_text())["reports"][0]
    assert report["mm_condition"]["ok"]
    assert report["verdicts"]["mm_conditional"]


class TestExperimentConfig:
    def test_requires_forecaster(self):
        from regretlab.cli import ExperimentConfig
        with pytest.raises(ValueError, match="at least one"):
            ExperimentConfig(forecasters=(), source={"csv": "x.csv"})

    def test_rejects_unknown_format(self):
        from regretlab import ExperimentConfig, ForecasterSpec
        with pytest.raises(ValueError, match="format"):
            ExperimentConfig(forecasters=(ForecasterSpec.zeroreg(),),
                             source={"csv": "x.csv"}, format="xml")

    def test_loads_generator_sequence(self):
        from regretlab import ExperimentConfig, ForecasterSpec
        config = ExperimentConfig(
            forecasters=(ForecasterSpec.zeroreg(),),
            source={"generator": "gaussian", "d": 2, "T": 10, "scale": 1.0},
            seed=5)
        seq = config.load_sequence()
        assert seq.T == 10 and seq.d == 2
        np.testing.assert_array_equal(seq.xs, gen_gaussian(2, 10, seed=5).xs)
