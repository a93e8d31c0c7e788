import json

import numpy as np
import pytest

from cpls.cli import DEFAULTS, load_config_file, main


def test_benchmark_defaults_pinned():
    assert DEFAULTS["dt"] == 0.02
    assert DEFAULTS["n_steps"] == 500
    assert DEFAULTS["drop"] == 20
    assert DEFAULTS["sigma"] == 1.5
    assert DEFAULTS["sigma_y"] == 2.0
    assert DEFAULTS["kappa"] == 8.0
    assert DEFAULTS["cutoff"] == 1e14
    assert DEFAULTS["basis_phi"] == DEFAULTS["basis_psi"] == "hermite"
    assert DEFAULTS["max_m1"] == DEFAULTS["max_m2"] == 25

FAST = [
    "--n-steps", "60", "--dt", "0.05", "--drop", "3",
    "--max-m1", "3", "--max-m2", "3",
]


def run_cli(args):
    return main(args)


class TestExperimentCommand:
    def test_writes_summary_and_reps(self, tmp_path, capsys):
        code = run_cli([
            "experiment", "--model", "2", "--y", "A", "--n", "8", "--reps", "2",
            "--seed", "7", "--out", str(tmp_path), *FAST,
        ])
        assert code == 0
        summary = (tmp_path / "experiment_summary.csv").read_text().splitlines()
        header = summary[0].split(",")
        assert header[0] == "function"
        # four MSE columns and two dimension columns per function row
        assert sum("mse" in h for h in header) == 4
        assert sum(h.startswith("dim") for h in header) == 2
        assert [row.split(",")[0] for row in summary[1:]] == ["a", "b"]
        reps = (tmp_path / "experiment_reps.csv").read_text().splitlines()
        assert len(reps) == 3  # header + 2 repetitions
        meta = json.loads((tmp_path / "experiment_meta.json").read_text())
        assert meta["settings"]["seed"] == 7
        assert len(meta["rep_seeds"]) == 2
        out = capsys.readouterr().out
        assert "repetitions" in out

    def test_byte_identical_reruns(self, tmp_path):
        args = [
            "experiment", "--model", "3", "--y", "B", "--n", "8", "--reps", "2",
            "--seed", "3", *FAST,
        ]
        run_cli(args + ["--out", str(tmp_path / "one")])
        run_cli(args + ["--out", str(tmp_path / "two")])
        for name in ("experiment_summary.csv", "experiment_reps.csv"):
            assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()

    def test_curves_flag_writes_beams(self, tmp_path):
        code = run_cli([
            "experiment", "--model", "3", "--y", "B", "--n", "8", "--reps", "3",
            "--seed", "1", "--curves", "2", "--out", str(tmp_path), *FAST,
        ])
        assert code == 0
        header = (tmp_path / "beam_a.csv").read_text().splitlines()[0]
        assert header.split(",") == ["x", "truth", "rep_1", "rep_2"]
        assert (tmp_path / "beam_b.csv").exists()


class TestFitCommand:
    def test_fit_outputs(self, tmp_path, capsys):
        code = run_cli([
            "fit", "--model", "2", "--y", "B", "--n", "10", "--seed", "2",
            "--out", str(tmp_path), "--dump-design", *FAST,
        ])
        assert code == 0
        assert "selected dims" in capsys.readouterr().out
        coeffs = (tmp_path / "fit_coefficients.csv").read_text().splitlines()
        assert coeffs[0] == "component,basis_index,value"
        table = (tmp_path / "fit_criterion_table.csv").read_text().splitlines()
        assert table[0] == "m1,m2,gamma,pen,admissible,criterion"
        assert len(table) == 1 + 9  # 3 x 3 scan
        gram = np.loadtxt(tmp_path / "fit_gram.csv", delimiter=",")
        meta = json.loads((tmp_path / "fit_meta.json").read_text())
        chosen = meta["chosen"]
        assert gram.shape == (sum(chosen), sum(chosen))


class TestTable1Command:
    def test_grid_layout(self, tmp_path):
        code = run_cli([
            "table1", "--reps", "1", "--seed", "1", "--out", str(tmp_path),
            "--n-steps", "40", "--dt", "0.05", "--drop", "2",
            "--max-m1", "2", "--max-m2", "2",
        ])
        assert code == 0
        rows = (tmp_path / "table1.csv").read_text().splitlines()
        assert len(rows) == 13  # header + 12 combinations
        header = rows[0].split(",")
        assert header[:3] == ["model", "y", "n_paths"]

    def test_table1_uses_default_n_grid(self, tmp_path):
        # the benchmark grid always covers N in {400, 1000}; with tiny reps we
        # only check the row keys, not the statistics
        code = run_cli([
            "table1", "--reps", "1", "--seed", "1", "--out", str(tmp_path),
            "--n-steps", "30", "--dt", "0.05", "--drop", "2",
            "--max-m1", "2", "--max-m2", "2",
        ])
        assert code == 0
        rows = [r.split(",")[:3] for r in (tmp_path / "table1.csv").read_text().splitlines()[1:]]
        assert rows == [
            [m, y, n] for m in ("1", "2", "3") for y in ("A", "B") for n in ("400", "1000")
        ]


class TestBasesCheck:
    def test_hermite_passes(self, capsys):
        code = run_cli(["bases-check", "--basis", "hermite", "--m", "20"])
        assert code == 0
        out = capsys.readouterr().out
        assert "residual" in out

    def test_unknown_basis_exits_2(self):
        with pytest.raises(SystemExit) as err:
            run_cli(["bases-check", "--basis", "wavelet", "--m", "5"])
        assert err.value.code == 2


class TestConfigHandling:
    def test_bad_arguments_exit_2(self):
        with pytest.raises(SystemExit) as err:
            run_cli(["experiment", "--model", "9"])
        assert err.value.code == 2

    def test_runtime_failure_exits_1(self, tmp_path, capsys):
        # reps larger than zero but invalid sample size triggers a runtime error
        code = run_cli([
            "experiment", "--model", "2", "--y", "A", "--n", "0", "--reps", "1",
            "--seed", "1", "--out", str(tmp_path), *FAST,
        ])
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_config_file_precedence(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# comment\nmodel = 3\nseed = 11\nkappa = 4.0\n")
        parsed = load_config_file(str(cfg))
        assert parsed == {"model": 3, "seed": 11, "kappa": 4.0}
        out = tmp_path / "out"
        code = run_cli([
            "experiment", "--config", str(cfg), "--y", "B", "--n", "8", "--reps", "1",
            "--seed", "5", "--out", str(out), *FAST,
        ])
        assert code == 0
        meta = json.loads((out / "experiment_meta.json").read_text())
        assert meta["settings"]["model"] == 3  # from file
        assert meta["settings"]["seed"] == 5  # flag overrides file

    def test_env_var_output_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("CPLS_OUTPUT_DIR", str(tmp_path / "envout"))
        code = run_cli([
            "experiment", "--model", "3", "--y", "B", "--n", "8", "--reps", "1",
            "--seed", "5", *FAST,
        ])
        assert code == 0
        assert (tmp_path / "envout" / "experiment_summary.csv").exists()
