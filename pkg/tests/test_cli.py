import json
import math

import pytest

from fraxolve.cli import EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, main
from fraxolve.special import mittag_leffler


PDE_CONFIG = {
    "mesh": {"M": 4, "T": 1.0, "r": 2.0},
    "grid": {"d": 1, "N": 6, "X": "pi"},
    "problem": {
        "alpha": 0.5,
        "f": {"kind": "allen_cahn", "alpha": 0.5},
        "u0": "0.5 * sin(x)",
        "bc": {"all": "dirichlet0"},
    },
}


class TestML:
    def test_value(self, capsys):
        assert main(["ml", "--alpha", "0.5", "--s", "-1.0"]) == EXIT_OK
        out = capsys.readouterr().out.strip()
        assert float(out) == pytest.approx(mittag_leffler(0.5, -1.0), rel=1e-6)
        assert float(out) == pytest.approx(0.4275836, abs=1e-6)


class TestScalar:
    def test_run_and_artifacts(self, tmp_path, capsys):
        code = main(["scalar", "--alpha", "0.5", "--r", "2", "--M", "8",
                     "--f", "allen_cahn", "--u0", "0.4",
                     "--out", str(tmp_path)])
        assert code == EXIT_OK
        csv_text = (tmp_path / "scalar.csv").read_text().strip().split("\n")
        assert csv_text[0] == "m,t,U"
        assert len(csv_text) == 10  # header + M + 1 rows
        manifest = json.loads((tmp_path / "scalar.manifest.json").read_text())
        assert manifest["command"] == "scalar"
        assert manifest["range_ok"] is True
        assert manifest["restriction"]["pass"] is True
        assert len(manifest["config_hash"]) == 16

    def test_solver_failure_exit_code(self, tmp_path):
        # cstar < -kappa_mm makes the per-step map strictly decreasing, so
        # the solver's bracketing search cannot succeed
        import fraxolve.scalar as scalar_mod

        with pytest.warns(scalar_mod.StepRestrictionWarning):
            code = main(["scalar", "--alpha", "0.5", "--M", "4", "--f", "linear",
                         "--cstar", "-50", "--u0", "1.0", "--out", str(tmp_path)])
        assert code == EXIT_SOLVER


class TestPDE:
    def test_run_and_artifacts(self, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps(PDE_CONFIG))
        code = main(["pde", "--config", str(cfg), "--out", str(tmp_path)])
        assert code == EXIT_OK
        lines = (tmp_path / "solution.csv").read_text().strip().split("\n")
        assert lines[0] == "m,t,node,x,y,U"
        assert len(lines) == 1 + 5 * 7  # (M + 1) levels x (N + 1) nodes
        manifest = json.loads((tmp_path / "pde.manifest.json").read_text())
        assert manifest["range_ok"] is True
        assert manifest["newton_iters_max"] >= 1

    def test_config_error_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        doc = dict(PDE_CONFIG)
        doc["meshh"] = {}
        cfg.write_text(json.dumps(doc))
        assert main(["pde", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG
        assert "config error" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path):
        code = main(["pde", "--config", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path)])
        assert code == EXIT_CONFIG

    def test_scalar_config_rejected_by_pde(self, tmp_path, capsys):
        cfg = tmp_path / "scalar.json"
        cfg.write_text(json.dumps({
            "mesh": {"M": 4},
            "problem": {"alpha": 0.5, "f": {"kind": "zero"}, "u0": 0.1},
        }))
        assert main(["pde", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG


class TestStability:
    def test_run(self, tmp_path, capsys):
        code = main(["stability", "--alpha", "0.5", "--lam", "1.0",
                     "--gamma", "-0.5", "--r", "3", "--M", "16",
                     "--out", str(tmp_path)])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert out.startswith("max_ratio")
        manifest = json.loads((tmp_path / "stability.manifest.json").read_text())
        assert manifest["max_ratio"] > 0.0
        assert manifest["gated"] is True
        lines = (tmp_path / "stability.csv").read_text().strip().split("\n")
        assert len(lines) == 17  # header + M rows

    def test_gate_violation_needs_ungated(self, tmp_path, capsys):
        args = ["stability", "--alpha", "0.5", "--lam", "1.0", "--gamma", "0",
                "--r", "1", "--M", "8", "--out", str(tmp_path)]
        assert main(args) == EXIT_SOLVER
        assert main(args + ["--ungated"]) == EXIT_OK


class TestTable:
    def test_custom_tiny_spec(self, tmp_path):
        # the presets are too heavy for unit tests; drive table_run through
        # the same CSV path the command uses
        from fraxolve.harness import TableSpec, rows_to_csv, table_run

        spec = TableSpec(alphas=(0.5,), rs=(2.0,), Ms=(4, 8), n_rule="N=2M",
                         study="time")
        text = rows_to_csv(table_run(spec))
        lines = text.splitlines()
        assert lines[0] == "alpha,r,M,N,study,err,rate"
        assert len(lines) == 3

    def test_bad_preset_rejected(self):
        with pytest.raises(SystemExit):
            main(["table", "--preset", "table9"])


class TestCheck:
    def test_all_invariants_pass(self, capsys):
        assert main(["check"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "FAIL" not in out
        assert out.count("PASS") == 6
