import csv
import io
import json
import math

import pytest

from robustcx import __version__
from robustcx.cli import (
    EXIT_CONFIG,
    EXIT_NONCONVERGENCE,
    EXIT_OK,
    EXIT_PRECONDITION,
    list_presets,
    main,
    run,
)
from robustcx.config import resolve

GOLDEN_PRESETS = ["running-example", "cycle-env", "growth-counterexample", "home-bias-sweep", "chamberlain-gap", "ri-2x2"]
SUBCOMMAND_OF = {
    "running-example": "static-value",
    "cycle-env": "simulate",
    "growth-counterexample": "growth-loss",
    "home-bias-sweep": "home-bias",
    "chamberlain-gap": "chamberlain-gap",
    "ri-2x2": "ri-solve",
}


def run_json(tmp_path, *argv, name="out.json"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None)


class TestPresets:
    def test_golden_list(self):
        names = [p["name"] for p in list_presets()]
        assert names == GOLDEN_PRESETS

    def test_presets_command(self, capsys):
        assert main(["presets"]) == EXIT_OK
        cat = json.loads(capsys.readouterr().out)
        assert len(cat) >= 6 and all(c["description"] for c in cat)

    def test_presets_csv(self, capsys):
        assert main(["presets", "--format", "csv"]) == EXIT_OK
        rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
        assert rows[0] == ["name", "description"] and len(rows) == 7

    @pytest.mark.parametrize("preset", GOLDEN_PRESETS)
    def test_each_preset_runs(self, tmp_path, preset):
        code, rep = run_json(tmp_path, SUBCOMMAND_OF[preset], "--preset", preset)
        assert code == EXIT_OK
        assert rep["version"] == __version__
        assert rep["config"]["preset"] == preset and rep["config"]["seed"] == 0
        assert all(rep["checks"].values())

    @pytest.mark.parametrize("preset", ["cycle-env", "ri-2x2", "home-bias-sweep"])
    def test_reproducible(self, tmp_path, preset):
        _, a = run_json(tmp_path, SUBCOMMAND_OF[preset], "--preset", preset, "--seed", "7")
        _, b = run_json(tmp_path, SUBCOMMAND_OF[preset], "--preset", preset, "--seed", "7")
        a.pop("wall_time_s"), b.pop("wall_time_s")
        assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)

    def test_report_to_json_without_time_is_byte_identical(self):
        cfg = resolve({}, kind="simulate", preset="cycle-env", seed=3, horizon=2000)
        assert run(cfg).to_json(include_time=False) == run(cfg).to_json(include_time=False)


class TestReports:
    def test_static_example(self, tmp_path):
        code, rep = run_json(tmp_path, "static-value", "--preset", "running-example")
        assert code == EXIT_OK
        hdr = rep["table"]["header"]
        row = next(r for r in rep["table"]["rows"] if r[0] == 0.0 and r[1] == "r" and r[2] == "qH")
        assert row[hdr.index("p_hat_g")] == pytest.approx(0.462, abs=1e-3)

    def test_growth_counterexample(self, tmp_path):
        code, rep = run_json(tmp_path, "growth-loss", "--preset", "growth-counterexample")
        assert code == EXIT_OK
        assert rep["results"]["alpha_star_0"][0] == pytest.approx(5 / 12, abs=1e-8)
        assert rep["results"]["losses"]["0.0"] == pytest.approx(0.5 * math.log(121 / 72), abs=1e-8)
        assert rep["results"]["regularity_2"]["holds"]

    def test_csv_output(self, tmp_path):
        out = tmp_path / "hb.csv"
        assert main(["home-bias", "--preset", "home-bias-sweep", "--out", str(out)]) == EXIT_OK
        rows = list(csv.reader(out.open()))
        assert rows[0] == ["epsilon", "mu", "premium", "v_d", "v_f"]
        assert len(rows) == 1 + 5 * 6

    def test_yaml_config(self, tmp_path):
        cfg = tmp_path / "c.yaml"
        cfg.write_text("schema_version: 1\nkind: representation-check\nparameters:\n  mu: 0.2\nseed: 1\n")
        code, rep = run_json(tmp_path, "representation-check", "--config", str(cfg))
        assert code == EXIT_OK
        assert rep["config"]["parameters"]["mu"] == 0.2 and rep["results"]["arc_residual"] < 1e-9

    def test_horizon_flag(self, tmp_path):
        code, rep = run_json(tmp_path, "simulate", "--preset", "cycle-env", "--horizon", "500")
        assert code == EXIT_OK and rep["results"]["horizon"] == 500

    def test_equilibrium_default(self, tmp_path):
        code, rep = run_json(tmp_path, "equilibrium")
        assert code == EXIT_OK
        assert any(0 < t["alpha"]["r"] < 1 for t in rep["results"]["triples"])


class TestErrors:
    def test_unknown_key(self, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"kind": "static", "parameters": {"lamda": 1.0}}))
        code, rep = run_json(tmp_path, "static-value", "--config", str(cfg))
        assert code == EXIT_CONFIG and rep is None

    def test_unknown_top_level(self, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"kind": "static", "extra": 1}))
        assert run_json(tmp_path, "static-value", "--config", str(cfg)) == (EXIT_CONFIG, None)

    def test_malformed_file(self, tmp_path):
        cfg = tmp_path / "bad.yaml"
        cfg.write_text("kind: [static\n")
        assert run_json(tmp_path, "static-value", "--config", str(cfg)) == (EXIT_CONFIG, None)

    def test_kind_mismatch(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"kind": "growth"}))
        assert run_json(tmp_path, "static-value", "--config", str(cfg))[0] == EXIT_CONFIG

    def test_preset_kind_mismatch(self, tmp_path):
        assert run_json(tmp_path, "static-value", "--preset", "ri-2x2")[0] == EXIT_CONFIG

    def test_horizon_on_wrong_kind(self, tmp_path):
        assert run_json(tmp_path, "growth-loss", "--horizon", "10")[0] == EXIT_CONFIG

    def test_bad_schema_version(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"schema_version": 2, "kind": "static"}))
        assert run_json(tmp_path, "static-value", "--config", str(cfg))[0] == EXIT_CONFIG

    def test_precondition(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"kind": "representation-check", "parameters": {"mu": 1.5}}))
        assert run_json(tmp_path, "representation-check", "--config", str(cfg)) == (EXIT_PRECONDITION, None)

    def test_non_convergence(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"kind": "ri", "parameters": {"max_iters": 2}}))
        assert run_json(tmp_path, "ri-solve", "--config", str(cfg)) == (EXIT_NONCONVERGENCE, None)

    def test_existing_output_untouched_on_failure(self, tmp_path):
        out = tmp_path / "keep.json"
        out.write_text("previous")
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"kind": "ri", "parameters": {"max_iters": 2}}))
        assert main(["ri-solve", "--config", str(cfg), "--out", str(out)]) == EXIT_NONCONVERGENCE
        assert out.read_text() == "previous"
