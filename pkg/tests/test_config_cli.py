import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from tycsim import cli
from tycsim.config import initial_fields, load_config, parse_config
from tycsim.exceptions import ConfigError, ParameterError
from tycsim.grid import build_grid, write_field_csv
from tycsim.model import Sinusoid

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

MINIMAL = {"params": {"beta": 8.0, "K": 1.0, "d1": 1.0, "d2": 1.0, "d3": 1.0, "d4": 1.0}}


def write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


class TestParse:
    def test_minimal_defaults(self):
        cfg = parse_config(json.dumps(MINIMAL))
        assert cfg.model == "modified" and cfg.stepper == "imex"
        assert cfg.grid.cells == (64,)
        assert cfg.tol == pytest.approx(1e-6)

    def test_negative_beta(self):
        doc = json.loads(json.dumps(MINIMAL))
        doc["params"]["beta"] = -1.0
        with pytest.raises(ParameterError) as exc:
            parse_config(json.dumps(doc))
        assert exc.value.violations[0].field == "beta"

    def test_unknown_key_named(self):
        doc = json.loads(json.dumps(MINIMAL))
        doc["params"]["betta"] = 1.0
        with pytest.raises(ConfigError, match="betta"):
            parse_config(json.dumps(doc))

    def test_unknown_top_level(self):
        with pytest.raises(ConfigError, match="colour"):
            parse_config(json.dumps({**MINIMAL, "colour": "red"}))

    def test_syntax_error_position(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config('{"params":\n  {"beta": ,}}')

    def test_null_optionals(self):
        cfg = parse_config(json.dumps({**MINIMAL, "out": None, "dt": None,
                                       "tolerances": {"convergence_tol": None}}))
        assert cfg.out is None and cfg.dt is None

    def test_missing_params(self):
        with pytest.raises(ConfigError, match="params"):
            parse_config("{}")

    def test_sinusoid_coefficient(self):
        doc = json.loads(json.dumps(MINIMAL))
        doc["params"]["a3"] = {"mean": 1.0, "amplitude": 0.3, "wavenumber": 2}
        cfg = parse_config(json.dumps(doc))
        assert isinstance(cfg.params.a3, Sinusoid)

    def test_constant_ic_above_capacity(self):
        doc = {**MINIMAL, "initial": {"kind": "constant", "values": [0.5, 0.5, 0.5, 1.5]}}
        with pytest.raises(ConfigError):
            parse_config(json.dumps(doc))

    def test_file_ic_relative_path(self, tmp_path):
        grid = build_grid(1, 1.0, 8)
        Z = np.full((4, 8), 0.1)
        write_field_csv(tmp_path / "ic.csv", dict(zip("fmsr", Z)), grid)
        doc = {**MINIMAL, "grid": {"cells": [8]}, "initial": {"kind": "file", "path": "ic.csv"}}
        cfg = load_config(write(tmp_path, doc))
        np.testing.assert_allclose(initial_fields(cfg), Z)

    def test_seeded_random_ic(self):
        doc = {**MINIMAL, "seed": 3}
        a = initial_fields(parse_config(json.dumps(doc)))
        b = initial_fields(parse_config(json.dumps(doc)))
        np.testing.assert_array_equal(a, b)
        assert a.min() >= 0 and a.max() <= 1.0

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.json")

    def test_shipped_configs_parse(self):
        for path in sorted(CONFIGS.glob("*.json")):
            load_config(path)


def run_cli(*argv):
    return cli.main(list(argv) + ["--quiet"])


class TestCLI:
    def test_steady_states(self, tmp_path):
        assert run_cli("steady-states", "--config", str(CONFIGS / "steady_states.json"), "--out", str(tmp_path)) == 0
        report = json.loads((tmp_path / "steady_states.json").read_text())
        assert [b["branch"] for b in report["branches"]] == ["origin", "plus-branch", "minus-branch"]

    def test_simulate_outputs(self, tmp_path):
        cfg = write(tmp_path, {**MINIMAL, "grid": {"cells": [16]}, "t_max": 1.0})
        out = tmp_path / "out"
        assert run_cli("simulate", "--config", str(cfg), "--out", str(out)) == 0
        for name in ("time_series.csv", "final_fields.csv", "summary.json", "time_series.png"):
            assert (out / name).exists()
        header = (out / "time_series.csv").read_text().splitlines()[0]
        assert header.startswith("t,l2_f,l2_m,l2_s,l2_r")

    def test_simulate_deterministic(self, tmp_path):
        cfg = write(tmp_path, {**MINIMAL, "grid": {"cells": [16]}, "t_max": 1.0, "seed": 5})
        for d in ("a", "b"):
            assert run_cli("simulate", "--config", str(cfg), "--out", str(tmp_path / d)) == 0
        for name in ("time_series.csv", "final_fields.csv", "summary.json", "time_series.png"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_seed_override(self, tmp_path):
        cfg = write(tmp_path, {**MINIMAL, "grid": {"cells": [16]}, "t_max": 0.2})
        run_cli("simulate", "--config", str(cfg), "--out", str(tmp_path / "a"), "--seed", "1", "--no-figures")
        run_cli("simulate", "--config", str(cfg), "--out", str(tmp_path / "b"), "--seed", "2", "--no-figures")
        assert (tmp_path / "a" / "final_fields.csv").read_text() != (tmp_path / "b" / "final_fields.csv").read_text()

    def test_env_out_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env"))
        assert run_cli("steady-states", "--config", str(CONFIGS / "steady_states.json")) == 0
        assert (tmp_path / "env" / "steady_states.json").exists()

    def test_config_error_exit_code(self, tmp_path, capsys):
        doc = json.loads(json.dumps(MINIMAL))
        doc["params"]["beta"] = -1.0
        code = run_cli("simulate", "--config", str(write(tmp_path, doc)), "--out", str(tmp_path / "o"))
        assert code == 2
        err = json.loads(capsys.readouterr().err)
        assert err["violations"][0]["field"] == "beta"
        assert (tmp_path / "o" / "error.json").exists()

    def test_invariant_violation_exit_code(self, tmp_path):
        doc = {"params": {**MINIMAL["params"], "beta": 60.0, "D1": 10.0}, "grid": {"cells": [16]},
               "dt": 0.1, "t_max": 1.0}
        code = run_cli("simulate", "--config", str(write(tmp_path, doc)), "--out", str(tmp_path / "o"))
        assert code == 4
        assert json.loads((tmp_path / "o" / "error.json").read_text())["event"]["species"] in "fmsr"

    def test_validate(self, tmp_path, capsys):
        assert cli.main(["validate", "--config", str(CONFIGS / "simulate_extinction.json")]) == 0
        assert json.loads(capsys.readouterr().out)["status"] == "valid"

    def test_bifurcate_without_transition(self, tmp_path):
        doc = {**MINIMAL, "grid": {"cells": [4]}, "t_max": 5.0,
               "sweep": {"beta_min": 1.0, "beta_max": 4.0, "points": 3}}
        assert run_cli("bifurcate", "--config", str(write(tmp_path, doc)), "--out", str(tmp_path),
                       "--no-figures") == 0
        summary = json.loads((tmp_path / "bifurcation.json").read_text())
        assert summary["transition"] is None and "no transition" in summary["note"]
        assert len((tmp_path / "bifurcation.csv").read_text().splitlines()) == 4

    def test_probe(self, tmp_path):
        doc = {**MINIMAL, "grid": {"cells": [8]}, "t_max": 1.0,
               "initial": {"kind": "constant", "values": [0.2, 0.2, 0.05, 0.05]}}
        assert run_cli("probe-dependence", "--config", str(write(tmp_path, doc)), "--out", str(tmp_path)) == 0
        assert json.loads((tmp_path / "probe.json").read_text())["sup_ratio"] == pytest.approx(1.0)
        assert (tmp_path / "probe.png").exists()

    def test_compare_models_outputs(self, tmp_path):
        cfg = tmp_path / "compare.json"
        shutil.copy(CONFIGS / "compare_negative_s.json", cfg)
        assert run_cli("compare-models", "--config", str(cfg), "--out", str(tmp_path / "o")) == 0
        for name in ("compare.json", "time_series_modified.csv", "time_series_original.csv", "compare.png"):
            assert (tmp_path / "o" / name).exists()
