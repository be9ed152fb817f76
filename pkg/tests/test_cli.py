"""Command-line runner: exit codes, determinism, manifest, built-ins."""

import json
import subprocess
import sys
from pathlib import Path

from evikit.cli import list_builtins, run

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def invoke(args, cwd):
    return subprocess.run([sys.executable, "-m", "evikit.cli", *args],
                          capture_output=True, text=True, cwd=cwd)


class TestListBuiltins:
    def test_contains_all_names(self, capsys):
        assert list_builtins() == 0
        out = capsys.readouterr().out
        for name in ("cir", "ou", "allen_cahn", "wasserstein1d",
                     "entropy", "power", "quadratic",
                     "affine_clipped", "constant", "gaussian_bump"):
            assert name in out

    def test_stable_ordering(self, capsys):
        list_builtins()
        first = capsys.readouterr().out
        list_builtins()
        second = capsys.readouterr().out
        assert first == second


class TestRunConfigs:
    def write_config(self, tmp_path, payload):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(payload))
        return str(path)

    def base_config(self, tmp_path, **overrides):
        cfg = {
            "space": {"space": "ou", "params": {"kappa": 1.0}},
            "kind": "evi",
            "params": {"x0": [1.0], "T": 0.2, "dt": 0.001, "tol": 0.01,
                       "probes": [[0.5], [-0.5]]},
            "output_dir": str(tmp_path / "out"),
            "seed": 0,
        }
        cfg.update(overrides)
        return cfg

    def test_successful_run_writes_manifest(self, tmp_path):
        cfg = self.base_config(tmp_path)
        assert run(self.write_config(tmp_path, cfg)) == 0
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["summary"]["passed"] is True
        assert manifest["config"]["kind"] == "evi"
        assert "evikit" in manifest["versions"]
        assert (tmp_path / "out" / "evi_report.json").exists()

    def test_negative_dt_is_config_error(self, tmp_path, capsys):
        cfg = self.base_config(tmp_path)
        cfg["params"]["dt"] = -0.001
        assert run(self.write_config(tmp_path, cfg)) == 2

    def test_missing_field_named_in_message(self, tmp_path, capsys):
        cfg = self.base_config(tmp_path)
        del cfg["params"]["probes"]
        code = run(self.write_config(tmp_path, cfg))
        assert code == 2

    def test_unknown_space_is_config_error(self, tmp_path):
        cfg = self.base_config(tmp_path, space={"space": "nope", "params": {}})
        assert run(self.write_config(tmp_path, cfg)) == 2

    def test_assertion_failure_exit_code(self, tmp_path):
        cfg = self.base_config(tmp_path)
        cfg["params"]["tol"] = 1e-12  # unattainably tight
        assert run(self.write_config(tmp_path, cfg)) == 1

    def test_numerical_failure_exit_code(self, tmp_path):
        cfg = {
            "space": {"space": "cir", "params": {"mu": 1.0, "x_lo": 0.001,
                                                 "x_hi": 8.0}},
            "kind": "resolvent",
            "params": {"lambda": 1.0, "tol": 1e-16,
                       "h": {"name": "affine_clipped",
                             "params": {"slope": 1.0, "intercept": 0.0, "cap": 2.0}},
                       "n_grid": 200},
            "output_dir": str(tmp_path / "out"),
        }
        assert run(self.write_config(tmp_path, cfg)) == 3

    def test_byte_identical_outputs(self, tmp_path):
        cfg = {
            "space": {"space": "cir", "params": {"mu": 1.0, "x_lo": 0.001,
                                                 "x_hi": 8.0}},
            "kind": "resolvent",
            "params": {"lambda": 1.0, "tol": 1e-06,
                       "h": {"name": "affine_clipped",
                             "params": {"slope": 1.0, "intercept": 0.0, "cap": 2.0}},
                       "n_grid": 300},
            "output_dir": str(tmp_path / "out"),
            "seed": 7,
        }
        path = self.write_config(tmp_path, cfg)
        assert run(path) == 0
        first = {p.name: p.read_bytes()
                 for p in (tmp_path / "out").iterdir() if p.name != "manifest.json"}
        assert run(path) == 0
        second = {p.name: p.read_bytes()
                  for p in (tmp_path / "out").iterdir() if p.name != "manifest.json"}
        assert first == second and first

    def test_thread_cap_respected(self, tmp_path, monkeypatch):
        monkeypatch.setenv("EVIKIT_THREADS", "1")
        cfg = {
            "space": {"space": "ou", "params": {"kappa": 1.0}},
            "kind": "tataru",
            "params": {"n_samples": 20, "flow_dt": 0.01, "tol": 0.001,
                       "suites": ["lipschitz", "triangle"]},
            "output_dir": str(tmp_path / "out"),
            "seed": 0,
        }
        assert run(self.write_config(tmp_path, cfg)) == 0


class TestShippedConfigs:
    def test_every_experiment_kind_is_shipped(self):
        kinds = set()
        for path in CONFIGS.glob("*.json"):
            kinds.add(json.loads(path.read_text())["kind"])
        assert {"flow", "evi", "tataru", "resolvent", "viscosity", "comparison",
                "quadruplication", "properties"} <= kinds

    def test_shipped_configs_parse_and_validate(self):
        for path in sorted(CONFIGS.glob("*.json")):
            cfg = json.loads(path.read_text())
            assert "space" in cfg and "kind" in cfg, path.name

    def test_quick_config_runs_from_cli(self, tmp_path):
        res = invoke(["run", str(CONFIGS / "ou_flow_contraction.json")], tmp_path)
        assert res.returncode == 0, res.stderr
        assert "[PASS]" in res.stdout

    def test_cli_usage_error(self, tmp_path):
        res = invoke(["run", str(tmp_path / "missing.json")], tmp_path)
        assert res.returncode == 2
