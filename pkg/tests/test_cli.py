import json

import numpy as np
import pytest

from viriallab import cli


def quick_scenario(tmp_path, name="quick", lam=1.0, T=0.05, model=None):
    sc = {
        "name": name,
        "model": model or {"variant": "free"},
        "initial_data": {"kind": "scaled_soliton", "lam": lam, "omega": 1.0},
        "grid": {"kind": "line", "L": 16.0, "N": 1024},
        "solver": {
            "dt_init": 1e-3, "dt_max": 1e-3, "phase_tol": 1e-3,
            "T_end": T, "snapshot_stride": 10,
        },
        "analysis": {"R": 8.0},
    }
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(sc))
    return path


@pytest.fixture(autouse=True)
def out_root(tmp_path, monkeypatch):
    monkeypatch.setenv("VIRIALLAB_OUT", str(tmp_path / "out"))
    return tmp_path


class TestWeightCheck:
    def test_default_passes(self, capsys):
        assert cli.main(["weight-check", "--samples", "2000"]) == 0
        rep = json.loads(capsys.readouterr().out)
        assert rep["passed"]

    def test_too_few_samples(self):
        assert cli.main(["weight-check", "--samples", "100"]) == 2

    def test_corrupted_profile(self, tmp_path, capsys):
        prof = {
            "s1": 1.0 + 1.0 / np.sqrt(3.0),
            "tail_coeffs": [0, 0, 0, 0, 0, 0],
            "z2": 88.0,
            "z3": 2152.0,
        }
        p = tmp_path / "bad_profile.json"
        p.write_text(json.dumps(prof))
        assert cli.main(["weight-check", "--samples", "2000", "--profile", str(p)]) == 1
        assert "knot_continuity" in capsys.readouterr().err


class TestSimulate:
    def test_quick_run_completes(self, tmp_path):
        p = quick_scenario(tmp_path)
        assert cli.main(["simulate", str(p), "--out", str(tmp_path / "run")]) == 0
        assert (tmp_path / "run" / "series.csv").exists()
        assert (tmp_path / "run" / "summary.json").exists()

    def test_blowup_exit_code(self, tmp_path):
        p = quick_scenario(tmp_path, name="blow", lam=1.3, T=2.0)
        code = cli.main(["simulate", str(p), "--out", str(tmp_path / "blow")])
        assert code == 10

    def test_malformed_json(self, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text("{not json")
        assert cli.main(["simulate", str(p)]) == 2

    def test_missing_field(self, tmp_path):
        p = tmp_path / "incomplete.json"
        p.write_text(json.dumps({"name": "x"}))
        assert cli.main(["simulate", str(p)]) == 2

    def test_bundled_scenarios_roundtrip(self):
        names = [
            "free_soliton", "free_blowup", "free_control", "free_gaussian",
            "invpow_blowup", "invpow_gaussian", "delta_blowup", "delta_gaussian",
            "graph_blowup", "graph_gaussian",
        ]
        for name in names:
            path = cli.bundled_scenario_path(name)
            sc = cli.load_scenario(path)
            again = json.loads(json.dumps(sc))
            assert again == sc


class TestVirialReport:
    def run_quick(self, tmp_path):
        sc = {
            "name": "smooth",
            "model": {"variant": "free"},
            "initial_data": {"kind": "gaussian", "a": 1.0, "sigma": 1.0},
            "grid": {"kind": "line", "L": 20.0, "N": 4096},
            "solver": {
                "dt_init": 1e-3, "dt_max": 1e-3, "phase_tol": 1e6,
                "T_end": 0.05, "snapshot_stride": 10,
            },
            "analysis": {"R": 8.0},
        }
        p = tmp_path / "smooth.json"
        p.write_text(json.dumps(sc))
        out = tmp_path / "smooth_run"
        assert cli.main(["simulate", str(p), "--out", str(out)]) == 0
        return out

    def test_smooth_run_passes(self, tmp_path):
        out = self.run_quick(tmp_path)
        assert cli.main(["virial-report", str(out), "--R", "8.0"]) == 0
        assert (out / "virial_report.csv").exists()
        summary = json.loads((out / "virial_summary.json").read_text())
        assert summary["max_residual"] < 1e-2
        assert summary["violations"] == 0

    def test_bad_R(self, tmp_path):
        out = self.run_quick(tmp_path)
        assert cli.main(["virial-report", str(out), "--R", "-1"]) == 2

    def test_missing_trajectory(self, tmp_path):
        assert cli.main(["virial-report", str(tmp_path / "nothing")]) == 2


class TestBlowupScan:
    def test_invalid_steps(self):
        assert cli.main([
            "blowup-scan", "--lambda-min", "0.9", "--lambda-max", "1.2", "--steps", "1",
        ]) == 2

    def test_invalid_range(self):
        assert cli.main([
            "blowup-scan", "--lambda-min", "1.2", "--lambda-max", "0.9", "--steps", "3",
        ]) == 2

    def test_scan_and_determinism(self, tmp_path):
        args = [
            "blowup-scan", "--lambda-min", "0.9", "--lambda-max", "1.3",
            "--steps", "2", "--T-end", "0.4",
            "--out", str(tmp_path / "scan1.csv"),
        ]
        assert cli.main(args) == 0
        args2 = args[:-1] + [str(tmp_path / "scan2.csv")]
        assert cli.main(args2) == 0
        assert (tmp_path / "scan1.csv").read_bytes() == (tmp_path / "scan2.csv").read_bytes()
        rows = (tmp_path / "scan1.csv").read_text().strip().splitlines()
        assert rows[0] == "lambda,energy,verdict,t_detect"
        lam13 = rows[-1].split(",")
        assert float(lam13[1]) < 0  # negative energy at lambda = 1.3
        assert lam13[2] == "blowup_detected"


class TestGroundState:
    def test_free(self, tmp_path):
        out = tmp_path / "gs"
        assert cli.main(["ground-state", "--model", "free", "--out", str(out)]) == 0
        rec = json.loads((out / "record.json").read_text())
        assert rec["converged"]
        assert rec["mass"] == pytest.approx(np.sqrt(3.0) * np.pi / 2.0, rel=1e-3)

    def test_delta_jump_recorded(self, tmp_path):
        out = tmp_path / "gsd"
        code = cli.main([
            "ground-state", "--model", "delta", "--gamma", "1.0", "--out", str(out),
        ])
        assert code == 0
        rec = json.loads((out / "record.json").read_text())
        assert rec["vertex_jump"] == pytest.approx(rec["gamma_phi0"], rel=0.02)

    def test_zero_tol_rejected(self):
        assert cli.main(["ground-state", "--tol", "0"]) == 2
