"""Command-line driver: exit codes, file outputs, reproducibility."""

import math
import os

import pytest

from slitsim.cli import main
from slitsim.csvio import read_histogram, read_interference, read_windows

FAST_CFG = """\
seed = 42
n_samples = 60
coarse_n = 360
refine_tol = 1e-4
kappa = 0.0
"""


@pytest.fixture()
def fast_cfg(tmp_path):
    p = tmp_path / "fast.cfg"
    p.write_text(FAST_CFG)
    return str(p)


def run_cli(*argv):
    return main([str(a) for a in argv])


class TestCalibrateCommand:
    def test_writes_windows_csv(self, fast_cfg, tmp_path, capsys):
        out = tmp_path / "w1.csv"
        rc = run_cli("calibrate", "--config", fast_cfg, "--experiment", 1,
                     "--out", out, "--workers", 1)
        assert rc == 0
        w = read_windows(str(out))
        assert len(w.windows) == 1
        assert "total_measure" in capsys.readouterr().out

    def test_invalid_experiment_is_usage_error(self, fast_cfg, tmp_path):
        with pytest.raises(SystemExit) as exc:
            run_cli("calibrate", "--config", fast_cfg, "--experiment", 4,
                    "--out", tmp_path / "w.csv")
        assert exc.value.code == 1

    def test_no_windows_is_calibration_failure(self, tmp_path):
        # Slits beyond escape reach: barrier too strong to transmit.
        cfg = tmp_path / "blocked.cfg"
        cfg.write_text("seed = 1\ncoarse_n = 360\nkappa = 0.02\nrefine_tol=1e-4\n")
        rc = run_cli("calibrate", "--config", cfg, "--experiment", 1,
                     "--out", tmp_path / "w.csv", "--workers", 2)
        assert rc == 2

    def test_config_error_exit(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("no_such_key = 1\nseed = 2\n")
        rc = run_cli("calibrate", "--config", cfg, "--experiment", 1,
                     "--out", tmp_path / "w.csv")
        assert rc == 1

    def test_missing_seed_exit(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("kappa = 0.0\n")
        rc = run_cli("calibrate", "--config", cfg, "--experiment", 1,
                     "--out", tmp_path / "w.csv")
        assert rc == 1


class TestRunCommand:
    def test_run_all_produces_three_histograms_and_manifest(self, fast_cfg, tmp_path):
        out = tmp_path / "run"
        rc = run_cli("run", "--config", fast_cfg, "--experiment", "all",
                     "--calibrate", "--out", out, "--workers", 1)
        assert rc == 0
        for e in (1, 2, 3):
            data = read_histogram(str(out / f"hist_{e}.csv"))
            assert data.n_hit > 0
        manifest = (out / "manifest.txt").read_text()
        assert "config_hash=" in manifest
        assert "exp2.mirrored_from=1" in manifest

    def test_single_sample_tallies(self, fast_cfg, tmp_path):
        out = tmp_path / "one"
        rc = run_cli("run", "--config", fast_cfg, "--experiment", "1",
                     "--calibrate", "--samples", 1, "--out", out, "--workers", 1)
        assert rc == 0
        manifest = dict(
            line.split("=", 1)
            for line in (out / "manifest.txt").read_text().splitlines()
        )
        total = sum(int(manifest[f"exp1.{k}"]) for k in
                    ("n_hit", "n_blocked", "n_escaped", "n_timeout", "n_aborted"))
        assert total == 1

    def test_byte_identical_reruns(self, fast_cfg, tmp_path):
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        for out, workers in ((out1, 1), (out2, 2)):
            rc = run_cli("run", "--config", fast_cfg, "--experiment", "all",
                         "--calibrate", "--out", out, "--workers", workers)
            assert rc == 0
        for e in (1, 2, 3):
            a = (out1 / f"hist_{e}.csv").read_bytes()
            b = (out2 / f"hist_{e}.csv").read_bytes()
            assert a == b

    def test_windows_from_directory(self, fast_cfg, tmp_path):
        pre = tmp_path / "pre"
        rc = run_cli("run", "--config", fast_cfg, "--experiment", "all",
                     "--calibrate", "--out", pre, "--workers", 1)
        assert rc == 0
        out = tmp_path / "reuse"
        rc = run_cli("run", "--config", fast_cfg, "--experiment", "all",
                     "--windows", pre, "--out", out, "--workers", 1)
        assert rc == 0
        assert (out / "hist_1.csv").read_bytes() == (pre / "hist_1.csv").read_bytes()

    def test_missing_windows_is_config_error(self, fast_cfg, tmp_path):
        rc = run_cli("run", "--config", fast_cfg, "--experiment", "1",
                     "--out", tmp_path / "x", "--workers", 1)
        assert rc == 1


class TestAnalyzeCommand:
    @pytest.fixture()
    def run_dir(self, fast_cfg, tmp_path):
        out = tmp_path / "run"
        assert run_cli("run", "--config", fast_cfg, "--experiment", "all",
                       "--calibrate", "--out", out, "--workers", 1) == 0
        return out

    def test_analyze_outputs(self, run_dir, tmp_path):
        out = tmp_path / "interference.csv"
        rc = run_cli("analyze", "--p1", run_dir / "hist_1.csv",
                     "--p2", run_dir / "hist_2.csv",
                     "--p12", run_dir / "hist_3.csv", "--out", out)
        assert rc == 0
        prof = read_interference(str(out))
        assert len(prof.y_mid) == 102
        summary = (tmp_path / "interference.summary.txt").read_text()
        assert "cells_beyond_5se=" in summary

    def test_mixture_inputs_give_zero_cos_theta(self, run_dir, tmp_path):
        # p12 := exact mixture of p1 and p2 built from their own files.
        from slitsim.analysis import classical_mixture
        from slitsim.csvio import read_histogram as rh
        d1 = rh(str(run_dir / "hist_1.csv"))
        d2 = rh(str(run_dir / "hist_2.csv"))
        mix_path = tmp_path / "hist_mix.csv"
        lines = ["# config_hash=test seed=42",
                 "cell_index,y_lo,y_hi,count,probability"]
        for k, (lo, hi) in enumerate(zip(d1.y_lo, d1.y_hi)):
            c = d1.counts[k] + d2.counts[k]
            p = (d1.p[k] + d2.p[k]) / 2.0
            lines.append(f"{k},{lo!r},{hi!r},{c},{p!r}")
        mix_path.write_text("\n".join(lines) + "\n")
        out = tmp_path / "interf.csv"
        rc = run_cli("analyze", "--p1", run_dir / "hist_1.csv",
                     "--p2", run_dir / "hist_2.csv", "--p12", mix_path,
                     "--out", out)
        assert rc == 0
        prof = read_interference(str(out))
        for ct, d in zip(prof.cos_theta, prof.defined):
            if d:
                assert ct == 0.0

    def test_grid_mismatch_exit_code(self, run_dir, tmp_path):
        short = tmp_path / "short.csv"
        lines = (run_dir / "hist_1.csv").read_text().splitlines()
        short.write_text("\n".join(lines[:-10]) + "\n")
        rc = run_cli("analyze", "--p1", short, "--p2", run_dir / "hist_2.csv",
                     "--p12", run_dir / "hist_3.csv", "--out", tmp_path / "i.csv")
        assert rc == 3

    def test_bad_input_file(self, run_dir, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("not,a,histogram\n")
        rc = run_cli("analyze", "--p1", bad, "--p2", run_dir / "hist_2.csv",
                     "--p12", run_dir / "hist_3.csv", "--out", tmp_path / "i.csv")
        assert rc == 1


class TestTraceCommand:
    def test_trace_writes_path(self, fast_cfg, tmp_path, capsys):
        out = tmp_path / "trace.csv"
        alpha = math.atan2(0.6, 10.0)  # default slit spans y in (0.1, 1.1)
        rc = run_cli("trace", "--config", fast_cfg, "--experiment", 1,
                     "--alpha", alpha, "--out", out)
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[1] == "t,x,y,vx,vy"
        assert len(lines) > 100
        assert "hit_s2" in capsys.readouterr().out

    def test_env_override_applies(self, fast_cfg, tmp_path, monkeypatch):
        monkeypatch.setenv("SLITSIM_T_MAX", "0.5")
        out = tmp_path / "trace.csv"
        rc = run_cli("trace", "--config", fast_cfg, "--experiment", 1,
                     "--alpha", 0.15, "--out", out)
        assert rc == 0
        lines = [ln for ln in out.read_text().splitlines()[2:]]
        last_t = float(lines[-1].split(",")[0])
        assert last_t <= 0.55  # clipped by the overridden time budget
