import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from angular_pool import HUB_LEVELS, PiecewiseLinearCdf, SyntheticSpec, generate_synthetic, write_hub_csv
from angular_pool.cli import main
from angular_pool.verify import gaussian_cdf

FAST_CONFIG = {
    "initial_in_sample": 11,
    "methods": ["horizontal_avg", "vertical_avg", "angular_avg", "hv_switch_wtd"],
    "theta_grid": list(range(0, 91, 15)),
    "groups": {"S1": "high", "S2": "high", "S3": "low"},
}


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture
def pair_files(tmp_path):
    paths = []
    for i, mu in enumerate((-0.15, 0.15)):
        p = tmp_path / f"g{i}.json"
        p.write_text(gaussian_cdf(mu, 0.1, HUB_LEVELS).to_json())
        paths.append(p)
    return paths


@pytest.fixture
def fast_config(tmp_path):
    p = tmp_path / "config.json"
    p.write_text(json.dumps(FAST_CONFIG))
    return p


class TestCombine:
    def test_angular_mean(self, capsys, pair_files):
        code, out, _ = run(capsys, "combine", *pair_files, "--direction", "angular", "--theta", 45)
        assert code == 0
        assert abs(PiecewiseLinearCdf.from_json(out).mean) <= 1e-3

    def test_single_horizontal_is_identity(self, capsys, pair_files):
        code, out, _ = run(capsys, "combine", pair_files[0], "--direction", "horizontal")
        assert code == 0
        assert out == pair_files[0].read_text() + "\n"

    def test_invalid_angle(self, capsys, pair_files):
        code, _, err = run(capsys, "combine", *pair_files, "--direction", "angular", "--theta", 120)
        assert code != 0
        assert err.startswith("error[invalid-angle]")
        assert err.count("\n") == 1

    def test_check_exact(self, capsys, pair_files, tmp_path):
        out = tmp_path / "pool.json"
        code, _, err = run(capsys, "combine", *pair_files, "--direction", "angular", "--theta", 30, "--route", "grid", "--check-exact", "--out", out)
        assert code == 0
        gap = float(err.strip().split()[-1])
        assert gap <= 2 / 1001
        assert PiecewiseLinearCdf.from_json(out.read_text()).x.size > 2

    def test_weights_file(self, capsys, pair_files, tmp_path):
        w = tmp_path / "w.json"
        w.write_text(json.dumps({"weights": [0.75, 0.25]}))
        code, out, _ = run(capsys, "combine", *pair_files, "--direction", "vertical", "--weights-file", w)
        assert code == 0
        assert PiecewiseLinearCdf.from_json(out).mean == pytest.approx(-0.075, abs=1e-12)

    def test_quantile_json_input(self, capsys, tmp_path):
        p = tmp_path / "q.json"
        p.write_text(json.dumps({"levels": [0.25, 0.5, 0.75], "quantiles": [1, 2, 3]}))
        code, out, _ = run(capsys, "combine", p)
        assert code == 0
        assert PiecewiseLinearCdf.from_json(out).support == (0.0, 4.0)

    def test_cell_from_fixture(self, capsys):
        code, out, _ = run(capsys, "combine", "--fixture", "--cell", "S1,2020-06-01,1", "--direction", "vertical")
        assert code == 0
        assert PiecewiseLinearCdf.from_json(out).mean > 0

    @pytest.mark.parametrize(
        "argv, code_name",
        [
            (["--direction", "angular"], "invalid-config"),
            (["--direction", "vertical", "--theta", "10"], "invalid-config"),
            (["--direction", "vertical", "--check-exact"], "invalid-config"),
            (["--direction", "diagonal"], "invalid-config"),
        ],
    )
    def test_conflicting_flags(self, capsys, pair_files, argv, code_name):
        code, _, err = run(capsys, "combine", *pair_files, *argv)
        assert code == 2
        assert err.startswith(f"error[{code_name}]")

    def test_unreadable_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "combine", tmp_path / "missing.json")
        assert code == 2
        assert err.startswith("error[io]")

    def test_malformed_json(self, capsys, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{\n  oops")
        code, _, err = run(capsys, "combine", p)
        assert code == 2
        assert err.startswith("error[parse-error]: line 2")


class TestScore:
    def test_metrics(self, capsys, tmp_path):
        p = tmp_path / "u.json"
        p.write_text(PiecewiseLinearCdf.uniform(0, 1).to_json())
        code, out, _ = run(capsys, "score", p, "--obs", 0.5)
        assert code == 0
        scores = {r["metric"]: float(r["value"]) for r in rows(out)}
        assert scores["crps"] == pytest.approx(1 / 12)
        assert scores["coverage_50"] == 1.0

    def test_obs_count(self, capsys, pair_files):
        code, _, err = run(capsys, "score", *pair_files, "--obs", 0.0)
        assert code == 2 and "observation" in err


class TestBacktest:
    def test_deterministic(self, capsys, tmp_path, fast_config):
        outs = []
        for name in ("a", "b"):
            code, _, _ = run(capsys, "backtest", "--fixture", "--floor", "none", "--config", fast_config, "--out-dir", tmp_path / name)
            assert code == 0
            outs.append(((tmp_path / name / "report.csv").read_bytes(), (tmp_path / name / "manifest.json").read_bytes()))
        assert outs[0] == outs[1]
        report = rows(outs[0][0].decode())
        skill = [float(r["value"]) for r in report if r["method"] == "horizontal_avg" and r["metric"] == "skill_mqs"]
        assert skill and all(v == 0.0 for v in skill)
        assert {r["group"] for r in report} == {"all", "high", "low"}
        manifest = json.loads(outs[0][1])
        assert manifest["n_scored_cells"] == 3 * 3 * 4

    def test_bad_config(self, capsys, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"initial_in_sample": 14, "methods": ["nope"]}))
        code, _, err = run(capsys, "backtest", "--fixture", "--config", cfg, "--out-dir", tmp_path / "o")
        assert code == 2
        assert err.startswith("error[invalid-config]")
        assert "initial_in_sample (14)" in err and "unknown method 'nope'" in err

    def test_needs_data(self, capsys, tmp_path):
        code, _, err = run(capsys, "backtest", "--out-dir", tmp_path)
        assert code == 2 and "--forecasts and --truth" in err


class TestOptimize:
    def test_fit_at_origin(self, capsys, fast_config):
        code, out, _ = run(capsys, "optimize", "--fixture", "--config", fast_config, "--origin", "2020-08-17", "--series", "S1", "--method", "angular_avg", "vertical_wtd")
        assert code == 0
        (fit,) = json.loads(out)
        assert fit["params"]["angular_avg"]["theta"] in FAST_CONFIG["theta_grid"]
        assert sum(fit["weights"].values()) == pytest.approx(1.0)

    def test_unknown_origin(self, capsys):
        code, _, err = run(capsys, "optimize", "--fixture", "--origin", "1999-01-01")
        assert code == 2 and "not in the data" in err


class TestVerify:
    def test_mean_suite(self, capsys):
        code, out, _ = run(capsys, "verify", "--suite", "mean", "--trials", 500)
        assert code == 0
        assert out.startswith("mean: PASS")
        assert float(out.split("worst=")[1].split()[0]) <= 1e-9

    def test_even_k_skips_median(self, capsys):
        code, out, _ = run(capsys, "verify", "--suite", "median", "--k", 4)
        assert code == 0
        assert out.strip() == "median: skipped: k must be odd"

    def test_seed_reproducible(self, capsys):
        first = run(capsys, "verify", "--suite", "limits", "--trials", 5, "--seed", 3)[1]
        second = run(capsys, "verify", "--suite", "limits", "--trials", 5, "--seed", 3)[1]
        assert first == second

    def test_bad_trials(self, capsys):
        code, _, err = run(capsys, "verify", "--trials", 0)
        assert code == 2 and err.startswith("error[invalid-config]")


class TestExport:
    def test_theta_sweep(self, capsys, pair_files):
        code, out, _ = run(capsys, "export-plot-data", "--what", "theta-sweep", *pair_files, "--obs", 0.05)
        assert code == 0
        table = rows(out)
        assert len(table) == 91
        assert [int(r["theta"]) for r in table] == list(range(91))
        var = np.array([float(r["variance"]) for r in table])
        assert np.all(np.diff(var) >= -1e-12)
        assert abs(float(table[45]["mean"])) <= 1e-3
        assert all(float(r["mqs"]) >= 0 for r in table)

    def test_cdf_points_on_interpolant(self, capsys, tmp_path):
        F = PiecewiseLinearCdf([0, 1, 3], [0, 0.5, 1])
        p = tmp_path / "f.json"
        p.write_text(F.to_json())
        code, out, _ = run(capsys, "export-plot-data", "--what", "cdf", p, "--points", 31)
        assert code == 0
        table = rows(out)
        assert len(table) == 31
        for r in table:
            assert float(r["cdf"]) == pytest.approx(float(np.interp(float(r["x"]), F.x, F.p)), abs=1e-15)

    def test_pdf_with_jump(self, capsys, tmp_path):
        p = tmp_path / "j.json"
        p.write_text(PiecewiseLinearCdf([0, 0.5, 0.5, 1], [0, 0.25, 0.75, 1]).to_json())
        code, out, _ = run(capsys, "export-plot-data", "--what", "pdf", p, "--points", 11, "--h", 0.01)
        assert code == 0
        table = {float(r["x"]): r for r in rows(out)}
        assert table[0.5]["density"] == "" and "undefined" in table[0.5]["note"]
        assert float(table[0.2]["density"]) == pytest.approx(0.5)

    def test_reliability_calibrated(self, capsys, tmp_path):
        spec = SyntheticSpec(means=(100.0,), sds=(10.0,), truth=(100.0, 10.0), seed=21)
        data = generate_synthetic(spec, n_origins=25, n_horizons=1, n_series=16)
        write_hub_csv(data, tmp_path / "f.csv", tmp_path / "t.csv")
        code, out, _ = run(capsys, "export-plot-data", "--what", "reliability", "--forecasts", tmp_path / "f.csv", "--truth", tmp_path / "t.csv")
        assert code == 0
        n = 25 * 16
        for r in rows(out):
            a, frac = float(r["level"]), float(r["fraction"])
            assert abs(frac - a) <= 3 * math.sqrt(a * (1 - a) / n)

    def test_reliability_unknown_team(self, capsys):
        code, _, err = run(capsys, "export-plot-data", "--what", "reliability", "--fixture", "--team", "nobody")
        assert code == 2 and err.startswith("error[invalid-input]")


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "angular_pool", "verify", "--suite", "median", "--k", "2"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "skipped: k must be odd" in proc.stdout
