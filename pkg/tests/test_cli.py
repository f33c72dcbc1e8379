"""Tests for the command line interface."""

import json

import pandas as pd
import pytest

from calibkit import TOOL_NAME, __version__
from calibkit.cli.main import main
from calibkit.errors import EXIT_DATA, EXIT_OK, EXIT_USAGE
from calibkit.experiments import synthetic
from calibkit.io.manifest import file_sha256


def write_manifest(path, data):
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


@pytest.fixture
def linear_manifest(tmp_path):
    return write_manifest(tmp_path / "linear.json", {"synthetic": "linear", "physical": {"design": {"n": 7}}})


@pytest.fixture
def explicit_manifest(tmp_path):
    """Candidate problem with the physical data in a CSV file"""
    pd.DataFrame({"x": [-1.0, -0.5, 0.0, 0.5, 1.0], "y": [-1.0, -0.5, 0.0, 0.5, 1.0]}).to_csv(
        tmp_path / "physical.csv", index=False)
    return write_manifest(tmp_path / "explicit.json", {
        "name": "explicit-linear",
        "domain": {"lower": [-1.0], "upper": [1.0]},
        "theta": {"candidates": [[0.5], [1.0], [1.5]], "labels": ["low", "exact", "high"]},
        "physical": {"csv": "physical.csv"},
        "simulator": {"type": "cheap", "evaluator": "calibkit.experiments.synthetic:linear_simulator"},
        "kernel": {"family": "gaussian", "phi": 1.0},
    })


class TestParser:
    """Usage errors and global flags."""

    def test_unknown_command(self):
        with pytest.raises(SystemExit) as info:
            main(["bogus"])
        assert info.value.code == EXIT_USAGE

    def test_missing_required_flag(self):
        with pytest.raises(SystemExit) as info:
            main(["calibrate"])
        assert info.value.code == EXIT_USAGE

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["--version"])
        assert info.value.code == 0
        assert capsys.readouterr().out.strip() == f"{TOOL_NAME} {__version__}"


class TestExample1:
    """example1 subcommand."""

    def test_short_run(self, tmp_path):
        out = tmp_path / "out"
        assert main(["-q", "example1", "--sizes", "11,21", "--phi-grid", "1:6:6", "--out", str(out)]) == EXIT_OK
        for name in ("eigen.csv", "pss.csv", "profile.csv", "sweep.csv", "summary.json"):
            assert (out / name).exists()
            assert (out / f"{name}.meta.json").exists()
        assert not (out / "eigenfunctions.csv").exists()
        eigen = pd.read_csv(out / "eigen.csv")
        assert list(eigen.columns) == ["mode", "eigenvalue", "x", "eps1", "eps2", "eps3"]
        assert len(eigen) == 201
        assert eigen["mode"].dropna().tolist() == [1, 2, 3, 4, 5]
        assert eigen["eigenvalue"].dropna().tolist()[:2] == pytest.approx([1.5447, 0.3972], abs=1e-3)
        summary = json.loads((out / "summary.json").read_text())
        assert summary["selections"]["ko"] == "1"
        assert len(pd.read_csv(out / "profile.csv")) == 6


class TestCalibrate:
    """calibrate subcommand."""

    def test_synthetic_manifest(self, linear_manifest, tmp_path):
        out = tmp_path / "out"
        assert main(["-q", "calibrate", "--manifest", str(linear_manifest), "--method", "ko",
                     "--out", str(out)]) == EXIT_OK
        record = json.loads((out / "result.json").read_text())
        assert record["results"]["ko"]["theta_hat"][0] == pytest.approx(1.0, abs=1e-5)
        assert record["manifest_sha256"] == file_sha256(linear_manifest)

    def test_sidecar(self, linear_manifest, tmp_path):
        out = tmp_path / "out"
        main(["-q", "calibrate", "--manifest", str(linear_manifest), "--method", "ols", "--out", str(out)])
        meta = json.loads((out / "result.json.meta.json").read_text())
        assert meta["tool"] == TOOL_NAME
        assert meta["version"] == __version__
        assert meta["file"] == "result.json"
        assert meta["manifest_sha256"] == file_sha256(linear_manifest)

    def test_reruns_are_identical(self, explicit_manifest, tmp_path):
        for name in ("first", "second"):
            assert main(["-q", "calibrate", "--manifest", str(explicit_manifest), "--out",
                         str(tmp_path / name)]) == EXIT_OK
        first = (tmp_path / "first" / "result.json").read_bytes()
        assert first == (tmp_path / "second" / "result.json").read_bytes()

    def test_all_methods_on_candidates(self, explicit_manifest, tmp_path):
        out = tmp_path / "out"
        main(["-q", "calibrate", "--manifest", str(explicit_manifest), "--out", str(out),
              "--phi-grid", "1:2:3"])
        results = json.loads((out / "result.json").read_text())["results"]
        # no exact evaluator, so the projection oracle is skipped
        assert sorted(results) == ["ko", "l2", "modified_ko", "ols", "profile_ko"]
        assert {record["candidate"] for record in results.values()} == {"exact"}

    def test_tabulated_simulator_matches_cheap(self, tmp_path):
        runs = synthetic.simulator_runs_grid(5).points
        outputs = [synthetic.bump_simulator(point[:1].reshape(1, 1), point[1:])[0] for point in runs]
        pd.DataFrame({"x": runs[:, 0], "theta": runs[:, 1], "y": outputs}).to_csv(
            tmp_path / "runs.csv", index=False, float_format="%.17g")
        kernel = {"family": "gaussian", "phi": synthetic.BUMP_SCALE}
        common = {
            "domain": {"lower": [0.0], "upper": [1.0]},
            "theta": {"lower": [1.0], "upper": [2.0]},
            "physical": {"evaluator": "calibkit.experiments.synthetic:bump_physical", "design": {"n": 21}},
            "kernel": kernel,
            "quadrature": {"order": 64},
        }
        simulators = {
            "cheap": {"type": "cheap", "evaluator": "calibkit.experiments.synthetic:bump_simulator"},
            "expensive": {"type": "expensive", "csv": "runs.csv", "kernel": kernel},
        }
        theta = {}
        for name, simulator in simulators.items():
            manifest = write_manifest(tmp_path / f"{name}.json", dict(common, simulator=simulator))
            assert main(["-q", "calibrate", "--manifest", str(manifest), "--method", "l2",
                         "--out", str(tmp_path / name)]) == EXIT_OK
            record = json.loads((tmp_path / name / "result.json").read_text())
            theta[name] = record["results"]["l2"]["theta_hat"][0]
        assert theta["expensive"] == pytest.approx(theta["cheap"], abs=1e-6)

    def test_saved_surrogate_matches_runs_table(self, tmp_path):
        runs = synthetic.simulator_runs_grid(5).points
        outputs = [synthetic.bump_simulator(point[:1].reshape(1, 1), point[1:])[0] for point in runs]
        frame = pd.DataFrame({"x": runs[:, 0], "theta": runs[:, 1], "y": outputs})
        frame.to_csv(tmp_path / "runs.csv", index=False, float_format="%.17g")
        frame.rename(columns={"x": "x1", "theta": "x2"}).to_csv(
            tmp_path / "joined.csv", index=False, float_format="%.17g")
        assert main(["-q", "interp", "--design", str(tmp_path / "joined.csv"), "--kernel", "gaussian",
                     "--phi", str(synthetic.BUMP_SCALE), "--lower=0,1", "--upper=1,2",
                     "--out", str(tmp_path / "fitted")]) == EXIT_OK
        common = {
            "domain": {"lower": [0.0], "upper": [1.0]},
            "theta": {"lower": [1.0], "upper": [2.0]},
            "physical": {"evaluator": "calibkit.experiments.synthetic:bump_physical", "design": {"n": 21}},
            "kernel": {"family": "gaussian", "phi": synthetic.BUMP_SCALE},
            "quadrature": {"order": 64},
        }
        simulators = {
            "table": {"type": "expensive", "csv": "runs.csv", "kernel": common["kernel"]},
            "saved": {"type": "expensive", "interpolator": "fitted/interpolator.json"},
        }
        theta = {}
        for name, simulator in simulators.items():
            manifest = write_manifest(tmp_path / f"{name}.json", dict(common, simulator=simulator))
            assert main(["-q", "calibrate", "--manifest", str(manifest), "--method", "l2",
                         "--out", str(tmp_path / name)]) == EXIT_OK
            theta[name] = json.loads((tmp_path / name / "result.json").read_text())["results"]["l2"]["theta_hat"][0]
        assert theta["saved"] == pytest.approx(theta["table"], abs=1e-12)

    def test_saved_surrogate_dimension(self, tmp_path):
        pd.DataFrame({"x": [0.0, 0.5, 1.0], "y": [1.0, 0.0, 1.0]}).to_csv(tmp_path / "design.csv", index=False)
        assert main(["-q", "interp", "--design", str(tmp_path / "design.csv"), "--out",
                     str(tmp_path / "fitted")]) == EXIT_OK
        manifest = write_manifest(tmp_path / "bad.json", {
            "domain": {"lower": [0.0], "upper": [1.0]},
            "theta": {"lower": [1.0], "upper": [2.0]},
            "physical": {"evaluator": "calibkit.experiments.synthetic:bump_physical"},
            "simulator": {"type": "expensive", "interpolator": "fitted/interpolator.json"},
        })
        assert main(["-q", "calibrate", "--manifest", str(manifest), "--method", "ols",
                     "--out", str(tmp_path / "out")]) == EXIT_DATA

    def test_table_is_saved(self, explicit_manifest, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["-q", "calibrate", "--manifest", str(explicit_manifest), "--method", "ols",
                     "--out", str(out)]) == EXIT_OK
        text = (out / "result.txt").read_text()
        assert text.strip() == capsys.readouterr().out.strip()
        assert "ols" in text and "exact" in text
        meta = json.loads((out / "result.txt.meta.json").read_text())
        assert meta["columns"][0] == "method"

    def test_unknown_method(self, linear_manifest, tmp_path):
        assert main(["-q", "calibrate", "--manifest", str(linear_manifest), "--method", "bayes",
                     "--out", str(tmp_path / "out")]) == EXIT_USAGE

    def test_missing_manifest(self, tmp_path):
        assert main(["-q", "calibrate", "--manifest", str(tmp_path / "absent.json"),
                     "--out", str(tmp_path / "out")]) == EXIT_DATA


class TestRates:
    """rates subcommand."""

    def test_sweep(self, tmp_path):
        manifest = write_manifest(tmp_path / "exp.json", {"synthetic": "exp-taylor", "rates": {"sizes": [5, 9, 17]}})
        out = tmp_path / "out"
        assert main(["-q", "rates", "--manifest", str(manifest), "--out", str(out)]) == EXIT_OK
        slopes = pd.read_csv(out / "slopes.csv").set_index("estimator")["slope"]
        assert slopes["l2"] >= 1.5
        assert (out / "rates.csv.meta.json").exists()

    def test_too_few_sizes(self, linear_manifest, tmp_path):
        assert main(["-q", "rates", "--manifest", str(linear_manifest), "--sizes", "5,9",
                     "--out", str(tmp_path / "out")]) == EXIT_USAGE


class TestEig:
    """eig subcommand."""

    def test_gaussian_spectrum(self, tmp_path):
        out = tmp_path / "out"
        assert main(["-q", "eig", "--phi", "0.5", "--grid", "11", "--out", str(out)]) == EXIT_OK
        eigen = pd.read_csv(out / "eigen.csv")
        assert eigen["mode"].tolist() == [1, 2, 3, 4, 5]
        assert eigen["eigenvalue"][0] == pytest.approx(1.5447, abs=1e-3)
        functions = pd.read_csv(out / "eigenfunctions.csv")
        assert list(functions.columns) == ["x", "f1", "f2", "f3", "f4", "f5"]
        assert len(functions) == 11

    def test_two_dimensional_bounds(self, tmp_path):
        out = tmp_path / "out"
        assert main(["-q", "eig", "--lower=-1,-1", "--upper=1,1", "--modes", "2", "--quad-order", "10",
                     "--grid", "3", "--out", str(out)]) == EXIT_OK
        assert list(pd.read_csv(out / "eigenfunctions.csv").columns) == ["x1", "x2", "f1", "f2"]


class TestInterp:
    """interp subcommand."""

    def test_csv_design(self, tmp_path):
        pd.DataFrame({"x": [0.0, 0.25, 0.5, 0.75, 1.0], "y": [0.0, 1.0, 0.0, -1.0, 0.0]}).to_csv(
            tmp_path / "design.csv", index=False)
        out = tmp_path / "out"
        assert main(["-q", "interp", "--design", str(tmp_path / "design.csv"), "--kernel", "matern", "--nu", "2.5",
                     "--lower", "0", "--upper", "1", "--predict-grid", "5", "--out", str(out)]) == EXIT_OK
        report = json.loads((out / "report.json").read_text())
        assert report["n"] == 5
        assert report["nugget_used"] == 0.0
        predictions = pd.read_csv(out / "predictions.csv")
        assert predictions["prediction"].tolist() == pytest.approx([0.0, 1.0, 0.0, -1.0, 0.0], abs=1e-9)

    def test_matern_needs_nu(self, tmp_path):
        pd.DataFrame({"x": [0.0, 1.0], "y": [1.0, 2.0]}).to_csv(tmp_path / "design.csv", index=False)
        assert main(["-q", "interp", "--design", str(tmp_path / "design.csv"), "--kernel", "matern",
                     "--out", str(tmp_path / "out")]) == EXIT_USAGE

    def test_missing_responses(self, tmp_path):
        (tmp_path / "design.json").write_text(json.dumps({"domain": {"lower": [0], "upper": [1]},
                                                          "points": [[0.0], [1.0]]}))
        assert main(["-q", "interp", "--design", str(tmp_path / "design.json"),
                     "--out", str(tmp_path / "out")]) == EXIT_DATA
