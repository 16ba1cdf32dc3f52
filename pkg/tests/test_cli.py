import json

import numpy as np
import pytest

from core.errors import SpecFileError
from core.models import RunConfig
from main_cli_app import _count, _int_list, main, run

from core.stationarity import stationary_covariance

from tests.conftest import make_spec


def _write_spec(path, spec):
    path.write_text(json.dumps(spec.to_dict()))
    return str(path)


def _stdout_json(capsys):
    return json.loads(capsys.readouterr().out)


def _reject_constant(token):
    raise ValueError(f"{token} is not valid JSON")


@pytest.fixture
def scalar_file(tmp_path, scalar_spec):
    return _write_spec(tmp_path / "scalar.json", scalar_spec)


@pytest.fixture
def path_file(tmp_path, spec_file):
    out = tmp_path / "path.csv"
    assert main(["simulate", "--spec", str(spec_file), "--T", "3000", "--burnin", "500", "--seed", "42",
                 "--out", str(out)]) == 0
    return str(out)


class TestParsers:
    def test_count_accepts_scientific(self):
        assert _count("2e5") == 200_000
        assert _count(7) == 7

    @pytest.mark.parametrize("value", ["-1", "1.5"])
    def test_count_rejects(self, value):
        with pytest.raises(Exception):
            _count(value)

    def test_int_list(self):
        assert _int_list("100,200, 300") == [100, 200, 300]
        assert _int_list([1, 2]) == [1, 2]


class TestSimulate:
    def test_writes_csv_and_sidecar(self, path_file, spec_file):
        lines = open(path_file).read().splitlines()
        assert lines[0] == "t,x1,x2" and len(lines) == 3001
        meta = json.loads(open(path_file + ".meta.json").read())
        assert meta["seed"] == 42 and meta["burnin"] == 500 and meta["command"] == "simulate"

    def test_same_seed_same_bytes(self, tmp_path, spec_file, path_file):
        again = tmp_path / "again.csv"
        main(["simulate", "--spec", str(spec_file), "--T", "3000", "--burnin", "500", "--seed", "42",
              "--out", str(again)])
        assert again.read_bytes() == open(path_file, "rb").read()

    def test_h_form(self, tmp_path, spec_file):
        out = tmp_path / "h.csv"
        assert main(["simulate", "--spec", str(spec_file), "--T", "200", "--burnin", "10", "--seed", "1",
                     "--form", "h-form", "--out", str(out)]) == 0
        assert json.loads((tmp_path / "h.csv.meta.json").read_text())["representation"] == "h-form"

    def test_entropy_seed_recorded(self, tmp_path, spec_file):
        out = tmp_path / "p.csv"
        assert main(["simulate", "--spec", str(spec_file), "--T", "10", "--burnin", "0", "--out", str(out)]) == 0
        assert isinstance(json.loads((tmp_path / "p.csv.meta.json").read_text())["seed"], int)

    def test_config_file_defaults(self, tmp_path, spec_file):
        config = tmp_path / "run.yml"
        config.write_text("T: 25\nburnin: 5\nseed: 3\n")
        out = tmp_path / "p.csv"
        assert main(["simulate", "--spec", str(spec_file), "--config", str(config), "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()) == 26
        assert main(["simulate", "--spec", str(spec_file), "--config", str(config), "--T", "30",
                     "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()) == 31

    def test_zero_length_is_usage_error(self, tmp_path, spec_file, capsys):
        code = main(["simulate", "--spec", str(spec_file), "--T", "0", "--out", str(tmp_path / "p.csv")])
        assert code == 2
        assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["exit_code"] == 2


class TestReports:
    def test_check_stationarity(self, scalar_file, capsys):
        assert main(["check-stationarity", "--spec", scalar_file, "--n-steps", "1000", "--n-reps", "2",
                     "--mc-samples", "500", "--seed", "1"]) == 0
        report = _stdout_json(capsys)
        assert report["gate_l1"]["threshold"] == pytest.approx(1.88736, abs=5e-6)
        assert report["metadata"]["seed"] == 1
        assert set(report["moment_orders"]) == {"1", "2"}

    def test_classify(self, scalar_file, capsys):
        assert main(["classify", "--spec", scalar_file]) == 0
        assert _stdout_json(capsys)["class"]["labels"] == ["Scalar", "Diagonal", "Similarity"]

    def test_tail_index_from_spec(self, tmp_path, capsys):
        spec_path = tmp_path / "d.yml"
        assert main(["make-spec", "--alphas", "3,4", "--out", str(spec_path)]) == 0
        assert main(["tail-index", "--spec", str(spec_path)]) == 0
        profile = _stdout_json(capsys)["profile"]
        assert profile["alpha"] == pytest.approx([3.0, 4.0], rel=1e-9)
        assert profile["conjecture_conditional"] is True

    def test_tail_index_from_path(self, path_file, capsys):
        assert main(["tail-index", "--path", path_file]) == 0
        assert _stdout_json(capsys)["profile"]["source"] == "hill"

    def test_spectral_measure_csv(self, tmp_path, path_file):
        out = tmp_path / "phi.csv"
        assert main(["spectral-measure", "--path", path_file, "--k", "100,200", "--grid", "10",
                     "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "theta,k,phi" and len(lines) == 21
        meta = json.loads((tmp_path / "phi.csv.meta.json").read_text())
        assert meta["k_values"] == [100, 200]

    def test_extremal_index_both_estimators(self, tmp_path, spec_file, path_file):
        out = tmp_path / "ei.json"
        assert main(["extremal-index", "--spec", str(spec_file), "--path", path_file, "--reps", "2000",
                     "--block-len", "20", "--seed", "2", "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert {e["method"] for e in report["theta_marginal"]} == {"mc-formula", "blocks"}
        assert report["conjecture_conditional"] is True

    def test_covariance(self, tmp_path, spec_file, path_file):
        out = tmp_path / "cov.json"
        assert main(["covariance", "--path", path_file, "--spec", str(spec_file), "--k", "100",
                     "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert np.allclose(report["gamma_stationary"], [[1 / 0.75, 0.0], [0.0, 1 / 0.64]])
        assert len(report["checks"]) == 3

    def test_covariance_falls_back_to_path_tails(self, tmp_path):
        spec = make_spec([np.diag([0.3, 0.2]), np.array([[0.0, 0.1], [0.1, 0.0]])])
        spec_path = _write_spec(tmp_path / "general.json", spec)
        path = tmp_path / "general.csv"
        assert main(["simulate", "--spec", spec_path, "--T", "3000", "--burnin", "500", "--seed", "4",
                     "--out", str(path)]) == 0
        out = tmp_path / "cov.json"
        assert main(["covariance", "--path", str(path), "--spec", spec_path, "--k", "100", "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        np.testing.assert_allclose(report["gamma_stationary"], stationary_covariance(spec), rtol=1e-12)
        assert len(report["checks"]) == 3
        assert "gamma" in report

    def test_gaussian_marginal_is_valid_json(self, tmp_path, capsys):
        spec_path = _write_spec(tmp_path / "z.json", make_spec(np.diag([0.0, 0.7])))
        assert main(["tail-index", "--spec", spec_path]) == 0
        profile = json.loads(capsys.readouterr().out, parse_constant=_reject_constant)["profile"]
        assert profile["alpha"][0] == "inf"
        assert profile["dominant"] == 1

    def test_make_spec_json(self, tmp_path):
        out = tmp_path / "spec.json"
        assert main(["make-spec", "--alphas", "2,3", "--c", "0.5", "--out", str(out)]) == 0
        data = json.loads(out.read_text())
        assert data["A"][0][0][0] == pytest.approx(1.0)
        assert data["C"][0][1] == pytest.approx(5e-6)


class TestErrors:
    def test_missing_spec_file(self, tmp_path, capsys):
        assert main(["classify", "--spec", str(tmp_path / "nope.json")]) == 3
        assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"] == "SpecFileError"

    def test_parse_error(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        assert main(["classify", "--spec", str(bad)]) == 4

    def test_validation_error(self, tmp_path):
        spec = _write_spec(tmp_path / "s.json", make_spec(np.eye(2), C=[[1.0, 2.0], [2.0, 1.0]]))
        assert main(["classify", "--spec", spec]) == 5

    def test_inapplicable(self, tmp_path):
        spec = _write_spec(tmp_path / "g.json", make_spec([np.diag([0.3, 0.2]), np.array([[0.0, 0.1], [0.1, 0.0]])]))
        assert main(["tail-index", "--spec", spec]) == 7

    def test_needs_input(self):
        assert main(["tail-index"]) == 7

    def test_unknown_command(self):
        with pytest.raises(SystemExit) as info:
            main(["frobnicate"])
        assert info.value.code == 2

    def test_run_returns_exit_code(self, tmp_path):
        config = RunConfig(command="classify", spec_path=str(tmp_path / "absent.json"), seed=1)
        assert run(config) == SpecFileError.exit_code
