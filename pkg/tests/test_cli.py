import json
from unittest.mock import patch

import numpy as np
import pytest

from app.cli import main
from app.services.complexity import ComplexityService
from app.services.gam import GamService
from app.services.persistence import ModelFileService


def write_csv(path, header, rows):
    lines = [",".join(header)] + [",".join(repr(float(v)) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def train_csv(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.random((30, 3))
    y = np.sin(3 * X[:, 0]) + 0.5 * X[:, 2] + 0.05 * rng.normal(size=30)
    return write_csv(tmp_path / "train.csv", ["a", "b", "c", "y"], np.column_stack([X, y]))


@pytest.fixture
def test_csv(tmp_path):
    rng = np.random.default_rng(1)
    X = rng.random((20, 3))
    y = np.sin(3 * X[:, 0]) + 0.5 * X[:, 2] + 0.05 * rng.normal(size=20)
    return write_csv(tmp_path / "test.csv", ["c", "y", "a", "b"], np.column_stack([X[:, 2], y, X[:, 0], X[:, 1]]))


def fit_args(train_csv, out, *extra):
    return ["fit", "--input", str(train_csv), "--target", "y", "--loss", "squared", "--seed", "0",
            "--out", str(out), *extra]


class TestFitCommand:
    def test_writes_model_and_report(self, train_csv, tmp_path):
        out = tmp_path / "model.json"

        assert main(fit_args(train_csv, out, "--lambda", "0.1")) == 0

        document = json.loads(out.read_text())
        assert document["p"] == 3
        assert document["feature_names"] == ["a", "b", "c"]
        assert document["fit"]["lam"] == 0.1
        report = json.loads((tmp_path / "model.json.report.jsonl").read_text().splitlines()[0])
        assert report["converged"]

    def test_lambda_grid_gets_suffixed_files(self, train_csv, tmp_path):
        out = tmp_path / "model.json"

        assert main(fit_args(train_csv, out, "--lambda", "1", "0.1", "0.01")) == 0

        for index, lam in enumerate([1.0, 0.1, 0.01]):
            document = json.loads((tmp_path / f"model.lambda{index}.json").read_text())
            assert document["fit"]["lam"] == lam
        assert not out.exists()
        assert len((tmp_path / "model.json.report.jsonl").read_text().splitlines()) == 3

    def test_reruns_are_byte_identical(self, train_csv, tmp_path):
        first, second = tmp_path / "first.json", tmp_path / "second.json"

        main(fit_args(train_csv, first, "--lambda", "0.1", "--intercept"))
        main(fit_args(train_csv, second, "--lambda", "0.1", "--intercept"))

        assert first.read_bytes() == second.read_bytes()

    def test_negative_lambda_is_a_config_error(self, train_csv, tmp_path):
        assert main(fit_args(train_csv, tmp_path / "model.json", "--lambda", "-1")) == 2

    def test_bad_cell_is_a_data_error(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("x,y\n1,2\noops,3\n")

        assert main(fit_args(bad, tmp_path / "model.json", "--lambda", "0.1")) == 3

    def test_unconverged_fit_exits_with_four(self, train_csv, tmp_path):
        out = tmp_path / "model.json"

        code = main(fit_args(train_csv, out, "--lambda", "0.001", "--max-outer-iters", "1", "--tol", "1e-15"))

        assert code == 4
        assert out.exists()

    def test_missing_required_flag(self, train_csv):
        with pytest.raises(SystemExit) as excinfo:
            main(["fit", "--input", str(train_csv), "--target", "y", "--lambda", "0.1"])

        assert excinfo.value.code == 2


class TestPredictAndEvaluate:
    @pytest.fixture
    def model_file(self, train_csv, tmp_path):
        out = tmp_path / "model.json"
        main(fit_args(train_csv, out, "--lambda", "0.05", "--intercept"))
        return out

    def test_predict_uses_model_column_order(self, model_file, train_csv, test_csv, tmp_path):
        out = tmp_path / "predictions.csv"
        assert main(["predict", "--model", str(model_file), "--input", str(test_csv), "--out", str(out)]) == 0

        lines = out.read_text().splitlines()
        assert lines[0] == "prediction"
        model, _ = ModelFileService.load(model_file)
        rows = [line.split(",") for line in test_csv.read_text().splitlines()[1:]]
        X = np.array([[float(r[2]), float(r[3]), float(r[0])] for r in rows])
        assert [float(v) for v in lines[1:]] == GamService.predict_many(model, X).tolist()

    def test_evaluate_with_certificate(self, model_file, train_csv, test_csv, tmp_path):
        out = tmp_path / "evaluation.json"

        code = main([
            "evaluate", "--model", str(model_file), "--input", str(train_csv), "--test", str(test_csv),
            "--target", "y", "--loss", "squared", "--prediction-range", "-3", "3",
            "--target-range", "-3", "3", "--delta", "0.05", "--out", str(out),
        ])

        assert code == 0
        report = json.loads(out.read_text())
        row = report["models"][0]
        assert row["lam"] == 0.05
        assert report["deviation"]["gap"] == row["test_risk"] - row["train_risk"]
        assert report["deviation"]["certificate"]["inputs"]["rho"] == 12.0

    def test_evaluate_unbounded_loss_certificate_is_refused(self, model_file, train_csv, test_csv):
        code = main([
            "evaluate", "--model", str(model_file), "--input", str(train_csv), "--test", str(test_csv),
            "--target", "y", "--delta", "0.05",
        ])

        assert code == 2

    def test_missing_model_file(self, train_csv, tmp_path):
        assert main(["predict", "--model", str(tmp_path / "none.json"), "--input", str(train_csv)]) == 3


class TestComplexityCommands:
    def test_complexity_from_synthetic_features(self, tmp_path):
        out = tmp_path / "complexity.json"

        code = main(["complexity", "--p", "3", "--m", "50", "--draws", "100", "--seed", "0", "--out", str(out)])

        assert code == 0
        report = json.loads(out.read_text())
        assert report["draws"] == 100
        assert report["estimate"] <= report["bound"]

    def test_complexity_from_csv(self, train_csv, tmp_path):
        out = tmp_path / "complexity.json"

        code = main([
            "complexity", "--input", str(train_csv), "--target", "y", "--draws", "50", "--seed", "0",
            "--out", str(out),
        ])

        assert code == 0
        assert json.loads(out.read_text())["p"] == 3

    def test_bound_violation_exits_with_five(self, tmp_path):
        with patch.object(ComplexityService, "theorem_bound", return_value=1e-9):
            code = main(["complexity", "--p", "3", "--m", "50", "--draws", "50", "--seed", "0",
                         "--out", str(tmp_path / "c.json")])

        assert code == 5

    def test_complexity_needs_data(self):
        assert main(["complexity", "--seed", "0", "--draws", "10"]) == 2

    def test_bound(self, tmp_path):
        out = tmp_path / "bound.json"

        assert main(["bound", "--p", "1024", "--m", "10000", "--out", str(out)]) == 0
        assert json.loads(out.read_text())["bound"] == pytest.approx(0.0591608, abs=1e-7)

    def test_bound_rejects_p_one(self):
        assert main(["bound", "--p", "1", "--m", "10"]) == 2

    def test_tightness_writes_json_and_table(self, tmp_path):
        out, table = tmp_path / "tightness.json", tmp_path / "tightness.csv"

        code = main(["tightness", "--p", "2", "--m", "1", "--draws", "10", "--seed", "0",
                     "--out", str(out), "--table", str(table)])

        assert code == 0
        assert json.loads(out.read_text())["rademacher_jp"] == 1.0
        assert table.read_text().splitlines()[0].startswith("p,m,draws,seed")

    def test_scaling_table(self, tmp_path):
        out, as_json = tmp_path / "scaling.csv", tmp_path / "scaling.json"

        code = main(["scaling", "--p", "2", "4", "--m", "40", "--draws", "100", "--seed", "0",
                     "--out", str(out), "--json", str(as_json)])

        assert code == 0
        assert len(out.read_text().splitlines()) == 3
        assert [row["p"] for row in json.loads(as_json.read_text())] == [2, 4]

    def test_scaling_unknown_distribution(self):
        assert main(["scaling", "--p", "2", "--m", "10", "--draws", "10", "--seed", "0",
                     "--distribution", "cauchy"]) == 2


class TestCertifyCommand:
    def test_explicit_constants(self, tmp_path):
        out = tmp_path / "certificate.json"

        code = main(["certify", "--p", "1024", "--m", "10000", "--C", "1", "--rho", "1", "--c", "1",
                     "--delta", "0.05", "--out", str(out)])

        assert code == 0
        assert json.loads(out.read_text())["value"] == pytest.approx(0.0863228, abs=1e-6)

    def test_erm_kind(self, tmp_path):
        out = tmp_path / "certificate.json"

        main(["certify", "--kind", "erm_excess", "--p", "1024", "--m", "10000", "--C", "1",
              "--rho", "1", "--c", "1", "--out", str(out)])

        assert json.loads(out.read_text())["value"] == pytest.approx(0.1949710, abs=1e-6)

    def test_constants_from_a_loss(self, tmp_path):
        out = tmp_path / "certificate.json"

        code = main(["certify", "--p", "10", "--m", "100", "--C", "1", "--loss", "hinge", "--clip", "2",
                     "--out", str(out)])

        assert code == 0
        assert json.loads(out.read_text())["inputs"]["c"] == 2.0

    def test_missing_constants(self):
        assert main(["certify", "--p", "10", "--m", "100", "--C", "1"]) == 2

    def test_p_two_is_refused(self):
        assert main(["certify", "--p", "2", "--m", "100", "--C", "1", "--rho", "1", "--c", "1"]) == 2
