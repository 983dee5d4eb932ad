from unittest.mock import patch

import pytest
from fastapi.testclient import TestClient

from app.core.exceptions import NonConvergenceError
from app.main import app

client = TestClient(app)


@pytest.fixture
def dataset():
    return {
        "features": [[0.0, 1.0], [1.0, 0.0], [2.0, 1.0], [3.0, 0.0]],
        "targets": [1.0, 2.0, 2.0, 0.5],
        "feature_names": ["a", "b"],
    }


def test_health():
    response = client.get("/health")

    assert response.status_code == 200
    assert response.json() == {"status": "ok"}


def test_fit_then_predict(dataset):
    response = client.post("/models/fit", json={"data": dataset, "config": {"lambda": 0.1}})

    assert response.status_code == 200
    body = response.json()
    assert body["report"]["lam"] == 0.1
    assert body["model"]["feature_names"] == ["a", "b"]
    assert body["model"]["fit"]["objective"] == body["report"]["final_objective"]

    response = client.post("/models/predict", json={"model": body["model"], "features": dataset["features"]})
    assert response.status_code == 200
    assert len(response.json()["predictions"]) == 4


def test_fit_single_point_example():
    data = {"features": [[0.0]], "targets": [2.0]}

    response = client.post("/models/fit", json={"data": data, "config": {"lambda": 1.0}})

    assert response.status_code == 200
    assert response.json()["report"]["final_objective"] == pytest.approx(3.0, abs=1e-12)


def test_fit_rejects_mismatched_targets():
    data = {"features": [[0.0], [1.0]], "targets": [1.0]}

    response = client.post("/models/fit", json={"data": data, "config": {"lambda": 1.0}})

    assert response.status_code == 422


def test_fit_rejects_negative_lambda(dataset):
    response = client.post("/models/fit", json={"data": dataset, "config": {"lambda": -1.0}})

    assert response.status_code == 422


def test_fit_rejects_clipped_loss(dataset):
    dataset["targets"] = [1.0, -1.0, 1.0, -1.0]
    request = {"data": dataset, "loss": {"kind": "hinge", "clip": 2.0}, "config": {"lambda": 0.1}}

    response = client.post("/models/fit", json=request)

    assert response.status_code == 400
    assert "non-convex" in response.json()["detail"]


def test_fit_service_failure_maps_to_conflict(dataset):
    with patch("app.services.solver.SolverService.fit", side_effect=NonConvergenceError("stalled")):
        response = client.post("/models/fit", json={"data": dataset, "config": {"lambda": 0.1}})

    assert response.status_code == 409
    assert response.json()["detail"] == "stalled"


def test_predict_dimension_mismatch(dataset):
    model = client.post("/models/fit", json={"data": dataset, "config": {"lambda": 0.1}}).json()["model"]

    response = client.post("/models/predict", json={"model": model, "features": [[1.0]]})

    assert response.status_code == 422


def test_complexity_estimate():
    request = {"features": [[0.0], [1.0], [2.0]], "draws": 20, "seed": 0}

    response = client.post("/complexity/estimate", json=request)

    assert response.status_code == 200
    body = response.json()
    assert body["draws"] == 20
    assert body["bound_p"] == 2


def test_complexity_estimate_rejects_zero_draws():
    response = client.post("/complexity/estimate", json={"features": [[0.0]], "draws": 0, "seed": 0})

    assert response.status_code == 400


def test_complexity_bound():
    response = client.post("/complexity/bound?kind=gaussian", json={"p": 3, "m": 100, "C": 1.0})

    assert response.status_code == 200
    assert response.json()["bound"] == pytest.approx(0.316228 * (2 / 3.141592653589793) ** 0.5, rel=1e-5)


def test_complexity_bound_rejects_p_one():
    response = client.post("/complexity/bound", json={"p": 1, "m": 100, "C": 1.0})

    assert response.status_code == 400


def test_tightness():
    response = client.post("/complexity/tightness", json={"p": 2, "m": 1, "draws": 5, "seed": 0})

    assert response.status_code == 200
    assert response.json()["rademacher_jp"] == 1.0


def test_certify_with_constants():
    request = {"p": 1024, "m": 10000, "C": 1.0, "rho": 1.0, "c": 1.0, "delta": 0.05}

    response = client.post("/bounds/certify", json=request)

    assert response.status_code == 200
    assert response.json()["value"] == pytest.approx(0.0863228, abs=1e-6)


def test_certify_with_a_loss():
    request = {
        "kind": "erm_excess", "p": 10, "m": 100, "C": 1.0,
        "loss": {"kind": "absolute", "prediction_range": [-1.0, 1.0], "target_range": [-1.0, 1.0]},
    }

    response = client.post("/bounds/certify", json=request)

    assert response.status_code == 200
    assert response.json()["inputs"]["c"] == 2.0


def test_certify_without_constants():
    response = client.post("/bounds/certify", json={"p": 10, "m": 100, "C": 1.0})

    assert response.status_code == 400
