import numpy as np
import pytest
from fastapi.testclient import TestClient

from contmeas.model import model_to_dict
from contmeas.presets import load_preset
from contmeas.service import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def test_health(client):
    resp = client.get("/api/health")
    assert resp.status_code == 200
    body = resp.json()
    assert body["status"] == "ok"
    assert "version" in body


def test_validate_preset_name(client):
    resp = client.post("/api/validate", json={"model": "counting-qubit"})
    assert resp.status_code == 200
    body = resp.json()
    assert body["ok"] is True
    assert body["dim"] == 2
    assert body["n_channels"] == 1
    assert body["z_values"] == [1.0]
    assert body["total_rate"] == 1.0
    assert body["quasi_completeness"]["c1_holds"] is True


def test_validate_inline_model(client):
    raw = model_to_dict(load_preset("diffusive-qubit"))
    resp = client.post("/api/validate", json={"model": raw})
    assert resp.status_code == 200
    assert resp.json()["ok"] is True


def test_validate_reports_domain_error(client):
    raw = model_to_dict(load_preset("counting-qubit"))
    raw["H"] = [[0, [0.0, 1.0]], [0, 0]]
    resp = client.post("/api/validate", json={"model": raw})
    assert resp.status_code == 200  # validation outcome, not a transport error
    body = resp.json()
    assert body["ok"] is False
    assert body["error"] == "NonHermitianH"
    assert body["detail"]


def test_validate_unknown_preset(client):
    resp = client.post("/api/validate", json={"model": "no-such-preset"})
    assert resp.status_code == 400


def test_simulate_small_run(client):
    resp = client.post(
        "/api/simulate",
        json={
            "model": "counting-qubit",
            "state": "mixed",
            "t_max": 0.1,
            "dt": 1e-3,
            "n_traj": 64,
            "master_seed": 5,
            "mode": "p",
            "outputs": ["entropy", "jumps", "weight"],
            "snapshot_stride": 20,
        },
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["times"][0] == 0.0
    assert body["times"][-1] == pytest.approx(0.1)
    assert set(body["series"]) == {"entropy", "jumps", "weight"}
    col = body["series"]["entropy"]
    assert len(col["mean"]) == len(body["times"])
    man = body["manifest"]
    assert man["n_traj"] == 64 and man["mode"] == "p"
    assert man["master_seed"] == 5
    assert "repair_count" in man and "dead_count" in man


def test_simulate_is_reproducible(client):
    req = {
        "model": "diffusive-qubit",
        "state": "plus",
        "t_max": 0.05,
        "dt": 1e-3,
        "n_traj": 128,
        "master_seed": 17,
        "mode": "q",
        "outputs": ["y"],
        "snapshot_stride": 10,
    }
    a = client.post("/api/simulate", json=req).json()
    b = client.post("/api/simulate", json=req).json()
    assert a["series"]["y"] == b["series"]["y"]


def test_simulate_rate_cap_maps_to_400(client):
    resp = client.post(
        "/api/simulate",
        json={
            "model": "counting-qubit",
            "state": "mixed",
            "t_max": 1.0,
            "dt": 0.2,
            "n_traj": 8,
            "master_seed": 1,
        },
    )
    assert resp.status_code == 400
    body = resp.json()
    assert body["error"] == "RateTooHigh"


def test_simulate_rejects_bad_functional(client):
    resp = client.post(
        "/api/simulate",
        json={
            "model": "counting-qubit",
            "state": "mixed",
            "t_max": 0.01,
            "dt": 1e-3,
            "n_traj": 4,
            "master_seed": 1,
            "outputs": ["nope"],
        },
    )
    assert resp.status_code == 400
    assert resp.json()["error"] == "BadShape"


def test_simulate_explicit_state_matrix(client):
    resp = client.post(
        "/api/simulate",
        json={
            "model": "counting-qubit",
            "state": [[[0.75, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.25, 0.0]]],
            "t_max": 0.01,
            "dt": 1e-3,
            "n_traj": 4,
            "master_seed": 1,
        },
    )
    assert resp.status_code == 200


def test_characteristic_closed_form(client):
    resp = client.post(
        "/api/characteristic",
        json={
            "model": "decoupled",
            "state": "mixed",
            "k": 1.0,
            "t_max": 1.0,
            "points": 5,
        },
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["kappa"] == 1.0
    assert body["t"] == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])
    for t, re, im in zip(body["t"], body["re"], body["im"]):
        want = np.exp(t * (1j - 0.5))
        assert re == pytest.approx(want.real, abs=1e-12)
        assert im == pytest.approx(want.imag, abs=1e-12)


def test_report_endpoint_null_model(client):
    resp = client.post(
        "/api/report",
        json={
            "model": "informationless-jumps",
            "state": [[[0.75, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.25, 0.0]]],
            "t": 0.25,
            "n_traj": 96,
            "master_seed": 11,
            "dt": 2e-3,
        },
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["i_p_q"] == {"value": 0.0, "se": 0.0}
    assert body["s_pi_2"] == {"value": 0.0, "se": 0.0}
    assert body["s_q_initial"] == pytest.approx(0.5623351446188083)
    assert body["bounds_ok"] is True
    assert len(body["chain_residuals"]) == 3


def test_report_at_zero(client):
    resp = client.post(
        "/api/report",
        json={
            "model": "counting-qubit",
            "state": "mixed",
            "t": 0.0,
            "n_traj": 16,
            "master_seed": 11,
        },
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["s_sigma_pi"]["value"] == pytest.approx(np.log(2.0))
    assert body["s_pi_2"]["value"] == 0.0


def test_selftest_quick(client):
    resp = client.post("/api/selftest", json={"scale": "quick", "workers": 4})
    assert resp.status_code == 200
    body = resp.json()
    assert body["passed"] is True
    assert body["elapsed_seconds"] > 0
    assert all(c["passed"] for c in body["checks"])


def test_request_validation_is_422(client):
    resp = client.post(
        "/api/simulate",
        json={"model": "counting-qubit", "state": "mixed", "t_max": -1.0,
              "dt": 1e-3, "n_traj": 4, "master_seed": 1},
    )
    assert resp.status_code == 422
