"""Service endpoints: request validation, report envelopes, error mapping."""

import pytest
from fastapi.testclient import TestClient

from folnerlab.service.app import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def test_health(client):
    got = client.get("/health")
    assert got.status_code == 200
    body = got.json()
    assert body["status"] == "ok"
    assert "pipeline" in body["commands"]
    assert len(body["commands"]) == 8


def test_invariance_endpoint(client):
    got = client.post(
        "/v1/invariance",
        json={
            "backend": "z2",
            "set": {"kind": "box", "side": 20},
            "K": {"kind": "units"},
            "epsilon": "1/4",
            "class": 0,
        },
    )
    assert got.status_code == 200
    body = got.json()
    assert body["schema"] == 1
    assert body["command"] == "invariance"
    assert body["pass"] is True
    assert body["certificates"][0]["ratio"] == "1/10"


def test_invariance_failing_verdict_is_200(client):
    got = client.post(
        "/v1/invariance",
        json={
            "backend": "z2",
            "set": {"kind": "box", "side": 3},
            "K": {"kind": "units"},
            "epsilon": "1/4",
        },
    )
    assert got.status_code == 200
    assert got.json()["pass"] is False


def test_bad_rational_is_400(client):
    got = client.post(
        "/v1/invariance",
        json={
            "backend": "z2",
            "set": {"kind": "box", "side": 4},
            "K": {"kind": "units"},
            "epsilon": "2/0",
        },
    )
    assert got.status_code == 400


def test_unknown_field_is_422(client):
    got = client.post(
        "/v1/invariance",
        json={
            "backend": "z2",
            "set": {"kind": "box", "side": 4},
            "K": {"kind": "units"},
            "epsilon": "1/4",
            "bogus": 1,
        },
    )
    assert got.status_code == 422


def test_wns_endpoint_with_target(client):
    got = client.post(
        "/v1/wns",
        json={
            "backend": "z1",
            "partition": {"kind": "congruence", "modulus": 2},
            "x": [1],
            "target": ["2/3", "1/3"],
        },
    )
    assert got.status_code == 200
    body = got.json()
    assert body["pass"] is True
    assert body["trials"][0]["counts"] == [5, 3]
    assert body["trials"][0]["disjoint_ok"] is True


def test_wns_sweep_deterministic(client):
    req = {
        "backend": "z1",
        "partition": {"kind": "congruence", "modulus": 3},
        "x": [2],
        "trials": 5,
        "seed": 42,
    }
    a = client.post("/v1/wns", json=req).json()
    b = client.post("/v1/wns", json=req).json()
    assert a == b
    assert len(a["trials"]) == 5


def test_midpoint_endpoint_gate_violation_is_409(client):
    got = client.post(
        "/v1/midpoint",
        json={
            "backend": "z1",
            "A": {"kind": "box", "side": 100},
            "B": {"kind": "box", "side": 100},
            "delta": "1/10",
        },
    )
    assert got.status_code == 409


def test_midpoint_endpoint_ok(client):
    got = client.post(
        "/v1/midpoint",
        json={
            "backend": "z1",
            "A": {"kind": "box", "side": 100},
            "B": {"kind": "box", "side": 105, "translate": [95]},
            "delta": "1/10",
            "K": {"kind": "units"},
        },
    )
    assert got.status_code == 200
    body = got.json()
    assert body["pass"] is True
    assert body["certificates"][0]["measured"] == "1/21"


def test_midpoint_hs_mode(client):
    got = client.post(
        "/v1/midpoint",
        json={
            "backend": "z1",
            "A": {"kind": "box", "side": 60},
            "B": {"kind": "box", "side": 62, "translate": [200]},
            "delta": "1/8",
            "K": {"kind": "units"},
            "partition": {"kind": "congruence", "modulus": 2},
            "mode": "hs",
        },
    )
    assert got.status_code == 200
    body = got.json()
    assert body["pass"] is True
    assert body["hs"]["midpoint"]["disjoint"] is True


def test_quasitile_endpoint_small(client):
    got = client.post(
        "/v1/quasitile",
        json={
            "backend": "z2",
            "target": {"kind": "box", "side": 32},
            "tile_sides": [4],
            "epsilon": "1/4",
            "K": {"kind": "units"},
        },
    )
    assert got.status_code == 200
    body = got.json()
    assert body["pass"] is True
    assert body["verification"]["covering_ratio"] == "1/1"


def test_quotafill_endpoint(client):
    got = client.post(
        "/v1/quotafill",
        json={
            "piece_sizes": [8] * 20,
            "partition": {"kind": "congruence", "modulus": 2},
            "epsilon": "1/2",
            "M": "80/1",
            "tile_bound": 8,
        },
    )
    assert got.status_code == 200
    body = got.json()
    assert body["pass"] is True
    assert body["quota"]["size_ratio"] == "1/1"


def test_affine_folner_endpoint(client):
    got = client.post("/v1/affine-folner", json={"n_values": [1, 2, 4]})
    assert got.status_code == 200
    body = got.json()
    assert body["pass"] is True
    assert body["rows"][0]["dilation_ratio"] == "2/1"


def test_affine_obstruction_endpoint(client):
    got = client.post(
        "/v1/affine-obstruction", json={"n_max": 4, "candidates": 60, "seed": 3}
    )
    assert got.status_code == 200
    body = got.json()
    assert body["pass"] is True
    assert body["survivors"] == 0
    assert sum(body["counts"].values()) > 0


def test_pipeline_endpoint(client):
    got = client.post(
        "/v1/pipeline",
        json={
            "backend": "z2",
            "partition": {"kind": "checkerboard"},
            "target": ["1/2", "1/2"],
            "K": {"kind": "units"},
            "epsilon": "1/4",
            "tile_sides": [16],
            "stream": {"side": 32, "spacing": 32},
        },
    )
    assert got.status_code == 200
    body = got.json()
    assert body["pass"] is True
    assert body["pipeline"]["verdict"] is True


def test_pipeline_stage_abort_is_409(client):
    got = client.post(
        "/v1/pipeline",
        json={
            "backend": "z2",
            "partition": {"kind": "checkerboard"},
            "target": ["1/2", "1/2"],
            "K": {"kind": "units"},
            "epsilon": "1/8",
            "tile_sides": [4],  # class-2 ratio of a 4-box is far above 1/8
            "stream": {"side": 32, "spacing": 32},
        },
    )
    assert got.status_code == 409
    assert got.json()["detail"]["stage"] == "tiles"
