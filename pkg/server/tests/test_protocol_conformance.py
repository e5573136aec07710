"""Replay the shared golden request/response pairs against the mock server.

These are the same fixtures the engine's client tests parse, so passing here
means both sides of the wire agree on the schema and on the rule's numbers.
"""

import json

import pytest


def load(golden_dir, name):
    return json.loads((golden_dir / name).read_text(encoding="utf-8"))


def test_healthz_matches_golden(client, golden_dir):
    pair = load(golden_dir, "healthz.json")
    response = client.get("/healthz")
    assert response.status_code == 200
    assert response.json() == pair["response"]


def test_predict_matches_golden(client, golden_dir):
    pair = load(golden_dir, "predict_multiclass.json")
    response = client.post("/v1/predict", json=pair["request"]["body"])
    assert response.status_code == 200
    body = response.json()
    assert body["task"] == pair["response"]["task"]
    assert body["labels"] == pair["response"]["labels"]
    assert len(body["probs"]) == len(pair["response"]["probs"])
    for got, expected in zip(body["probs"], pair["response"]["probs"]):
        assert got == pytest.approx(expected, abs=1e-12)


def test_predict_rows_sum_to_one(client):
    response = client.post("/v1/predict", json={"texts": ["anything at all"]})
    row = response.json()["probs"][0]
    assert sum(row) == pytest.approx(1.0, abs=1e-9)
    assert len(row) == 3


def test_benign_label_is_index_zero(client):
    labels = client.get("/healthz").json()["labels"]
    assert labels[0] == "benign"


def test_mlm_matches_golden(client, golden_dir):
    pair = load(golden_dir, "mlm.json")
    response = client.post("/v1/mlm", json=pair["request"]["body"])
    assert response.status_code == 200
    assert response.json() == pair["response"]


def test_mlm_contract(client):
    body = {"text": "this thing is a thing", "mask_index": 1, "top_k": 3}
    candidates = client.post("/v1/mlm", json=body).json()["candidates"]
    assert len(candidates) <= 3
    assert "thing" not in candidates


def test_encode_matches_golden(client, golden_dir):
    pair = load(golden_dir, "encode.json")
    response = client.post("/v1/encode", json=pair["request"]["body"])
    assert response.status_code == 200
    vectors = response.json()["vectors"]
    for got, expected in zip(vectors, pair["response"]["vectors"]):
        assert got == pytest.approx(expected, abs=1e-12)


def test_error_contract(client, golden_dir):
    errors = load(golden_dir, "errors.json")
    over = errors["batch_too_large"]
    response = client.post(over["request"]["path"],
                           json=over["request"]["body"])
    assert response.status_code == over["status"]
    assert "error" in response.json()

    bad = errors["malformed_body"]
    response = client.post(bad["request"]["path"], json=bad["request"]["body"])
    assert response.status_code == bad["status"]
    assert "error" in response.json()


def test_encode_batch_cap(client):
    response = client.post("/v1/encode", json={"texts": ["x"] * 33})
    assert response.status_code == 413
