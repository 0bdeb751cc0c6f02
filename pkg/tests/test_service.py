import pytest
from fastapi.testclient import TestClient

from scriptorium.review import ReviewStore
from scriptorium.service import create_app

from test_review import make_pair


@pytest.fixture()
def store(tmp_path):
    s = ReviewStore(tmp_path / "store")
    s.add_pairs([make_pair(f"p{k}") for k in range(4)])
    return s


@pytest.fixture()
def client(store):
    return TestClient(create_app(store))


def test_health(client):
    resp = client.get("/api/health")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok", "pairs": 4}


def test_pending_listing_matches_store(client):
    resp = client.get("/api/pairs", params={"status": "pending"})
    assert resp.status_code == 200
    pairs = resp.json()["pairs"]
    assert len(pairs) == 4
    assert pairs[0]["pair_id"] == "p0"
    assert pairs[0]["status"] == "pending"
    assert pairs[0]["source"] == "source of p0"


def test_accept_decrements_pending(client):
    before = client.get("/api/stats").json()
    resp = client.post(
        "/api/pairs/p1/decision",
        json={"status": "accepted", "annotator": "phi"},
    )
    assert resp.status_code == 200
    assert resp.json()["status"] == "accepted"
    after = client.get("/api/stats").json()
    assert after["by_status"]["pending"] == before["by_status"]["pending"] - 1
    assert after["by_status"]["accepted"] == 1
    assert after["decisions"] == before["decisions"] + 1


def test_edited_target_round_trips_byte_identical(client):
    corrected = "vie m̃ belẽ  (typed exactly so)"
    resp = client.post(
        "/api/pairs/p2/decision",
        json={"status": "edited", "annotator": "phi", "corrected_target": corrected},
    )
    assert resp.status_code == 200
    fetched = client.get("/api/pairs/p2").json()
    assert fetched["status"] == "edited"
    assert fetched["target"] == corrected
    assert fetched["target"].encode("utf-8") == corrected.encode("utf-8")
    assert fetched["original_target"] == "target of p2"


def test_reject_with_note_persists(client):
    client.post(
        "/api/pairs/p3/decision",
        json={"status": "rejected", "annotator": "phi", "notes": "wrong work aligned"},
    )
    fetched = client.get("/api/pairs/p3").json()
    assert fetched["status"] == "rejected"
    assert fetched["notes"] == "wrong work aligned"


def test_unknown_pair_404(client):
    assert client.get("/api/pairs/ghost").status_code == 404
    resp = client.post(
        "/api/pairs/ghost/decision", json={"status": "accepted", "annotator": "x"}
    )
    assert resp.status_code == 404


def test_invalid_status_rejected(client):
    resp = client.post(
        "/api/pairs/p0/decision", json={"status": "blessed", "annotator": "x"}
    )
    assert resp.status_code == 422


def test_decisions_survive_restart(store):
    client = TestClient(create_app(store))
    client.post("/api/pairs/p0/decision", json={"status": "accepted", "annotator": "a"})
    reopened = ReviewStore(store.root)
    assert reopened.view("p0")["status"] == "accepted"


def test_markers_endpoint_serves_the_table(client):
    resp = client.get("/api/markers")
    assert resp.status_code == 200
    body = resp.json()
    assert body["version"] == "1"
    assert {"from": "0300", "to": "036F"} in body["entries"]


def test_normalize_endpoint_speaks_the_external_protocol(client):
    resp = client.post(
        "/api/normalize",
        json={"id": "x1", "text": "cõsul q̃ uie", "language": "fro"},
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["id"] == "x1"
    assert body["text"] == "consul que vie"


def test_token_required_when_configured(store):
    client = TestClient(create_app(store, token="sesame"))
    assert client.get("/api/pairs").status_code == 401
    assert client.get("/api/health").status_code == 200  # health stays open
    ok = client.get("/api/pairs", headers={"X-Auth-Token": "sesame"})
    assert ok.status_code == 200
    bad = client.post(
        "/api/pairs/p0/decision",
        json={"status": "accepted", "annotator": "a"},
        headers={"X-Auth-Token": "wrong"},
    )
    assert bad.status_code == 401


def test_normalize_endpoint_matches_adapter_wire_format(store):
    # The request/response bodies are exactly what the external-normalizer
    # adapter posts and parses, so one service can normalize for another.
    client = TestClient(create_app(store))
    request_body = {"id": "k", "text": "voꝰ", "language": "lat"}
    resp = client.post("/api/normalize", json=request_body)
    body = resp.json()
    assert set(body) >= {"id", "text"}
    assert (body["id"], body["text"]) == ("k", "vous")
