"""Round trip between the browser client's request sequence and the store.

The browser itself cannot run here; these tests replay the exact HTTP
conversation the UI client code makes (same paths, bodies and headers, see
frontend/src/api.ts) against the real service and assert the store-side
effects the curation workflow relies on.
"""

from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from scriptorium.review import ReviewStore
from scriptorium.service import create_app

from test_review import make_pair

FRONTEND_DIST = Path(__file__).parent.parent / "frontend" / "dist"


@pytest.fixture()
def store(tmp_path):
    s = ReviewStore(tmp_path / "store")
    s.add_pairs([make_pair(f"p{k}") for k in range(3)])
    return s


def test_ui_decision_sequence_appends_log_and_decrements_pending(store):
    client = TestClient(create_app(store))
    log_lines_before = (
        store.log_path.read_text().count("\n") if store.log_path.exists() else 0
    )

    queue = client.get("/api/pairs", params={"status": "pending"}).json()["pairs"]
    assert len(queue) == 3
    first = queue[0]

    resp = client.post(
        f"/api/pairs/{first['pair_id']}/decision",
        json={"status": "accepted", "annotator": "phi"},
    )
    assert resp.status_code == 200

    stats = client.get("/api/stats").json()
    assert stats["by_status"]["pending"] == 2
    assert store.log_path.read_text().count("\n") == log_lines_before + 1


def test_ui_edited_target_read_back_byte_identical(store):
    client = TestClient(create_app(store))
    typed = "vie  m̃elée ⁊ q̃  (kept verbatim, trailing spaces too)  "
    client.post(
        "/api/pairs/p1/decision",
        json={"status": "edited", "annotator": "phi", "corrected_target": typed},
    )
    fetched = client.get("/api/pairs/p1").json()
    assert fetched["target"].encode("utf-8") == typed.encode("utf-8")
    assert fetched["status"] == "edited"
    # The log holds the same bytes the annotator typed.
    logged = store.log_path.read_text(encoding="utf-8")
    assert typed in logged


@pytest.mark.skipif(not FRONTEND_DIST.is_dir(), reason="frontend not built")
def test_service_serves_the_built_ui(store, tmp_path):
    ui_root = tmp_path / "ui"
    ui_root.mkdir()
    (ui_root / "index.html").write_text(
        (Path(__file__).parent.parent / "frontend" / "index.html").read_text()
    )
    dist = ui_root / "dist"
    dist.mkdir()
    for asset in FRONTEND_DIST.glob("*.js"):
        (dist / asset.name).write_text(asset.read_text())
    client = TestClient(create_app(store, ui_dir=ui_root))
    page = client.get("/")
    assert page.status_code == 200
    assert "scriptorium review" in page.text
    script = client.get("/dist/main.js")
    assert script.status_code == 200
    assert client.get("/api/stats").status_code == 200  # API still reachable
