from __future__ import annotations

import json
from http.client import HTTPConnection

import pytest

from bwslab.http_api import make_server, start_in_thread
from bwslab.service import AnnotationService, GoldKey, TaskConfig
from bwslab.tuples import generate_tuples


@pytest.fixture()
def server(tmp_path):
    items = {f"it{i:03d}": f"tweet {i}" for i in range(26)}
    ts = generate_tuples(sorted(items), seed=3)
    gold = [
        GoldKey(
            tuple_id=ts.tuples[30].tuple_id,
            acceptable_best=frozenset({ts.tuples[30].item_ids[0]}),
            acceptable_worst=frozenset({ts.tuples[30].item_ids[1]}),
        )
    ]
    service = AnnotationService(data_dir=tmp_path / "logs")
    service.create_task(
        task_id="t-fear",
        emotion="fear",
        tuples=ts,
        items=items,
        gold_keys=gold,
        config=TaskConfig(gold_rate=0.0, seed=5),
    )
    ui = tmp_path / "ui"
    ui.mkdir()
    (ui / "index.html").write_text("<html><body>annotation ui</body></html>")
    srv = make_server(service, host="127.0.0.1", port=0, ui_dir=ui)
    start_in_thread(srv)
    yield srv
    srv.shutdown()


def call(srv, method, path, body=None, token=None):
    conn = HTTPConnection("127.0.0.1", srv.server_address[1], timeout=5)
    headers = {}
    payload = None
    if body is not None:
        payload = json.dumps(body)
        headers["Content-Type"] = "application/json"
    if token:
        headers["Authorization"] = f"Bearer {token}"
    conn.request(method, path, body=payload, headers=headers)
    resp = conn.getresponse()
    raw = resp.read().decode("utf-8")
    conn.close()
    try:
        return resp.status, json.loads(raw)
    except json.JSONDecodeError:
        return resp.status, raw


def test_full_annotation_roundtrip(server):
    status, body = call(server, "POST", "/api/session", {"annotator_id": "alice"})
    assert status == 200
    token = body["token"]

    status, tup = call(server, "GET", "/api/task/t-fear/tuple", token=token)
    assert status == 200
    assert len(tup["items"]) == 4
    assert "MOST fearful" in tup["question_html"]
    ids = [it["id"] for it in tup["items"]]
    assert all(it["text"].startswith("tweet") for it in tup["items"])

    status, verdict = call(
        server, "POST", "/api/task/t-fear/response",
        {"tuple_id": tup["tuple_id"], "best": ids[0], "worst": ids[1]},
        token=token,
    )
    assert status == 200
    assert verdict["accepted"] is True
    assert verdict["gold_feedback"] is None

    status, st = call(server, "GET", "/api/task/t-fear/status")
    assert status == 200
    assert st["annotators"]["alice"]["responses"] == 1

    status, csv_text = call(server, "GET", "/api/task/t-fear/export")
    assert status == 200
    assert csv_text.startswith("tuple_id,annotator_id")
    assert len(csv_text.strip().splitlines()) == 2


def test_auth_required(server):
    status, body = call(server, "GET", "/api/task/t-fear/tuple")
    assert status == 401
    assert body["error"]["code"] == "invalid_session"
    status, body = call(server, "GET", "/api/task/t-fear/tuple", token="junk")
    assert status == 401


def test_validation_and_protocol_errors(server):
    _, session = call(server, "POST", "/api/session", {"annotator_id": "bob"})
    token = session["token"]
    _, tup = call(server, "GET", "/api/task/t-fear/tuple", token=token)
    item = tup["items"][0]["id"]
    status, body = call(
        server, "POST", "/api/task/t-fear/response",
        {"tuple_id": tup["tuple_id"], "best": item, "worst": item},
        token=token,
    )
    assert status == 400
    status, body = call(
        server, "POST", "/api/task/t-fear/response",
        {"tuple_id": "never-assigned", "best": "a", "worst": "b"},
        token=token,
    )
    assert status == 409
    assert body["error"]["code"] == "protocol_error"


def test_unknown_task_404(server):
    _, session = call(server, "POST", "/api/session", {"annotator_id": "zed"})
    status, body = call(server, "GET", "/api/task/nope/tuple", token=session["token"])
    assert status == 404


def test_static_ui_served(server):
    status, html = call(server, "GET", "/")
    assert status == 200
    assert "annotation ui" in html
    # unknown path falls back to index.html (single-page app routing)
    status, html = call(server, "GET", "/some/client/route")
    assert status == 200
    assert "annotation ui" in html


def test_admin_create_task_and_annotate(server):
    items = {f"x{i:02d}": f"text {i}" for i in range(26)}
    ts = generate_tuples(sorted(items), seed=9)
    body = {
        "task_id": "t-joy",
        "emotion": "joy",
        "corpus": items,
        "tuples": [[t.tuple_id, list(t.item_ids)] for t in ts.tuples],
        "gold_keys": [],
        "config": {"gold_rate": 0.0, "seed": 11},
    }
    status, created = call(server, "POST", "/api/task", body)
    assert status == 200
    assert created["n_tuples"] == 52
    _, session = call(server, "POST", "/api/session", {"annotator_id": "joyworker"})
    status, tup = call(server, "GET", "/api/task/t-joy/tuple", token=session["token"])
    assert status == 200
    assert "MOST joyful" in tup["question_html"]


def test_exhaustion_signal(server):
    _, session = call(server, "POST", "/api/session", {"annotator_id": "finisher"})
    token = session["token"]
    for _ in range(200):
        status, tup = call(server, "GET", "/api/task/t-fear/tuple", token=token)
        assert status == 200
        if tup.get("exhausted"):
            assert tup["contributed"] > 0
            return
        ids = [it["id"] for it in tup["items"]]
        call(
            server, "POST", "/api/task/t-fear/response",
            {"tuple_id": tup["tuple_id"], "best": ids[0], "worst": ids[-1]},
            token=token,
        )
    raise AssertionError("never exhausted")
