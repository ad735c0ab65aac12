"""HTTP service tests against a live in-process server."""

import json
import threading
import urllib.error
import urllib.request

import pytest

from nextok.service import make_server
from test_engine import make_fixed_engine


def _request(port, path, payload=None, method=None):
    url = f"http://127.0.0.1:{port}{path}"
    data = json.dumps(payload).encode() if payload is not None else None
    req = urllib.request.Request(
        url, data=data, method=method or ("POST" if data else "GET"),
        headers={"Content-Type": "application/json"},
    )
    try:
        with urllib.request.urlopen(req, timeout=10) as resp:
            return resp.status, json.loads(resp.read().decode())
    except urllib.error.HTTPError as err:
        return err.code, json.loads(err.read().decode())


@pytest.fixture()
def live_server():
    engine = make_fixed_engine({"alpha": 0.5, "beta": 0.3, '"s"': 0.1}, theta=0.3)
    server = make_server(0, engine)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server.server_address[1]
    server.shutdown()
    server.server_close()


@pytest.fixture()
def unloaded_server():
    server = make_server(0, None)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server.server_address[1]
    server.shutdown()
    server.server_close()


class TestUnloaded:
    def test_health_503_before_model_load(self, unloaded_server):
        status, body = _request(unloaded_server, "/health")
        assert status == 503
        assert body["status"] == "unavailable"

    def test_complete_503(self, unloaded_server):
        status, _ = _request(
            unloaded_server, "/complete", {"source": "x", "cursor": 1, "k": 1}
        )
        assert status == 503


class TestLoaded:
    def test_health_ok(self, live_server):
        status, body = _request(live_server, "/health")
        assert status == 200
        assert body["status"] == "ok"
        assert body["model"]["window_len"] == 8

    def test_complete_k1_returns_at_most_one(self, live_server):
        status, body = _request(
            live_server, "/complete",
            {"source": "void alpha() { }", "cursor": 15, "k": 1},
        )
        assert status == 200
        assert len(body["items"]) == 1
        item = body["items"][0]
        assert set(item) == {"text", "score", "origin", "concatenated"}
        assert set(item["origin"]) == {"scope", "model", "repetition"}
        assert 0.0 <= body["theta"] <= 1.0
        assert body["latency_ms"] >= 0.0

    def test_items_sorted_by_descending_score(self, live_server):
        status, body = _request(
            live_server, "/complete",
            {"source": "void alpha() {} void beta() {} void main() { }", "cursor": 44, "k": 10},
        )
        assert status == 200
        scores = [item["score"] for item in body["items"]]
        assert scores == sorted(scores, reverse=True)

    def test_identical_requests_identical_bodies(self, live_server):
        payload = {"source": "void alpha() { }", "cursor": 15, "k": 5}
        _, a = _request(live_server, "/complete", payload)
        _, b = _request(live_server, "/complete", payload)
        a.pop("latency_ms"), b.pop("latency_ms")
        assert a == b

    def test_malformed_body_400(self, live_server):
        url = f"http://127.0.0.1:{live_server}/complete"
        req = urllib.request.Request(
            url, data=b"{not json", headers={"Content-Type": "application/json"}
        )
        with pytest.raises(urllib.error.HTTPError) as err:
            urllib.request.urlopen(req, timeout=10)
        assert err.value.code == 400

    def test_cursor_out_of_range_400(self, live_server):
        status, body = _request(
            live_server, "/complete", {"source": "ab", "cursor": 99, "k": 1}
        )
        assert status == 400
        assert "cursor" in body["error"]

    def test_wrong_types_400(self, live_server):
        status, _ = _request(
            live_server, "/complete", {"source": 5, "cursor": "x", "k": 1}
        )
        assert status == 400
        status, _ = _request(
            live_server, "/complete", {"source": "ab", "cursor": 1, "k": 0}
        )
        assert status == 400

    def test_unknown_path_404(self, live_server):
        status, _ = _request(live_server, "/zap")
        assert status == 404

    def test_cors_headers_present(self, live_server):
        url = f"http://127.0.0.1:{live_server}/health"
        with urllib.request.urlopen(url, timeout=10) as resp:
            assert resp.headers["Access-Control-Allow-Origin"] == "*"
