"""Local HTTP service exposing the completion engine.

POST /complete  {"source": text, "cursor": byte offset, "k": int}
                -> {"items": [{"text", "score", "origin", "concatenated"}],
                    "theta": number, "latency_ms": number}
GET  /health    -> {"status": "ok", "model": {...}} or 503 when no model
                   is loaded.

Responses are UTF-8 JSON. The engine is immutable, so concurrent requests
are safe; responses depend only on the request and the loaded checkpoints.
CORS headers are emitted so the browser playground can call the service
from another origin.
"""

from __future__ import annotations

import json
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .engine import CompletionEngine, RankedCompletion


def _item_json(item: RankedCompletion) -> dict:
    return {
        "text": item.text,
        "score": item.score,
        "origin": {
            "scope": item.from_scope,
            "model": item.from_model_vocab,
            "repetition": item.from_repetition,
        },
        "concatenated": item.concatenated,
    }


class _Handler(BaseHTTPRequestHandler):
    engine: CompletionEngine | None = None
    protocol_version = "HTTP/1.1"

    def log_message(self, format, *args):  # quiet by default
        pass

    def _reply(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def do_OPTIONS(self):  # CORS preflight for the playground
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        if self.path != "/health":
            self._reply(404, {"error": "not found"})
            return
        if self.engine is None:
            self._reply(503, {"status": "unavailable", "error": "model not loaded"})
            return
        self._reply(200, {"status": "ok", "model": self.engine.config_summary()})

    def do_POST(self):
        if self.path != "/complete":
            self._reply(404, {"error": "not found"})
            return
        if self.engine is None:
            self._reply(503, {"status": "unavailable", "error": "model not loaded"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            request = json.loads(self.rfile.read(length).decode("utf-8"))
        except (ValueError, UnicodeDecodeError):
            self._reply(400, {"error": "malformed JSON body"})
            return
        if not isinstance(request, dict):
            self._reply(400, {"error": "body must be a JSON object"})
            return
        source = request.get("source")
        cursor = request.get("cursor")
        k = request.get("k", 5)
        if not isinstance(source, str) or not isinstance(cursor, int) or isinstance(cursor, bool):
            self._reply(400, {"error": "source must be a string and cursor an integer"})
            return
        if not isinstance(k, int) or isinstance(k, bool) or k < 1:
            self._reply(400, {"error": "k must be a positive integer"})
            return
        started = time.perf_counter()
        try:
            items, theta = self.engine.complete_request(source, cursor, k)
        except ValueError as exc:
            self._reply(400, {"error": str(exc)})
            return
        latency_ms = (time.perf_counter() - started) * 1000.0
        self._reply(
            200,
            {
                "items": [_item_json(it) for it in items],
                "theta": theta,
                "latency_ms": latency_ms,
            },
        )


def make_server(port: int, engine: CompletionEngine | None) -> ThreadingHTTPServer:
    """Build (but do not start) the HTTP server; engine may be None (503s)."""
    handler = type("BoundHandler", (_Handler,), {"engine": engine})
    return ThreadingHTTPServer(("127.0.0.1", port), handler)


def serve(port: int, engine: CompletionEngine | None) -> None:
    server = make_server(port, engine)
    host, bound_port = server.server_address[:2]
    state = "ready" if engine is not None else "no model loaded (503)"
    print(f"nextok service on http://{host}:{bound_port} [{state}]")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
