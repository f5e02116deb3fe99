"""HTTP+JSON front end for the annotation service.

Endpoints:
    POST /api/session                {"annotator_id"} -> {"token"}
    GET  /api/task/<id>/tuple        -> {"tuple_id", "items": [{id, text} x4],
                                         "question_html"} or {"exhausted": true}
    POST /api/task/<id>/response     {"tuple_id", "best", "worst"} -> verdict
    GET  /api/task/<id>/status       -> progress summary
    POST /api/task                   admin: create a task from JSON
    GET  /api/task/<id>/export       admin: retained responses as CSV

Annotator endpoints authenticate with "Authorization: Bearer <token>".
Anything outside /api/ is served from the static UI directory when one is
configured. Intended for trusted/internal deployments; the admin endpoints
carry no authentication.
"""

from __future__ import annotations

import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .service import (
    AnnotationService,
    GoldKey,
    InvalidSelectionError,
    InvalidSessionError,
    LockedOutError,
    ProtocolError,
    ServiceError,
    TaskConfig,
    UnknownTaskError,
    questionnaire_html,
)
from .tuples import Tuple4, TupleSet

_TASK_PATH = re.compile(r"/api/task/([^/]+)/(tuple|response|status|export)\Z")

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "application/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json; charset=utf-8",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
}


class ApiHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    @property
    def service(self) -> AnnotationService:
        return self.server.service  # type: ignore[attr-defined]

    @property
    def ui_dir(self) -> Path | None:
        return self.server.ui_dir  # type: ignore[attr-defined]

    def log_message(self, fmt, *args):  # quiet by default; tests spam requests
        if getattr(self.server, "verbose", False):
            super().log_message(fmt, *args)

    # -- plumbing ---------------------------------------------------------

    def _send(self, status: int, payload: dict | list) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_text(self, status: int, text: str, content_type: str) -> None:
        self._send_bytes(status, text.encode("utf-8"), content_type)

    def _send_bytes(self, status: int, body: bytes, content_type: str) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _error(self, status: int, code: str, message: str) -> None:
        self._send(status, {"error": {"code": code, "message": message}})

    def _body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length == 0:
            return {}
        return json.loads(self.rfile.read(length).decode("utf-8"))

    def _annotator(self) -> str:
        auth = self.headers.get("Authorization") or ""
        if not auth.startswith("Bearer "):
            raise InvalidSessionError("missing bearer token")
        return self.service.annotator_for(auth[len("Bearer "):].strip())

    # -- dispatch ----------------------------------------------------------

    def do_GET(self) -> None:  # noqa: N802 (stdlib naming)
        try:
            m = _TASK_PATH.match(self.path)
            if m:
                task_id, action = m.groups()
                if action == "tuple":
                    return self._get_tuple(task_id)
                if action == "status":
                    return self._send(200, self.service.task_status(task_id))
                if action == "export":
                    return self._send_text(
                        200, self.service.export_responses(task_id), "text/csv; charset=utf-8"
                    )
            if self.path.startswith("/api/"):
                return self._error(404, "not_found", f"no route {self.path}")
            return self._static()
        except Exception as exc:  # noqa: BLE001 - handler boundary
            self._handle_error(exc)

    def do_POST(self) -> None:  # noqa: N802
        try:
            if self.path == "/api/session":
                body = self._body()
                token = self.service.open_session(str(body.get("annotator_id", "")))
                return self._send(200, {"token": token})
            if self.path == "/api/task":
                return self._create_task(self._body())
            m = _TASK_PATH.match(self.path)
            if m and m.group(2) == "response":
                return self._post_response(m.group(1))
            return self._error(404, "not_found", f"no route {self.path}")
        except Exception as exc:  # noqa: BLE001
            self._handle_error(exc)

    # -- handlers --------------------------------------------------------------

    def _get_tuple(self, task_id: str) -> None:
        annotator = self._annotator()
        task = self.service.task(task_id)
        assignment = self.service.next_assignment(task_id, annotator)
        if assignment is None:
            st = task.annotator(annotator)
            return self._send(200, {"exhausted": True, "contributed": st.n_responses})
        items = [
            {"id": item_id, "text": task.items[item_id]} for item_id in assignment.display
        ]
        self._send(
            200,
            {
                "tuple_id": assignment.tuple_id,
                "items": items,
                "emotion": task.emotion,
                "question_html": questionnaire_html(task.emotion),
            },
        )

    def _post_response(self, task_id: str) -> None:
        annotator = self._annotator()
        body = self._body()
        verdict = self.service.submit_response(
            task_id,
            annotator,
            str(body.get("tuple_id", "")),
            str(body.get("best", "")),
            str(body.get("worst", "")),
        )
        self._send(200, verdict.to_json())

    def _create_task(self, body: dict) -> None:
        tuple_objs = tuple(
            Tuple4(tuple_id=t[0], item_ids=tuple(t[1])) for t in body["tuples"]
        )
        tuples = TupleSet(
            tuples=tuple_objs,
            item_universe=frozenset(i for t in tuple_objs for i in t.item_ids),
            seed=body.get("config", {}).get("seed"),
        )
        gold_keys = [
            GoldKey(
                tuple_id=g[0],
                acceptable_best=frozenset(g[1]),
                acceptable_worst=frozenset(g[2]),
            )
            for g in body.get("gold_keys", [])
        ]
        config = TaskConfig(**body.get("config", {}))
        task = self.service.create_task(
            task_id=body["task_id"],
            emotion=body["emotion"],
            tuples=tuples,
            items=dict(body["corpus"]),
            gold_keys=gold_keys,
            config=config,
        )
        self._send(200, {"task_id": task.task_id, "n_tuples": len(task.tuples)})

    def _static(self) -> None:
        if self.ui_dir is None:
            return self._send_text(
                200,
                "<html><body><p>bwslab annotation service is running; "
                "no UI assets configured.</p></body></html>",
                "text/html; charset=utf-8",
            )
        rel = self.path.split("?", 1)[0].lstrip("/") or "index.html"
        target = (self.ui_dir / rel).resolve()
        if not str(target).startswith(str(self.ui_dir.resolve())) or not target.is_file():
            target = self.ui_dir / "index.html"
            if not target.is_file():
                return self._error(404, "not_found", "no such asset")
        ctype = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        self._send_bytes(200, target.read_bytes(), ctype)

    def _handle_error(self, exc: Exception) -> None:
        if isinstance(exc, LockedOutError):
            return self._error(403, "locked_out", str(exc))
        if isinstance(exc, InvalidSessionError):
            return self._error(401, "invalid_session", str(exc))
        if isinstance(exc, UnknownTaskError):
            return self._error(404, "unknown_task", str(exc))
        if isinstance(exc, ProtocolError):
            return self._error(409, "protocol_error", str(exc))
        if isinstance(exc, (InvalidSelectionError, ValueError, KeyError)):
            return self._error(400, "invalid_request", str(exc))
        if isinstance(exc, ServiceError):
            return self._error(400, "service_error", str(exc))
        self._error(500, "internal_error", f"{type(exc).__name__}: {exc}")


def make_server(
    service: AnnotationService,
    host: str = "127.0.0.1",
    port: int = 0,
    ui_dir: str | Path | None = None,
    verbose: bool = False,
) -> ThreadingHTTPServer:
    server = ThreadingHTTPServer((host, port), ApiHandler)
    server.service = service  # type: ignore[attr-defined]
    server.ui_dir = Path(ui_dir) if ui_dir else None  # type: ignore[attr-defined]
    server.verbose = verbose  # type: ignore[attr-defined]
    return server


def serve_forever(server: ThreadingHTTPServer) -> None:
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


def start_in_thread(server: ThreadingHTTPServer) -> threading.Thread:
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return thread
