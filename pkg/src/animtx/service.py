"""Local HTTP service: compile and recommend over JSON, plus the example list.

POST /compile    {"start", "end", "transition", "totalDuration"?} -> plan document
POST /recommend  {"start", "end", "stages"?, "totalDuration"?, "top"?,
                  "costModel"?, "options"?} -> ranked candidates
GET  /examples   -> the bundled example chart pairs with their transitions

Malformed or invalid requests get 400 with a diagnostics list; an empty
recommendation gets 422; anything unexpected gets 500 with an incident id.
Optional static files (a player build) are served from ``static_dir``.
"""

from __future__ import annotations

import json
import logging
import mimetypes
import uuid
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from . import api
from .errors import AnimtxError, RecommendError

log = logging.getLogger(__name__)
MAX_BODY = 32 * 1024 * 1024


class BadRequest(Exception):
    def __init__(self, diagnostics: list[dict]):
        super().__init__(diagnostics)
        self.diagnostics = diagnostics


def _diag(code: str, message: str) -> dict:
    return {"code": code, "message": message, "path": ""}


def _require(body: dict, *names: str) -> None:
    missing = [n for n in names if n not in body]
    if missing:
        raise BadRequest([_diag("missing-field", f"request body lacks {n!r}") for n in missing])


def handle_compile(body: dict) -> tuple[int, object]:
    _require(body, "start", "end", "transition")
    return 200, api.compile_docs(body["start"], body["end"], body["transition"],
                                 body.get("totalDuration"))


def handle_recommend(body: dict) -> tuple[int, object]:
    _require(body, "start", "end")
    _, doc = api.recommend_docs(body["start"], body["end"], body.get("stages"),
                                body.get("totalDuration"), body.get("top"),
                                body.get("costModel"), body.get("options"))
    return 200, doc


POST_ROUTES = {"/compile": handle_compile, "/recommend": handle_recommend}


def dispatch_post(path: str, raw: bytes) -> tuple[int, object]:
    """Status and response document for a POST; never raises."""
    route = POST_ROUTES.get(path)
    if route is None:
        return 404, {"diagnostics": [_diag("not-found", f"no endpoint {path}")]}
    try:
        try:
            body = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise BadRequest([_diag("malformed-json", str(exc))]) from None
        if not isinstance(body, dict):
            raise BadRequest([_diag("malformed-body", "request body must be a JSON object")])
        return route(body)
    except BadRequest as exc:
        return 400, {"diagnostics": exc.diagnostics}
    except RecommendError as exc:
        return 422, {"diagnostics": [_diag("empty-recommendation", str(exc))]}
    except AnimtxError as exc:
        return 400, {"diagnostics": api.diagnostics_doc(exc)}
    except Exception:  # noqa: BLE001 - reported with an id, never leaked
        incident = str(uuid.uuid4())
        log.exception("incident %s on POST %s", incident, path)
        return 500, {"error": "internal error", "incident": incident}


class Handler(BaseHTTPRequestHandler):
    server_version = "animtx"
    static_dir: Path | None = None

    def log_message(self, fmt, *args):
        log.info("%s - %s", self.address_string(), fmt % args)

    def _send(self, status: int, payload: bytes, ctype: str) -> None:
        self.send_response(status)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def _send_json(self, status: int, doc) -> None:
        self._send(status, api.dumps(doc).encode("utf-8"), "application/json")

    def do_POST(self):
        try:
            length = int(self.headers.get("Content-Length", "0"))
        except ValueError:
            length = -1
        if length < 0 or length > MAX_BODY:
            self._send_json(400, {"diagnostics": [_diag("bad-length", "invalid Content-Length")]})
            return
        status, doc = dispatch_post(self.path.split("?", 1)[0], self.rfile.read(length))
        self._send_json(status, doc)

    def do_GET(self):
        path = self.path.split("?", 1)[0]
        if path == "/examples":
            self._send_json(200, {"examples": api.example_docs()})
            return
        f = self._static_file(path)
        if f is None:
            self._send_json(404, {"diagnostics": [_diag("not-found", f"no resource {path}")]})
            return
        ctype = mimetypes.guess_type(f.name)[0] or "application/octet-stream"
        self._send(200, f.read_bytes(), ctype)

    def _static_file(self, path: str) -> Path | None:
        if self.static_dir is None:
            return None
        root = self.static_dir.resolve()
        f = (root / path.lstrip("/")).resolve()
        if f.is_dir():
            f = f / "index.html"
        if root not in f.parents and f != root or not f.is_file():
            return None
        return f


def make_server(host: str = "127.0.0.1", port: int = 8765,
                static_dir: str | Path | None = None) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (Handler,),
                   {"static_dir": Path(static_dir) if static_dir else None})
    return ThreadingHTTPServer((host, port), handler)


def serve(host: str = "127.0.0.1", port: int = 8765, static_dir=None) -> None:
    httpd = make_server(host, port, static_dir)
    log.info("listening on http://%s:%d", host, httpd.server_address[1])
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        httpd.server_close()
