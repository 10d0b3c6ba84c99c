"""Small HTTP plumbing shared by every service.

A route table maps (method, path) to a handler taking (query, body,
headers) and returning (status, content_type, payload_bytes). Library
errors map onto HTTP statuses with a JSON body carrying the error type,
so clients can rehydrate the original exception class.

Responses carry permissive CORS headers: the portal is a pure browser
client of these endpoints.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qsl, urlsplit

from .. import errors as errors_mod
from ..errors import StacksError

_ERROR_TYPES = {
    name: obj
    for name, obj in vars(errors_mod).items()
    if isinstance(obj, type) and issubclass(obj, StacksError)
}


def error_body(exc):
    payload = {"error": {"type": type(exc).__name__, "message": str(exc)}}
    for attr in ("findings", "datestamp", "position"):
        value = getattr(exc, attr, None)
        if value is not None:
            payload["error"][attr] = value
    return json.dumps(payload).encode("utf-8")


def raise_from_body(status, body):
    """Rebuild the service-side exception from an error response."""
    try:
        info = json.loads(body.decode("utf-8"))["error"]
    except (ValueError, KeyError):
        raise StacksError("service error (HTTP %d)" % status)
    cls = _ERROR_TYPES.get(info.get("type"), StacksError)
    exc = cls(info.get("message", "service error"))
    for attr in ("findings", "datestamp", "position"):
        if attr in info:
            setattr(exc, attr, info[attr])
    raise exc


def json_response(data, status=200):
    return status, "application/json", json.dumps(data, ensure_ascii=False).encode("utf-8")


def read_json(body):
    if not body:
        return {}
    try:
        return json.loads(body.decode("utf-8"))
    except ValueError:
        raise errors_mod.ValidationFailure("request body is not valid JSON")


class _Handler(BaseHTTPRequestHandler):
    server_version = "stacks/0.1"
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # keep test output quiet
        pass

    def _respond(self, status, content_type, payload):
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(payload)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header(
            "Access-Control-Allow-Headers", "Content-Type, X-Privileged-Token"
        )
        self.end_headers()
        self.wfile.write(payload)

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header(
            "Access-Control-Allow-Headers", "Content-Type, X-Privileged-Token"
        )
        self.send_header("Content-Length", "0")
        self.end_headers()

    def _dispatch(self, method):
        parts = urlsplit(self.path)
        route = self.server.routes.get((method, parts.path))
        if route is None:
            self._respond(404, "application/json", error_body(errors_mod.NotFound("no route %s" % parts.path)))
            return
        query = dict(parse_qsl(parts.query, keep_blank_values=True))
        length = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(length) if length else b""
        try:
            status, content_type, payload = route(query, body, self.headers)
        except StacksError as exc:
            status, content_type, payload = (
                exc.http_status,
                "application/json",
                error_body(exc),
            )
        except Exception as exc:  # noqa: BLE001 - service boundary
            status, content_type, payload = (
                500,
                "application/json",
                error_body(StacksError("internal error: %s" % exc)),
            )
        self._respond(status, content_type, payload)

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")


class ServiceServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address, routes):
        super().__init__(address, _Handler)
        self.routes = routes

    @property
    def url(self):
        return "http://%s:%d" % self.server_address[:2]


def start_server(routes, host="127.0.0.1", port=0):
    """Start a service in a daemon thread; returns the server (which
    knows its bound port) for shutdown()."""
    server = ServiceServer((host, port), routes)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server
