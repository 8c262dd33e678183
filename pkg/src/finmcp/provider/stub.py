"""Stub vendor server serving a fixture store over the internal wire schema.

Used by integration tests and runnable as ``finmcp stub-vendor``.
"""

from __future__ import annotations

import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import unquote

from finmcp import jsonio
from finmcp.errors import NotFound
from finmcp.provider.fixture import FixtureProvider
from finmcp.provider.tables import FIXTURE_SCHEMA, StatementKind

_KINDS = {k.dirname: k for k in StatementKind}


class StubVendor:
    """Serve ``fixtures_dir``; ``faults`` is a queue of statuses returned first."""

    def __init__(
        self,
        fixtures_dir: Path | str | None = None,
        token: str | None = None,
        host: str = "127.0.0.1",
        port: int = 0,
    ) -> None:
        self.provider = FixtureProvider(fixtures_dir)
        self.token = token
        self.faults: list[int] = []
        self.requests: list[str] = []
        self._lock = threading.Lock()
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args) -> None:
                pass

            def do_GET(self) -> None:
                status, body = stub.respond(self.path, self.headers.get("Authorization"))
                data = body.encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

        self.server = ThreadingHTTPServer((host, port), Handler)
        self._thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        host, port = self.server.server_address[:2]
        return f"http://{host}:{port}"

    def respond(self, path: str, auth: str | None) -> tuple[int, str]:
        with self._lock:
            self.requests.append(path)
            if self.faults:
                return self.faults.pop(0), '{"error":"injected"}'
        if self.token is not None and auth != f"Bearer {self.token}":
            return 401, '{"error":"unauthorized"}'
        parts = [unquote(p) for p in path.split("?")[0].strip("/").split("/")]
        if parts[:2] != ["v1", "companies"]:
            return 404, '{"error":"no such route"}'
        p = self.provider
        try:
            if len(parts) == 2:
                docs = [p.company_document(c.id) for c in p.companies()]
                return 200, jsonio.dumps({"schema": FIXTURE_SCHEMA, "companies": docs})
            company = parts[2]
            if company not in {c.id for c in p.companies()}:
                return 404, '{"error":"unknown company"}'
            kind = _KINDS.get(parts[3]) if len(parts) > 3 else None
            if kind is None:
                return 404, '{"error":"unknown kind"}'
            if len(parts) == 4:
                periods = p._periods(kind, company)
                return 200, jsonio.dumps({"schema": FIXTURE_SCHEMA, "periods": periods})
            if len(parts) == 5:
                key = None if kind == StatementKind.ACQUISITIONS else parts[4]
                return 200, jsonio.dumps(p._document(kind, company, key))
        except NotFound:
            return 404, '{"error":"not found"}'
        return 404, '{"error":"no such route"}'

    def start(self) -> "StubVendor":
        self._thread = threading.Thread(target=self.server.serve_forever, kwargs={"poll_interval": 0.05}, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self.server.shutdown()
        self.server.server_close()

    def __enter__(self) -> "StubVendor":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
