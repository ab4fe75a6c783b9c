"""HTTP face of the query processor.

``POST /usql`` takes a USQLRequest document and answers with a USQLResponse
(200) or a USQLFault: 400 for malformed XML, 422 for schema and query faults,
500 for anything unexpected. ``GET /health`` and ``GET /stats`` answer in
plain text.
"""

from __future__ import annotations

import logging
import threading
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .config import Engine
from .crawler import Scheduler
from .clock import SystemClock
from .documents import parse_request, serialize_fault, serialize_response
from .errors import ProteusError, XMLSyntaxError

log = logging.getLogger(__name__)

XML_CONTENT_TYPE = "application/xml; charset=utf-8"
TEXT_CONTENT_TYPE = "text/plain; charset=utf-8"


def handle_usql(engine: Engine, body: bytes, *, strict: bool = False) -> tuple[int, bytes]:
    """Answer one request document; shared by the CLI and the HTTP server."""
    try:
        request = parse_request(body, strict=strict)
        response = engine.processor.execute(request)
        return HTTPStatus.OK, serialize_response(response)
    except XMLSyntaxError as exc:
        return HTTPStatus.BAD_REQUEST, serialize_fault(exc.code, str(exc), exc.path)
    except ProteusError as exc:
        return HTTPStatus.UNPROCESSABLE_ENTITY, serialize_fault(exc.code, str(exc), getattr(exc, "path", ""))


def render_stats(engine: Engine) -> str:
    stats = engine.repository.stats()
    lines = [f"version {engine.repository.version}", f"advertisements {len(engine.repository)}"]
    lines += [f"broker {b} {n}" for b, n in stats["brokers"].items()]
    lines += [f"serviceType {t} {n}" for t, n in stats["serviceTypes"].items()]
    return "\n".join(lines) + "\n"


class USQLHandler(BaseHTTPRequestHandler):
    server: USQLServer
    protocol_version = "HTTP/1.1"

    def _send(self, status: int, body: bytes, content_type: str) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self) -> None:  # noqa: N802
        if self.path == "/health":
            self._send(HTTPStatus.OK, b"ok\n", TEXT_CONTENT_TYPE)
        elif self.path == "/stats":
            self._send(HTTPStatus.OK, render_stats(self.server.engine).encode(), TEXT_CONTENT_TYPE)
        else:
            self._send(HTTPStatus.NOT_FOUND, b"not found\n", TEXT_CONTENT_TYPE)

    def do_POST(self) -> None:  # noqa: N802
        if self.path != "/usql":
            self._send(HTTPStatus.NOT_FOUND, b"not found\n", TEXT_CONTENT_TYPE)
            return
        length = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(length)
        try:
            status, payload = handle_usql(self.server.engine, body, strict=self.server.strict)
        except Exception as exc:  # keep the server alive on bugs
            log.exception("internal error")
            status, payload = HTTPStatus.INTERNAL_SERVER_ERROR, serialize_fault("InternalError", str(exc))
        self._send(status, payload, XML_CONTENT_TYPE)

    def log_message(self, format: str, *args) -> None:  # noqa: A002
        log.info("%s %s", self.address_string(), format % args)


class USQLServer(ThreadingHTTPServer):
    daemon_threads = True
    # The socketserver default backlog of 5 resets connections in client bursts.
    request_queue_size = 128

    def __init__(self, address: tuple[str, int], engine: Engine, *, strict: bool = False) -> None:
        super().__init__(address, USQLHandler)
        self.engine = engine
        self.strict = strict
        self._stop = threading.Event()
        self._crawl_thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self.server_address[1]

    def start_background_crawl(self) -> threading.Thread:
        """Crawl every configured broker on its own interval until shutdown."""
        # Scheduling follows wall time even when timestamps come from a fixed clock.
        scheduler = Scheduler(self.engine.crawler, self.engine.config.brokers, SystemClock(self._stop))
        thread = threading.Thread(target=scheduler.run, kwargs={"stop": self._stop}, name="crawler", daemon=True)
        thread.start()
        self._crawl_thread = thread
        return thread

    def shutdown(self) -> None:
        self._stop.set()
        super().shutdown()
        if self._crawl_thread is not None:
            self._crawl_thread.join(timeout=5)


def serve_in_thread(engine: Engine, host: str = "127.0.0.1", port: int = 0, **kwargs) -> USQLServer:
    """Start a server on a daemon thread; callers own ``shutdown()``."""
    server = USQLServer((host, port), engine, **kwargs)
    threading.Thread(target=server.serve_forever, name="usql-server", daemon=True).start()
    return server
