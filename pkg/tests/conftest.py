import sys
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))


class MockSite:
    """In-process HTTP server serving scripted routes and logging every request.

    Routes map a path to either (status, headers, body) or a list of such
    tuples consumed one per request (for retry scripts). The request log keeps
    (path, monotonic_time) pairs for politeness and fetch-count assertions.
    """

    def __init__(self):
        self.routes = {}
        self.request_log = []
        self._lock = threading.Lock()
        site = self

        class Handler(BaseHTTPRequestHandler):
            def do_GET(self):
                with site._lock:
                    site.request_log.append((self.path, time.monotonic()))
                    entry = site.routes.get(self.path)
                    if isinstance(entry, list):
                        step = entry.pop(0) if len(entry) > 1 else entry[0]
                    else:
                        step = entry
                if step is None:
                    self._respond(404, {}, b"not found")
                    return
                status, headers, body = step
                self._respond(status, headers, body)

            def _respond(self, status, headers, body):
                if isinstance(body, str):
                    body = body.encode("utf-8")
                self.send_response(status)
                out = {"Content-Type": "text/html; charset=utf-8", "Content-Length": str(len(body))}
                out.update(headers)
                for key, value in out.items():
                    self.send_header(key, value)
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *args):
                pass

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    @property
    def base_url(self):
        host, port = self._server.server_address
        return f"http://{host}:{port}"

    def url(self, path):
        return self.base_url + path

    def add_page(self, path, html, status=200, content_type="text/html; charset=utf-8"):
        self.routes[path] = (status, {"Content-Type": content_type}, html)

    def add_script(self, path, steps):
        """steps: list of (status, headers, body); last step repeats."""
        self.routes[path] = list(steps)

    def requests_for(self, path):
        return [t for p, t in self.request_log if p == path]

    def page_paths_hit(self, exclude=("/robots.txt",)):
        return [p for p, _ in self.request_log if p not in exclude]

    def close(self):
        self._server.shutdown()
        self._server.server_close()


@pytest.fixture
def mock_site():
    site = MockSite()
    yield site
    site.close()
