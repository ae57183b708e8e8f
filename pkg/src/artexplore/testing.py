"""Standalone stub servers for the two wire protocols.

The detector stub serves a configured detection list behind the
POST /detect protocol; the outpaint stub wraps the deterministic mock
provider behind POST /outpaint. Both run on an ephemeral port in a
background thread (context-manager style) and are also runnable as
processes: ``python -m artexplore.testing detector --port 8801``.
"""

from __future__ import annotations

import base64
import io
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from PIL import Image

from artexplore.canvas import MockOutpaintingProvider


class _JsonHandler(BaseHTTPRequestHandler):
    server_version = "artexplore-stub"

    def log_message(self, fmt, *args):  # keep test output quiet
        pass

    def _reply(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self):
        length = int(self.headers.get("Content-Length", "0"))
        try:
            payload = json.loads(self.rfile.read(length) or b"{}")
        except json.JSONDecodeError:
            self._reply(400, {"error": "invalid json"})
            return
        status, response = self.server.handle_request(self.path, payload)
        self._reply(status, response)


class _StubServer:
    """Threaded HTTP server bound to an ephemeral localhost port."""

    def __init__(self):
        self._httpd = ThreadingHTTPServer(("127.0.0.1", 0), _JsonHandler)
        self._httpd.handle_request_fn = None
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self.requests: list[dict] = []

    @property
    def base_url(self) -> str:
        host, port = self._httpd.server_address
        return f"http://{host}:{port}"

    def start(self):
        self._httpd.handle_request = self.handle  # type: ignore[attr-defined]
        self._thread.start()
        return self

    def stop(self):
        self._httpd.shutdown()
        self._httpd.server_close()
        self._thread.join(timeout=5)

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()
        return False

    def handle(self, path: str, payload: dict) -> tuple[int, dict]:  # pragma: no cover
        raise NotImplementedError


class StubDetectorServer(_StubServer):
    """Detector-protocol stub echoing a fixed detections array.

    ``fail_times`` makes the first n requests return 500, for exercising
    client retry behavior. Incoming requests are recorded on
    ``self.requests`` for assertions.
    """

    def __init__(self, detections: list[dict] | None = None, fail_times: int = 0):
        super().__init__()
        self.detections = detections or []
        self.fail_times = fail_times

    def handle(self, path: str, payload: dict) -> tuple[int, dict]:
        if path != "/detect":
            return 404, {"error": "unknown path"}
        self.requests.append(payload)
        if self.fail_times > 0:
            self.fail_times -= 1
            return 500, {"error": "injected failure"}
        if "prompt" not in payload or "cutoff" not in payload:
            return 400, {"error": "missing prompt or cutoff"}
        if not payload.get("image_url") and not payload.get("image_b64"):
            return 400, {"error": "missing image"}
        return 200, {"detections": self.detections}


class MockOutpaintServer(_StubServer):
    """Outpaint-protocol stub backed by the deterministic mock provider."""

    def __init__(self, fail_times: int = 0):
        super().__init__()
        self.provider = MockOutpaintingProvider()
        self.fail_times = fail_times

    def handle(self, path: str, payload: dict) -> tuple[int, dict]:
        if path != "/outpaint":
            return 404, {"error": "unknown path"}
        self.requests.append({k: v for k, v in payload.items() if not k.endswith("_b64")})
        if self.fail_times > 0:
            self.fail_times -= 1
            return 500, {"error": "injected failure"}
        try:
            base = Image.open(io.BytesIO(base64.b64decode(payload["image_b64"])))
            mask = Image.open(io.BytesIO(base64.b64decode(payload["mask_b64"])))
            prompt = payload["prompt"]
        except (KeyError, ValueError) as exc:
            return 400, {"error": f"bad request: {exc}"}
        result = self.provider.outpaint(base, mask, prompt)
        buf = io.BytesIO()
        result.save(buf, format="PNG")
        return 200, {"image_b64": base64.b64encode(buf.getvalue()).decode("ascii")}


def _main() -> None:  # pragma: no cover - manual tool
    import argparse

    parser = argparse.ArgumentParser(description="run a stub protocol server")
    parser.add_argument("kind", choices=["detector", "outpaint"])
    parser.add_argument("--port", type=int, default=0)
    parser.add_argument("--detections", help="JSON file with a detections array")
    args = parser.parse_args()

    if args.kind == "detector":
        detections = []
        if args.detections:
            detections = json.loads(open(args.detections, encoding="utf-8").read())
        server = StubDetectorServer(detections=detections)
    else:
        server = MockOutpaintServer()
    if args.port:
        server._httpd.server_close()
        server._httpd = ThreadingHTTPServer(("127.0.0.1", args.port), _JsonHandler)
        server._thread = threading.Thread(target=server._httpd.serve_forever, daemon=True)
    server.start()
    print(f"{args.kind} stub listening on {server.base_url}", flush=True)
    try:
        server._thread.join()
    except KeyboardInterrupt:
        server.stop()


if __name__ == "__main__":  # pragma: no cover
    _main()
