"""The sidecar HTTP service: POST /detect per protocol/detector/.

The app layer owns every protocol guarantee: prompt parsing and the
120-label capacity, image decoding, and response sanitation (labels only
from the prompt, confidences in [0, 1], boxes clamped to the image).
Whatever backend is configured, a conforming request gets a conforming
response or a machine-readable error.
"""

from __future__ import annotations

import base64
import binascii
import hashlib
import io

import httpx
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from PIL import Image

from detector_sidecar.backends import BackendUnavailable, build_backend
from detector_sidecar.config import SidecarConfig

PROMPT_SEPARATOR = ". "


class DetectError(Exception):
    def __init__(self, status_code: int, code: str, message: str):
        super().__init__(message)
        self.status_code = status_code
        self.code = code
        self.message = message


def parse_prompt(text: str) -> list[str]:
    segments = text.split(PROMPT_SEPARATOR)
    for segment in segments:
        if not segment or "." in segment:
            raise DetectError(400, "malformed_prompt", "empty segment in prompt")
    return segments


def create_app(config: SidecarConfig | None = None, backend=None) -> FastAPI:
    config = config or SidecarConfig.from_env()
    app = FastAPI(title="detector-sidecar", version="0.1.0")
    state = {"backend": backend, "error": None}
    if backend is None:
        try:
            state["backend"] = build_backend(config)
        except BackendUnavailable as exc:
            state["error"] = str(exc)

    @app.exception_handler(DetectError)
    async def _detect_error(request: Request, exc: DetectError):
        return JSONResponse(
            status_code=exc.status_code,
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    @app.get("/healthz")
    def healthz():
        if state["backend"] is None:
            return {"status": "degraded", "error": state["error"]}
        return {"status": "ok", "backend": state["backend"].name}

    @app.post("/detect")
    async def detect(request: Request):
        if state["backend"] is None:
            raise DetectError(503, "model_unavailable", state["error"] or "no backend")
        try:
            body = await request.json()
        except Exception:
            raise DetectError(400, "invalid_json", "request body is not JSON")
        if not isinstance(body, dict) or "prompt" not in body:
            raise DetectError(400, "missing_field", "request must carry a prompt")

        labels = parse_prompt(str(body["prompt"]))
        if len(labels) > config.max_labels:
            raise DetectError(
                400,
                "prompt_too_long",
                f"prompt has {len(labels)} labels, capacity is {config.max_labels}",
            )
        try:
            cutoff = float(body.get("cutoff", config.default_cutoff))
        except (TypeError, ValueError):
            raise DetectError(400, "bad_cutoff", "cutoff must be a number")
        if not 0.0 <= cutoff <= 1.0:
            raise DetectError(400, "bad_cutoff", f"cutoff outside [0, 1]: {cutoff}")

        image_bytes = _load_image_bytes(body)
        digest = hashlib.sha256(image_bytes).hexdigest()
        try:
            image = Image.open(io.BytesIO(image_bytes))
            image.load()
        except Exception as exc:
            raise DetectError(400, "undecodable_image", f"image does not decode: {exc}")

        raw = state["backend"].detect(image, labels, cutoff, digest)
        return {"detections": _sanitize(raw, labels, image.width, image.height)}

    return app


def _load_image_bytes(body: dict) -> bytes:
    if body.get("image_b64"):
        try:
            return base64.b64decode(body["image_b64"], validate=True)
        except (binascii.Error, ValueError) as exc:
            raise DetectError(400, "undecodable_image", f"bad base64: {exc}")
    if body.get("image_url"):
        try:
            resp = httpx.get(body["image_url"], timeout=60.0)
            resp.raise_for_status()
            return resp.content
        except httpx.HTTPError as exc:
            raise DetectError(400, "image_unreachable", str(exc))
    raise DetectError(400, "missing_field", "request carries neither image_url nor image_b64")


def _sanitize(raw: list[dict], labels: list[str], width: int, height: int) -> list[dict]:
    """Enforce the response contract regardless of backend output."""
    allowed = set(labels)
    out = []
    for entry in raw:
        label = entry.get("label")
        box = entry.get("box", {})
        confidence = entry.get("confidence")
        if label not in allowed:
            continue
        if not isinstance(confidence, (int, float)) or not 0.0 <= confidence <= 1.0:
            continue
        try:
            x0, y0 = float(box["x_min"]), float(box["y_min"])
            x1, y1 = float(box["x_max"]), float(box["y_max"])
        except (KeyError, TypeError, ValueError):
            continue
        if x0 > width or x1 < 0 or y0 > height or y1 < 0 or x0 > x1 or y0 > y1:
            continue
        out.append(
            {
                "label": label,
                "box": {
                    "x_min": max(0.0, min(x0, float(width))),
                    "y_min": max(0.0, min(y0, float(height))),
                    "x_max": max(0.0, min(x1, float(width))),
                    "y_max": max(0.0, min(y1, float(height))),
                },
                "confidence": float(confidence),
            }
        )
    return out
