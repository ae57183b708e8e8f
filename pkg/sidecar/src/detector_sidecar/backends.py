"""Detection backends: a deterministic fixture store and a grounded
language-image model loaded through transformers.

Backends return protocol-shaped detection dicts; the app layer enforces
the protocol guarantees (labels from the prompt, boxes inside the image)
regardless of backend behavior.
"""

from __future__ import annotations

import json
from pathlib import Path

from PIL import Image


class BackendUnavailable(RuntimeError):
    """The configured backend cannot serve (missing deps, weights, file)."""


class FixtureBackend:
    """Serves precomputed detections keyed by the sha256 of the image bytes.

    The fixture file maps hex digests to protocol detection arrays:
    ``{"<digest>": [{"label": ..., "box": {...}, "confidence": ...}]}``.
    Unknown images yield an empty detections list (still protocol-valid).
    """

    name = "fixture"

    def __init__(self, fixtures_path: str = ""):
        self._by_digest: dict[str, list[dict]] = {}
        if fixtures_path:
            path = Path(fixtures_path)
            if not path.exists():
                raise BackendUnavailable(f"fixture file not found: {fixtures_path}")
            self._by_digest = json.loads(path.read_text(encoding="utf-8"))

    def detect(
        self, image: Image.Image, labels: list[str], cutoff: float, image_digest: str
    ) -> list[dict]:
        allowed = set(labels)
        out = []
        for entry in self._by_digest.get(image_digest, []):
            if entry["label"] in allowed and entry["confidence"] >= cutoff:
                out.append(entry)
        return out


class TransformersBackend:
    """Zero-shot grounded detection via a transformers pipeline.

    Prompt labels become the candidate label set; inference is
    deterministic for fixed weights (no sampling). Requires the optional
    ``model`` extra plus downloaded weights.
    """

    name = "transformers"

    def __init__(self, model_ref: str, device: str = "cpu"):
        try:
            from transformers import pipeline
        except ImportError as exc:  # pragma: no cover - optional dependency
            raise BackendUnavailable(f"transformers not installed: {exc}") from exc
        try:
            self._pipe = pipeline(
                "zero-shot-object-detection",
                model=model_ref,
                device=-1 if device == "cpu" else device,
            )
        except Exception as exc:  # pragma: no cover - needs weights
            raise BackendUnavailable(f"model load failure for {model_ref!r}: {exc}") from exc

    def detect(
        self, image: Image.Image, labels: list[str], cutoff: float, image_digest: str
    ) -> list[dict]:  # pragma: no cover - needs weights
        results = self._pipe(image.convert("RGB"), candidate_labels=list(labels), threshold=cutoff)
        out = []
        for r in results:
            box = r["box"]
            out.append(
                {
                    "label": r["label"],
                    "box": {
                        "x_min": float(box["xmin"]),
                        "y_min": float(box["ymin"]),
                        "x_max": float(box["xmax"]),
                        "y_max": float(box["ymax"]),
                    },
                    "confidence": float(r["score"]),
                }
            )
        return out


def build_backend(config) -> FixtureBackend | TransformersBackend:
    if config.backend == "fixture":
        return FixtureBackend(config.fixtures_path)
    if config.backend == "transformers":
        return TransformersBackend(config.model_ref, config.device)
    raise BackendUnavailable(f"unknown backend: {config.backend!r}")
