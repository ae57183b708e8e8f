"""Canvas compositions and outpainting.

Users arrange crops on a square white canvas; the white space left over
is exactly the region an outpainting provider fills, guided by a text
prompt. Compositions are immutable values; rendering is deterministic
(nearest-neighbor scaling, painter's order) so the mock provider can be
byte-reproducible and placed pixels can be checked bit-exactly.
"""

from __future__ import annotations

import base64
import io
import time
from dataclasses import dataclass, replace
from typing import Callable, Protocol

import httpx
import numpy as np
from PIL import Image

DEFAULT_CANVAS_SIDE = 1024

# Mask convention: 255 marks unfilled white space (what the provider
# generates), 0 marks pixels covered by a placement.
MASK_UNFILLED = 255
MASK_FILLED = 0

CropSource = Callable[[str], Image.Image]


class CanvasError(ValueError):
    """Invalid composition or placement."""


class OutpaintingError(Exception):
    """Provider call failed."""


class ProviderContractError(OutpaintingError):
    """Provider returned something outside its contract."""


@dataclass(frozen=True)
class Placement:
    """One crop on the canvas: top-left position plus a scale factor."""

    detection_id: str
    x: int
    y: int
    scale: float

    def __post_init__(self):
        if self.scale <= 0:
            raise CanvasError(f"scale must be positive: {self.scale}")


@dataclass(frozen=True)
class CanvasComposition:
    """Square canvas with ordered placements (later entries render on top)."""

    side: int = DEFAULT_CANVAS_SIDE
    placements: tuple[Placement, ...] = ()
    prompt: str = ""

    def __post_init__(self):
        if self.side <= 0:
            raise CanvasError(f"canvas side must be positive: {self.side}")

    def to_dict(self) -> dict:
        return {
            "side": self.side,
            "prompt": self.prompt,
            "placements": [
                {"detection_id": p.detection_id, "x": p.x, "y": p.y, "scale": p.scale}
                for p in self.placements
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CanvasComposition":
        return cls(
            side=int(d["side"]),
            prompt=str(d.get("prompt", "")),
            placements=tuple(
                Placement(
                    detection_id=str(p["detection_id"]),
                    x=int(p["x"]),
                    y=int(p["y"]),
                    scale=float(p["scale"]),
                )
                for p in d.get("placements", [])
            ),
        )


@dataclass(frozen=True)
class GeneratedImage:
    """Outpainting result plus the exact composition snapshot that produced it."""

    composition: CanvasComposition
    provider_id: str
    image_bytes: bytes
    created_at: float


def scaled_size(width: int, height: int, scale: float) -> tuple[int, int]:
    """Integer pixel size of a crop under a scale factor (never below 1x1)."""
    return max(1, round(width * scale)), max(1, round(height * scale))


def place(
    comp: CanvasComposition,
    detection_id: str,
    x: int,
    y: int,
    scale: float,
    crop_source: CropSource,
) -> CanvasComposition:
    """Append a placement, returning a new composition.

    Raises:
        CanvasError: unknown crop, or the scaled rectangle leaves the canvas.
    """
    try:
        crop = crop_source(detection_id)
    except KeyError as exc:
        raise CanvasError(f"unknown crop: {detection_id!r}") from exc
    width, height = scaled_size(crop.width, crop.height, scale)
    if x < 0 or y < 0 or x + width > comp.side or y + height > comp.side:
        raise CanvasError(
            f"placement out of bounds: ({x},{y})+{width}x{height} on side {comp.side}"
        )
    placement = Placement(detection_id=detection_id, x=x, y=y, scale=scale)
    return replace(comp, placements=comp.placements + (placement,))


def render_base(comp: CanvasComposition, crop_source: CropSource) -> tuple[Image.Image, Image.Image]:
    """Composite the placements over a white canvas.

    Returns (base, mask): base is an RGB image with every placement's
    pixels an exact nearest-neighbor scaled copy of its crop (topmost
    placement wins on overlap); mask is an L image marking unfilled
    white-space pixels with 255 and placed pixels with 0.

    Raises:
        CanvasError: empty composition or missing crop bytes.
    """
    if not comp.placements:
        raise CanvasError("nothing placed")
    base = Image.new("RGB", (comp.side, comp.side), (255, 255, 255))
    mask = Image.new("L", (comp.side, comp.side), MASK_UNFILLED)
    for placement in comp.placements:
        try:
            crop = crop_source(placement.detection_id)
        except KeyError as exc:
            raise CanvasError(f"missing crop bytes: {placement.detection_id!r}") from exc
        width, height = scaled_size(crop.width, crop.height, placement.scale)
        if (
            placement.x < 0
            or placement.y < 0
            or placement.x + width > comp.side
            or placement.y + height > comp.side
        ):
            raise CanvasError(f"placement out of bounds: {placement}")
        scaled = crop.convert("RGB").resize((width, height), Image.NEAREST)
        base.paste(scaled, (placement.x, placement.y))
        mask.paste(
            MASK_FILLED,
            (placement.x, placement.y, placement.x + width, placement.y + height),
        )
    return base, mask


class OutpaintingProvider(Protocol):  # pragma: no cover - structural type
    provider_id: str
    max_side: int | None

    def outpaint(self, base: Image.Image, mask: Image.Image, prompt: str) -> Image.Image: ...


class MockOutpaintingProvider:
    """Deterministic in-repo provider used by the test suite.

    Fills the unfilled region with the average color of all placed
    pixels (integer arithmetic) and leaves placed pixels untouched, so
    identical compositions produce identical bytes.
    """

    provider_id = "mock"
    max_side: int | None = None

    def outpaint(self, base: Image.Image, mask: Image.Image, prompt: str) -> Image.Image:
        arr = np.asarray(base.convert("RGB"))
        unfilled = np.asarray(mask) == MASK_UNFILLED
        placed = arr[~unfilled].reshape(-1, 3).astype(np.int64)
        if placed.shape[0]:
            fill = tuple(int(v) for v in placed.sum(axis=0) // placed.shape[0])
        else:
            fill = (127, 127, 127)
        out = arr.copy()
        out[unfilled] = fill
        return Image.fromarray(out, mode="RGB")


class HttpOutpaintingProvider:
    """Client for an external outpainting service (protocol/outpaint)."""

    provider_id = "http"

    def __init__(
        self,
        endpoint: str,
        api_key: str = "",
        max_side: int | None = 1024,
        timeout: float = 300.0,
        client: httpx.Client | None = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.api_key = api_key
        self.max_side = max_side
        self.timeout = timeout
        self._client = client

    def outpaint(self, base: Image.Image, mask: Image.Image, prompt: str) -> Image.Image:
        payload = {
            "image_b64": _png_b64(base),
            "mask_b64": _png_b64(mask),
            "prompt": prompt,
            "size": base.width,
        }
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        client = self._client or httpx.Client(timeout=self.timeout)
        try:
            resp = client.post(self.endpoint + "/outpaint", json=payload, headers=headers)
            resp.raise_for_status()
            body = resp.json()
        except httpx.HTTPError as exc:
            raise OutpaintingError(f"outpainting request failed: {exc}") from exc
        finally:
            if self._client is None:
                client.close()
        if "image_b64" not in body:
            raise ProviderContractError("provider contract violation: missing image_b64")
        image = Image.open(io.BytesIO(base64.b64decode(body["image_b64"])))
        image.load()
        return image


def generate(
    provider: OutpaintingProvider,
    comp: CanvasComposition,
    crop_source: CropSource,
    now: Callable[[], float] = time.time,
) -> GeneratedImage:
    """Run one outpainting generation for a finished composition.

    Raises:
        CanvasError: composition not ready (no placements / empty prompt).
        OutpaintingError: provider failure or canvas larger than the
            provider supports.
        ProviderContractError: result dimensions differ from the canvas.
    """
    if not comp.placements:
        raise CanvasError("nothing placed")
    if not comp.prompt.strip():
        raise CanvasError("prompt required")
    if provider.max_side is not None and comp.side > provider.max_side:
        raise OutpaintingError(
            f"canvas side {comp.side} exceeds provider limit {provider.max_side}"
        )
    base, mask = render_base(comp, crop_source)
    result = provider.outpaint(base, mask, comp.prompt)
    if result.size != (comp.side, comp.side):
        raise ProviderContractError(
            f"provider contract violation: got {result.size}, want {(comp.side, comp.side)}"
        )
    buf = io.BytesIO()
    result.convert("RGB").save(buf, format="PNG")
    return GeneratedImage(
        composition=comp,
        provider_id=provider.provider_id,
        image_bytes=buf.getvalue(),
        created_at=now(),
    )


def _png_b64(image: Image.Image) -> str:
    buf = io.BytesIO()
    image.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")
