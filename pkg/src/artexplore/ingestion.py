"""Artwork and detection acquisition.

Artwork metadata comes from a museum collection HTTP API (or offline
JSONL fixtures), images go through a content-addressed on-disk cache,
and detections are obtained either by importing precomputed record files
or by calling a detector service over the wire protocol documented in
protocol/ (POST /detect with prompt + image, detections array back).
"""

from __future__ import annotations

import base64
import hashlib
import io
import json
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator

import httpx
from PIL import Image

from artexplore.metrics.boxes import BoundingBox, GeometryError, clamp
from artexplore.taxonomy import Taxonomy, TaxonomyError, build_prompt, category_of, parse_prompt

logger = logging.getLogger(__name__)

RETRY_ATTEMPTS = 3
RETRY_BACKOFF_SECONDS = 0.5


class IngestError(Exception):
    """Unrecoverable acquisition failure (network, decode, bad file)."""


class ProtocolError(IngestError):
    """The detector service violated the wire protocol."""


@dataclass
class Artwork:
    """Collection metadata record plus image reference."""

    id: str
    title: str = ""
    artist: str = ""
    technique: str = ""
    production_year: tuple[int, int] | None = None
    image_ref: str = ""
    image_width: int | None = None
    image_height: int | None = None
    palette: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("artwork id must be non-empty")
        for dim in (self.image_width, self.image_height):
            if dim is not None and dim <= 0:
                raise ValueError(f"image dimensions must be positive: {dim}")


@dataclass(frozen=True)
class Detection:
    """One labeled bounding box with confidence on one artwork."""

    id: str
    artwork_id: str
    label_name: str
    category: str
    box: BoundingBox
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence outside [0, 1]: {self.confidence}")


def detection_id(artwork_id: str, label: str, box: BoundingBox, confidence: float) -> str:
    """Deterministic detection identifier: digest of the defining fields."""
    key = "|".join(
        [artwork_id, label]
        + [repr(float(v)) for v in box.as_tuple()]
        + [repr(float(confidence))]
    )
    return hashlib.sha256(key.encode("utf-8")).hexdigest()[:16]


def make_detection(
    taxonomy: Taxonomy,
    artwork_id: str,
    label_name: str,
    box: BoundingBox,
    confidence: float,
) -> Detection:
    """Build a Detection with its category resolved and id derived."""
    return Detection(
        id=detection_id(artwork_id, label_name, box, confidence),
        artwork_id=artwork_id,
        label_name=label_name,
        category=category_of(taxonomy, label_name),
        box=box,
        confidence=confidence,
    )


def detection_to_record(d: Detection) -> dict:
    """Line-delimited record form (docs/formats.md, detection records)."""
    return {
        "artwork_id": d.artwork_id,
        "label": d.label_name,
        "x_min": d.box.x_min,
        "y_min": d.box.y_min,
        "x_max": d.box.x_max,
        "y_max": d.box.y_max,
        "confidence": d.confidence,
    }


def detection_from_record(rec: dict, taxonomy: Taxonomy) -> Detection:
    box = BoundingBox(
        float(rec["x_min"]), float(rec["y_min"]), float(rec["x_max"]), float(rec["y_max"])
    )
    return make_detection(
        taxonomy,
        artwork_id=str(rec["artwork_id"]),
        label_name=str(rec["label"]),
        box=box,
        confidence=float(rec["confidence"]),
    )


@dataclass(frozen=True)
class PredictionRecord:
    """Detection record without taxonomy resolution, for evaluation runs
    whose labels (e.g. benchmark datasets) are outside the taxonomy."""

    id: str
    artwork_id: str
    label: str
    box: BoundingBox
    confidence: float


def read_predictions(path: str | Path) -> list[PredictionRecord]:
    """Read line-delimited detection records without taxonomy validation."""
    out: list[PredictionRecord] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                box = BoundingBox(
                    float(rec["x_min"]),
                    float(rec["y_min"]),
                    float(rec["x_max"]),
                    float(rec["y_max"]),
                )
                out.append(
                    PredictionRecord(
                        id=detection_id(
                            str(rec["artwork_id"]), str(rec["label"]), box, float(rec["confidence"])
                        ),
                        artwork_id=str(rec["artwork_id"]),
                        label=str(rec["label"]),
                        box=box,
                        confidence=float(rec["confidence"]),
                    )
                )
            except (KeyError, ValueError, TypeError, GeometryError) as exc:
                raise IngestError(f"{path}:{lineno}: bad prediction record: {exc}") from exc
    return out


# --- collection API -------------------------------------------------------

DEFAULT_FIELD_MAP = {
    "id": "id",
    "title": "title",
    "artist": "artist",
    "technique": "technique",
    "object_type": "object_type",
    "year_start": "year_start",
    "year_end": "year_end",
    "image": "image",
    "width": "image_width",
    "height": "image_height",
    "palette": "palette",
}


@dataclass
class CollectionConfig:
    """Where and how to read artwork metadata.

    Exactly one of ``base_url`` (live API) or ``fixture_dir`` (offline
    JSONL records) should be set. ``field_map`` maps our record fields to
    the deployment's key names.
    """

    base_url: str = ""
    fixture_dir: str = ""
    object_type: str = "painting"
    page_size: int = 100
    api_key: str = ""
    items_key: str = "items"
    type_param: str = "object_type"
    offset_param: str = "offset"
    limit_param: str = "limit"
    field_map: dict = field(default_factory=lambda: dict(DEFAULT_FIELD_MAP))


def _normalize_year(raw: dict, fm: dict) -> tuple[int, int] | None:
    start = raw.get(fm["year_start"])
    end = raw.get(fm["year_end"])
    if start is None and end is None:
        return None
    if start is None:
        start = end
    if end is None:
        end = start
    return (int(start), int(end))


def normalize_artwork(raw: dict, field_map: dict | None = None) -> Artwork:
    """Map one source record onto an Artwork.

    Raises:
        ValueError/KeyError/TypeError: malformed record (callers skip + log).
    """
    fm = dict(DEFAULT_FIELD_MAP)
    if field_map:
        fm.update(field_map)
    palette = raw.get(fm["palette"])
    if palette is not None:
        palette = tuple(str(c).lower() for c in palette)
    width = raw.get(fm["width"])
    height = raw.get(fm["height"])
    return Artwork(
        id=str(raw[fm["id"]]),
        title=str(raw.get(fm["title"], "") or ""),
        artist=str(raw.get(fm["artist"], "") or ""),
        technique=str(raw.get(fm["technique"], "") or ""),
        production_year=_normalize_year(raw, fm),
        image_ref=str(raw.get(fm["image"], "") or ""),
        image_width=int(width) if width is not None else None,
        image_height=int(height) if height is not None else None,
        palette=palette,
    )


def _request_with_retries(
    send: Callable[[], httpx.Response],
    what: str,
    sleep: Callable[[float], None] = time.sleep,
) -> httpx.Response:
    """Bounded retries with exponential backoff for transient failures."""
    last: Exception | None = None
    for attempt in range(RETRY_ATTEMPTS):
        try:
            resp = send()
            if resp.status_code >= 500:
                raise IngestError(f"{what}: server error {resp.status_code}")
            resp.raise_for_status()
            return resp
        except (httpx.TransportError, IngestError) as exc:
            last = exc
            if attempt < RETRY_ATTEMPTS - 1:
                sleep(RETRY_BACKOFF_SECONDS * 2**attempt)
        except httpx.HTTPStatusError as exc:
            raise IngestError(f"{what}: {exc}") from exc
    raise IngestError(f"{what}: giving up after {RETRY_ATTEMPTS} attempts: {last}")


def fetch_artworks(
    config: CollectionConfig,
    object_type: str | None = None,
    client: httpx.Client | None = None,
    sleep: Callable[[float], None] = time.sleep,
    on_skip: Callable[[str], None] | None = None,
) -> Iterator[Artwork]:
    """Yield normalized artworks matching the object-type filter.

    Fixture mode reads every ``*.jsonl`` file under ``fixture_dir`` and
    yields in deterministic ascending-id order. API mode paginates with
    offset/limit until a short or empty page. Malformed records are
    skipped and logged, never fatal.
    """
    wanted = object_type if object_type is not None else config.object_type
    if config.fixture_dir:
        yield from _fetch_artworks_fixture(config, wanted, on_skip)
        return
    if not config.base_url:
        raise IngestError("collection source not configured (base_url or fixture_dir)")

    own_client = client is None
    if own_client:
        client = httpx.Client(timeout=30.0)
    try:
        offset = 0
        while True:
            params = {config.offset_param: offset, config.limit_param: config.page_size}
            if wanted:
                params[config.type_param] = wanted
            headers = {"Authorization": f"Bearer {config.api_key}"} if config.api_key else {}
            url = config.base_url.rstrip("/") + "/artworks"
            resp = _request_with_retries(
                lambda: client.get(url, params=params, headers=headers),
                f"collection GET {url} offset={offset}",
                sleep=sleep,
            )
            items = resp.json().get(config.items_key, [])
            for raw in items:
                try:
                    yield normalize_artwork(raw, config.field_map)
                except (KeyError, ValueError, TypeError) as exc:
                    logger.warning("skipping malformed collection record %r: %s", raw, exc)
                    if on_skip is not None:
                        on_skip(str(exc))
            if len(items) < config.page_size:
                return
            offset += config.page_size
    finally:
        if own_client:
            client.close()


def _fetch_artworks_fixture(
    config: CollectionConfig, wanted: str, on_skip: Callable[[str], None] | None = None
) -> Iterator[Artwork]:
    fixture = Path(config.fixture_dir)
    records: list[Artwork] = []
    type_key = config.field_map.get("object_type", "object_type")
    for file in sorted(fixture.glob("*.jsonl")):
        for lineno, line in enumerate(file.read_text(encoding="utf-8").splitlines(), 1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
                if wanted and raw.get(type_key) not in (None, wanted):
                    continue
                records.append(normalize_artwork(raw, config.field_map))
            except (KeyError, ValueError, TypeError) as exc:
                logger.warning("skipping malformed record %s:%d: %s", file.name, lineno, exc)
                if on_skip is not None:
                    on_skip(f"{file.name}:{lineno}: {exc}")
    records.sort(key=lambda a: a.id)
    yield from records


# --- image cache ----------------------------------------------------------


def _atomic_write(path: Path, data: bytes) -> None:
    """Idempotent content write: concurrent writers of the same bytes are safe."""
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def fetch_image(
    artwork: Artwork,
    cache_dir: str | Path,
    client: httpx.Client | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> Path:
    """Fetch an artwork's image into the content-addressed cache.

    File names are digests of the image bytes, so identical images share
    one entry; a per-reference pointer file makes repeat calls hit the
    cache without refetching. Updates the artwork's dimensions in place
    when they were unknown.

    Raises:
        IngestError: missing reference, unreachable source, or bytes that
            do not decode as an image (nothing is cached in that case).
    """
    if not artwork.image_ref:
        raise IngestError(f"artwork {artwork.id} has no image reference")
    cache = Path(cache_dir)
    refs = cache / "refs"
    refs.mkdir(parents=True, exist_ok=True)
    ref_key = hashlib.sha256(artwork.image_ref.encode("utf-8")).hexdigest()[:24]
    pointer = refs / f"{ref_key}.txt"
    if pointer.exists():
        cached = cache / pointer.read_text(encoding="utf-8").strip()
        if cached.exists():
            _apply_dims(artwork, cached)
            return cached

    data = _read_image_bytes(artwork.image_ref, client, sleep)
    try:
        with Image.open(io.BytesIO(data)) as im:
            im.load()
            width, height = im.size
            fmt = (im.format or "png").lower()
    except Exception as exc:
        raise IngestError(f"undecodable image for artwork {artwork.id}: {exc}") from exc

    name = f"{hashlib.sha256(data).hexdigest()[:32]}.{fmt}"
    target = cache / name
    if not target.exists():
        _atomic_write(target, data)
    _atomic_write(pointer, name.encode("utf-8"))
    if artwork.image_width is None or artwork.image_height is None:
        artwork.image_width, artwork.image_height = width, height
    return target


def _read_image_bytes(ref: str, client: httpx.Client | None, sleep) -> bytes:
    if ref.startswith(("http://", "https://")):
        own_client = client is None
        if own_client:
            client = httpx.Client(timeout=30.0)
        try:
            resp = _request_with_retries(
                lambda: client.get(ref), f"image GET {ref}", sleep=sleep
            )
            return resp.content
        finally:
            if own_client:
                client.close()
    path = Path(ref)
    if not path.exists():
        raise IngestError(f"image path does not exist: {ref}")
    return path.read_bytes()


def _apply_dims(artwork: Artwork, image_path: Path) -> None:
    if artwork.image_width is not None and artwork.image_height is not None:
        return
    with Image.open(image_path) as im:
        artwork.image_width, artwork.image_height = im.size


# --- detection import -----------------------------------------------------


def import_detections(
    path: str | Path,
    taxonomy: Taxonomy,
    on_reject: Callable[[int, str], None] | None = None,
) -> list[Detection]:
    """Read a line-delimited detection record file.

    Records with labels outside the taxonomy, confidences outside [0, 1],
    or invalid boxes are rejected (logged, optionally reported through
    ``on_reject``); valid records become Detections with deterministic
    digest ids, so re-imports and duplicate lines deduplicate exactly.
    """
    out: list[Detection] = []
    seen: set[str] = set()

    def reject(lineno: int, reason: str) -> None:
        logger.warning("rejecting detection record %s:%d: %s", path, lineno, reason)
        if on_reject is not None:
            on_reject(lineno, reason)

    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                det = detection_from_record(json.loads(line), taxonomy)
            except TaxonomyError as exc:
                reject(lineno, f"unknown label: {exc}")
                continue
            except (KeyError, ValueError, TypeError, GeometryError) as exc:
                reject(lineno, str(exc))
                continue
            if det.id in seen:
                continue
            seen.add(det.id)
            out.append(det)
    return out


# --- detector wire protocol -----------------------------------------------


@dataclass(frozen=True)
class DetectorRequest:
    """POST /detect payload: one image, the prompt, the confidence cutoff."""

    prompt: str
    cutoff: float
    image_url: str | None = None
    image_b64: str | None = None

    def to_wire(self) -> dict:
        payload: dict = {"prompt": self.prompt, "cutoff": self.cutoff}
        if self.image_url is not None:
            payload["image_url"] = self.image_url
        if self.image_b64 is not None:
            payload["image_b64"] = self.image_b64
        return payload

    @classmethod
    def from_wire(cls, payload: dict) -> "DetectorRequest":
        if "prompt" not in payload or "cutoff" not in payload:
            raise ProtocolError("request missing prompt or cutoff")
        if not payload.get("image_url") and not payload.get("image_b64"):
            raise ProtocolError("request carries neither image_url nor image_b64")
        return cls(
            prompt=str(payload["prompt"]),
            cutoff=float(payload["cutoff"]),
            image_url=payload.get("image_url"),
            image_b64=payload.get("image_b64"),
        )


def validate_detector_response(payload: dict, prompt: str) -> list[tuple[str, BoundingBox, float]]:
    """Check a /detect response against the protocol and the request prompt.

    Every returned label must be one of the prompt's label names; boxes
    and confidences must be well-formed.

    Raises:
        ProtocolError: on any violation.
    """
    allowed = set(parse_prompt(prompt))
    if not isinstance(payload, dict) or "detections" not in payload:
        raise ProtocolError("response missing detections array")
    out: list[tuple[str, BoundingBox, float]] = []
    for i, item in enumerate(payload["detections"]):
        try:
            label = str(item["label"])
            raw_box = item["box"]
            box = BoundingBox(
                float(raw_box["x_min"]),
                float(raw_box["y_min"]),
                float(raw_box["x_max"]),
                float(raw_box["y_max"]),
            )
            confidence = float(item["confidence"])
        except (KeyError, TypeError, ValueError, GeometryError) as exc:
            raise ProtocolError(f"malformed detection #{i}: {exc}") from exc
        if label not in allowed:
            raise ProtocolError(f"detection #{i} label {label!r} not in request prompt")
        if not 0.0 <= confidence <= 1.0:
            raise ProtocolError(f"detection #{i} confidence outside [0, 1]: {confidence}")
        out.append((label, box, confidence))
    return out


def request_detections(
    endpoint: str,
    artwork: Artwork,
    taxonomy: Taxonomy,
    cutoff: float,
    cache_dir: str | Path,
    client: httpx.Client | None = None,
    timeout: float = 120.0,
    sleep: Callable[[float], None] = time.sleep,
) -> list[Detection]:
    """Obtain detections for one artwork from a detector service.

    Sends the taxonomy prompt and the image (inline when local, by URL
    otherwise), validates the response against the protocol, applies the
    confidence cutoff client-side, and clamps boxes to the image; boxes
    entirely outside the image are dropped and logged.
    """
    image_path = fetch_image(artwork, cache_dir, client=client, sleep=sleep)
    prompt = build_prompt(taxonomy)
    if artwork.image_ref.startswith(("http://", "https://")):
        request = DetectorRequest(prompt=prompt, cutoff=cutoff, image_url=artwork.image_ref)
    else:
        encoded = base64.b64encode(image_path.read_bytes()).decode("ascii")
        request = DetectorRequest(prompt=prompt, cutoff=cutoff, image_b64=encoded)

    own_client = client is None
    if own_client:
        client = httpx.Client(timeout=timeout)
    try:
        url = endpoint.rstrip("/") + "/detect"
        resp = _request_with_retries(
            lambda: client.post(url, json=request.to_wire()),
            f"detector POST {url}",
            sleep=sleep,
        )
    finally:
        if own_client:
            client.close()

    raw = validate_detector_response(resp.json(), prompt)
    width = float(artwork.image_width)
    height = float(artwork.image_height)
    detections: list[Detection] = []
    for label, box, confidence in raw:
        if confidence < cutoff:
            continue
        try:
            clamped = clamp(box, width, height)
        except GeometryError:
            logger.warning(
                "dropping detection outside image bounds: artwork=%s label=%s box=%s",
                artwork.id,
                label,
                box.as_tuple(),
            )
            continue
        detections.append(make_detection(taxonomy, artwork.id, label, clamped, confidence))
    return detections
