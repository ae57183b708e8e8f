"""Distribution statistics, balanced subset selection, and crop extraction.

This is the stage between raw detections and the browsable catalog: count
what was detected, keep up to k instances per label by confidence, cut
the kept detections out of their paintings pixel-exactly, and register
everything. Re-running on unchanged inputs is a no-op.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np
from PIL import Image

from artexplore.ingestion import Detection, IngestError, fetch_image
from artexplore.metrics.boxes import BoundingBox, GeometryError, clamp
from artexplore.taxonomy import Taxonomy

if TYPE_CHECKING:  # pragma: no cover
    from artexplore.catalog import Catalog

logger = logging.getLogger(__name__)

DEFAULT_K_PER_LABEL = 100
DEFAULT_MIN_SIDE = 32

SKEW_TOP_CATEGORIES = 4
SKEW_SHARE_THRESHOLD_PERCENT = 70


@dataclass(frozen=True)
class CollectionStats:
    """Exact counts and shares over a set of detections."""

    total_detections: int
    paintings_with_detections: int
    per_label: dict[str, int]
    per_category: dict[str, tuple[int, float]]
    skewed: bool

    def to_dict(self) -> dict:
        return {
            "total_detections": self.total_detections,
            "paintings_with_detections": self.paintings_with_detections,
            "per_label": dict(sorted(self.per_label.items())),
            "per_category": {
                c: {"count": n, "share": s}
                for c, (n, s) in sorted(self.per_category.items())
            },
            "skewed": self.skewed,
        }


@dataclass(frozen=True)
class SubsetSpec:
    """Up-to-k-per-label selection rule: highest confidence first, ties by
    ascending detection id."""

    k_per_label: int = DEFAULT_K_PER_LABEL

    def __post_init__(self):
        if self.k_per_label < 1:
            raise ValueError(f"k_per_label must be >= 1: {self.k_per_label}")


@dataclass(frozen=True)
class ObjectCrop:
    """Pixel-exact cutout of one detection, content-addressed."""

    detection_id: str
    crop_box: BoundingBox
    width: int
    height: int
    pixel_digest: str
    storage_path: str


class CropSkipped(Exception):
    """Crop not extracted; ``reason`` says why."""

    reason = "skipped"


class CropTooSmall(CropSkipped):
    reason = "too small"


class CropEmpty(CropSkipped):
    reason = "empty after clamp"


def compute_stats(detections: Sequence[Detection], taxonomy: Taxonomy) -> CollectionStats:
    """Count detections per label and category, with category shares.

    The skew flag is set when the top four categories (fewer if fewer
    exist) jointly hold more than 70% of all detections; the comparison
    is exact integer arithmetic.
    """
    per_label: dict[str, int] = {}
    per_category_counts: dict[str, int] = {}
    artworks: set[str] = set()
    for det in detections:
        per_label[det.label_name] = per_label.get(det.label_name, 0) + 1
        per_category_counts[det.category] = per_category_counts.get(det.category, 0) + 1
        artworks.add(det.artwork_id)
    total = len(detections)
    per_category = {
        c: (n, n / total if total else 0.0) for c, n in per_category_counts.items()
    }
    skewed = False
    if total > 0:
        top = sorted(per_category_counts.values(), reverse=True)[:SKEW_TOP_CATEGORIES]
        skewed = sum(top) * 100 > SKEW_SHARE_THRESHOLD_PERCENT * total
    return CollectionStats(
        total_detections=total,
        paintings_with_detections=len(artworks),
        per_label=per_label,
        per_category=per_category,
        skewed=skewed,
    )


def select_subset(detections: Iterable[Detection], spec: SubsetSpec) -> list[Detection]:
    """Keep the top-k detections of every label independently.

    Ranking is by descending confidence, ties by ascending detection id;
    output is ordered by (label, rank). Depends only on the confidence
    ordering, never on the values.
    """
    groups: dict[str, list[Detection]] = {}
    for det in detections:
        groups.setdefault(det.label_name, []).append(det)
    out: list[Detection] = []
    for label in sorted(groups):
        ranked = sorted(groups[label], key=lambda d: (-d.confidence, d.id))
        out.extend(ranked[: spec.k_per_label])
    return out


# --- crop extraction ------------------------------------------------------


def crop_rect(box: BoundingBox, width: int, height: int) -> tuple[int, int, int, int]:
    """Integer crop rectangle: clamp to the image, then round outward.

    Mins are floored and maxes ceiled so no annotated pixel is lost.

    Raises:
        GeometryError: box entirely outside the image.
    """
    clamped = clamp(box, float(width), float(height))
    return (
        int(math.floor(clamped.x_min)),
        int(math.floor(clamped.y_min)),
        int(math.ceil(clamped.x_max)),
        int(math.ceil(clamped.y_max)),
    )


def pixel_digest(image: Image.Image) -> str:
    """Content hash over the decoded pixels (mode, size, raw bytes)."""
    h = hashlib.sha256()
    h.update(f"{image.mode}:{image.width}x{image.height}:".encode("ascii"))
    h.update(image.tobytes())
    return h.hexdigest()


def extract_crop(
    image: Image.Image,
    detection: Detection,
    min_side: int,
    crops_root: str | Path,
) -> ObjectCrop:
    """Cut a detection out of its painting and store it.

    The stored file is a lossless PNG of the exact source region, written
    under ``<crops_root>/<category>/<detection_id>.png`` with a
    ``.digest`` sidecar carrying the pixel digest.

    Raises:
        CropEmpty: box entirely outside the image.
        CropTooSmall: either crop dimension below ``min_side``.
    """
    try:
        x0, y0, x1, y1 = crop_rect(detection.box, image.width, image.height)
    except GeometryError as exc:
        raise CropEmpty(str(exc)) from exc
    width, height = x1 - x0, y1 - y0
    if width < min_side or height < min_side:
        raise CropTooSmall(f"crop {width}x{height} below min side {min_side}")

    region = image.crop((x0, y0, x1, y1))
    digest = pixel_digest(region)
    rel = Path(detection.category) / f"{detection.id}.png"
    target = Path(crops_root) / rel
    target.parent.mkdir(parents=True, exist_ok=True)
    region.save(target, format="PNG")
    target.with_suffix(".digest").write_text(digest + "\n", encoding="ascii")
    return ObjectCrop(
        detection_id=detection.id,
        crop_box=BoundingBox(float(x0), float(y0), float(x1), float(y1)),
        width=width,
        height=height,
        pixel_digest=digest,
        storage_path=str(rel),
    )


def palette_from_image(image: Image.Image, n_colors: int = 6) -> tuple[str, ...]:
    """Most frequent colors after uniform 4-bit-per-channel quantization.

    Deterministic: bins ranked by count descending, ties by ascending bin
    code; bin (r, g, b) maps back to hex as channel value * 17.
    """
    arr = np.asarray(image.convert("RGB"), dtype=np.uint8).reshape(-1, 3) >> 4
    codes = (
        (arr[:, 0].astype(np.int32) << 8)
        | (arr[:, 1].astype(np.int32) << 4)
        | arr[:, 2].astype(np.int32)
    )
    counts = np.bincount(codes, minlength=4096)
    order = np.argsort(-counts, kind="stable")
    out: list[str] = []
    for code in order[:n_colors]:
        if counts[code] == 0:
            break
        r, g, b = (code >> 8) & 0xF, (code >> 4) & 0xF, code & 0xF
        out.append(f"#{r * 17:02x}{g * 17:02x}{b * 17:02x}")
    return tuple(out)


# --- end-to-end pipeline ----------------------------------------------------


@dataclass
class PipelineReport:
    """Per-stage counts of one curation run; see docs/formats.md."""

    total_detections: int = 0
    selected: int = 0
    crops_written: int = 0
    already_present: int = 0
    skipped_too_small: int = 0
    skipped_empty: int = 0
    missing_image: int = 0
    palettes_computed: int = 0
    skips: list[dict] = field(default_factory=list)
    stats: CollectionStats | None = None

    @property
    def new_items(self) -> int:
        return self.crops_written

    def to_dict(self) -> dict:
        return {
            "total_detections": self.total_detections,
            "selected": self.selected,
            "crops_written": self.crops_written,
            "already_present": self.already_present,
            "skipped_too_small": self.skipped_too_small,
            "skipped_empty": self.skipped_empty,
            "missing_image": self.missing_image,
            "palettes_computed": self.palettes_computed,
            "new_items": self.new_items,
            "skips": self.skips,
            "stats": self.stats.to_dict() if self.stats else None,
        }

    def format_text(self) -> str:
        lines = [
            f"detections:        {self.total_detections}",
            f"selected (subset): {self.selected}",
            f"crops written:     {self.crops_written}",
            f"already present:   {self.already_present}",
            f"skipped too small: {self.skipped_too_small}",
            f"skipped empty:     {self.skipped_empty}",
            f"missing image:     {self.missing_image}",
            f"new items:         {self.new_items}",
        ]
        return "\n".join(lines)


def run_pipeline(
    catalog: "Catalog",
    taxonomy: Taxonomy,
    spec: SubsetSpec | None = None,
    min_side: int = DEFAULT_MIN_SIDE,
    cache_dir: str | Path | None = None,
) -> PipelineReport:
    """Stats -> subset -> crops -> registration, idempotently.

    Detections whose crops already exist are counted as already present
    and skipped, so a second run over unchanged inputs writes nothing.
    Per-item failures (missing image, too-small crop) are collected into
    the report; only storage failures raise.
    """
    spec = spec or SubsetSpec()
    cache = Path(cache_dir) if cache_dir else catalog.images_dir
    detections = catalog.all_detections()
    report = PipelineReport(total_detections=len(detections))
    report.stats = compute_stats(detections, taxonomy)

    subset = select_subset(detections, spec)
    report.selected = len(subset)

    image_paths: dict[str, Path | None] = {}
    for det in subset:
        if catalog.get_crop(det.id) is not None:
            report.already_present += 1
            continue
        if det.artwork_id not in image_paths:
            image_paths[det.artwork_id] = _resolve_image(catalog, det.artwork_id, cache, report)
        path = image_paths[det.artwork_id]
        if path is None:
            report.missing_image += 1
            report.skips.append(
                {"detection_id": det.id, "reason": "missing image", "artwork_id": det.artwork_id}
            )
            continue
        with Image.open(path) as im:
            im.load()
            try:
                crop = extract_crop(im, det, min_side, catalog.crops_dir)
            except CropSkipped as exc:
                if isinstance(exc, CropTooSmall):
                    report.skipped_too_small += 1
                else:
                    report.skipped_empty += 1
                report.skips.append({"detection_id": det.id, "reason": exc.reason})
                continue
            catalog.put_crop(crop)
            report.crops_written += 1

    report.palettes_computed = _fill_missing_palettes(catalog, subset, image_paths)
    return report


def _resolve_image(catalog: "Catalog", artwork_id: str, cache: Path, report: PipelineReport):
    artwork = catalog.get_artwork(artwork_id)
    if artwork is None or not artwork.image_ref:
        return None
    try:
        path = fetch_image(artwork, cache)
    except IngestError as exc:
        logger.warning("image unavailable for artwork %s: %s", artwork_id, exc)
        return None
    if artwork.image_width is not None:
        catalog.put_artwork(artwork, overwrite=True)
    return path


def _fill_missing_palettes(
    catalog: "Catalog", subset: Sequence[Detection], image_paths: dict[str, Path | None]
) -> int:
    computed = 0
    for artwork_id in sorted({d.artwork_id for d in subset}):
        artwork = catalog.get_artwork(artwork_id)
        if artwork is None or artwork.palette:
            continue
        path = image_paths.get(artwork_id)
        if path is None:
            continue
        with Image.open(path) as im:
            artwork.palette = palette_from_image(im)
        catalog.put_artwork(artwork, overwrite=True)
        computed += 1
    return computed
