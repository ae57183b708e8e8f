"""Axis-aligned bounding-box geometry.

Boxes are real-valued pixel rectangles with origin at the top-left corner
and y growing downward. Zero-area (degenerate) boxes are legal inputs
everywhere; their IoU with anything is 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

if TYPE_CHECKING:  # pragma: no cover
    from artexplore.ingestion import Detection


class GeometryError(ValueError):
    """Raised for invalid boxes and out-of-range arguments."""


@dataclass(frozen=True)
class BoundingBox:
    """Rectangle (x_min, y_min) .. (x_max, y_max) in pixels."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        for v in (self.x_min, self.y_min, self.x_max, self.y_max):
            if not math.isfinite(v):
                raise GeometryError(f"non-finite box coordinate: {v!r}")
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise GeometryError(f"inverted box: {self.as_tuple()}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)

    @classmethod
    def from_sequence(cls, values: Sequence[float]) -> "BoundingBox":
        x_min, y_min, x_max, y_max = (float(v) for v in values)
        return cls(x_min, y_min, x_max, y_max)


def intersection_area(a: BoundingBox, b: BoundingBox) -> float:
    """Area of the overlap rectangle, 0 when the boxes are disjoint."""
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    return iw * ih


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes, in [0, 1].

    Defined as 0 when the union has zero area (both boxes degenerate).
    """
    inter = intersection_area(a, b)
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def clamp(box: BoundingBox, width: float, height: float) -> BoundingBox:
    """Clip a box to the image rectangle [0, width] x [0, height].

    Raises:
        GeometryError: if width/height are not positive, or the box lies
            strictly outside the image ("empty after clamp").
    """
    if width <= 0 or height <= 0:
        raise GeometryError(f"image dimensions must be positive: {width}x{height}")
    if box.x_min > width or box.x_max < 0 or box.y_min > height or box.y_max < 0:
        raise GeometryError(f"empty after clamp: {box.as_tuple()} outside {width}x{height}")
    return BoundingBox(
        x_min=min(max(box.x_min, 0.0), width),
        y_min=min(max(box.y_min, 0.0), height),
        x_max=min(max(box.x_max, 0.0), width),
        y_max=min(max(box.y_max, 0.0), height),
    )


def filter_by_confidence(detections: Iterable["Detection"], cutoff: float) -> list["Detection"]:
    """Keep detections with confidence >= cutoff, preserving order.

    Raises:
        GeometryError: if cutoff is outside [0, 1].
    """
    if not 0.0 <= cutoff <= 1.0:
        raise GeometryError(f"cutoff outside [0, 1]: {cutoff}")
    return [d for d in detections if d.confidence >= cutoff]
