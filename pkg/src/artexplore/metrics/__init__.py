"""Bounding-box geometry and detection-quality evaluation."""

from artexplore.metrics.backend import kernels
from artexplore.metrics.boxes import (
    BoundingBox,
    GeometryError,
    clamp,
    filter_by_confidence,
    intersection_area,
    iou,
)
from artexplore.metrics.evaluation import (
    COCO_THRESHOLDS,
    EvalReport,
    GroundTruthBox,
    average_precision,
    coco_ap,
    match_detections,
    read_ground_truth,
)

__all__ = [
    "BoundingBox",
    "COCO_THRESHOLDS",
    "EvalReport",
    "GeometryError",
    "GroundTruthBox",
    "average_precision",
    "clamp",
    "coco_ap",
    "filter_by_confidence",
    "intersection_area",
    "iou",
    "kernels",
    "match_detections",
    "read_ground_truth",
]
