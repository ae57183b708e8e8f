"""Detection-quality evaluation: greedy matching, precision-recall, AP.

The matching protocol is the COCO-style greedy one: predictions are
processed in descending confidence (ties broken by ascending detection
id); each prediction claims the not-yet-matched ground truth with the
highest IoU at or above the threshold; each ground truth is used at most
once. AP is the all-points interpolated area under the precision
envelope over recall, and the COCO-style report averages AP over the ten
IoU thresholds 0.50 to 0.95 in steps of 0.05.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from artexplore.metrics.backend import kernels
from artexplore.metrics.boxes import BoundingBox

if TYPE_CHECKING:  # pragma: no cover
    from artexplore.ingestion import Detection

COCO_THRESHOLDS = tuple(round(0.50 + 0.05 * i, 2) for i in range(10))


@dataclass(frozen=True)
class GroundTruthBox:
    """One annotated object on one artwork."""

    artwork_id: str
    label: str
    box: BoundingBox

    def __post_init__(self):
        if not self.label:
            raise ValueError("ground truth label must be non-empty")


@dataclass(frozen=True)
class EvalReport:
    """AP per IoU threshold plus their mean and the raw PR points."""

    per_threshold: dict[float, float]
    mean_ap: float
    pr_points: dict[float, list[tuple[float, float]]]

    def to_dict(self) -> dict:
        return {
            "per_threshold": {f"{t:.2f}": ap for t, ap in self.per_threshold.items()},
            "mean_ap": self.mean_ap,
            "pr_points": {
                f"{t:.2f}": [[r, p] for r, p in points]
                for t, points in self.pr_points.items()
            },
        }

    def format_text(self) -> str:
        lines = ["IoU threshold    AP"]
        for t in sorted(self.per_threshold):
            lines.append(f"  {t:.2f}          {self.per_threshold[t]:.4f}")
        lines.append(f"mean AP (0.50:0.95): {self.mean_ap:.4f}")
        return "\n".join(lines)


def _rank_order(preds: Sequence["Detection"]) -> list["Detection"]:
    return sorted(preds, key=lambda d: (-d.confidence, d.id))


def _boxes_array(boxes: Iterable[BoundingBox]) -> np.ndarray:
    return np.asarray([b.as_tuple() for b in boxes], dtype=np.float64).reshape(-1, 4)


def match_detections(
    preds: Sequence["Detection"],
    gts: Sequence[GroundTruthBox],
    iou_threshold: float,
) -> list[tuple["Detection", GroundTruthBox | None]]:
    """Greedy-match predictions against ground truths of one artwork and label.

    Returns (prediction, matched ground truth or None) pairs in processing
    order (descending confidence, ties by ascending id).
    """
    ranked = _rank_order(preds)
    matched = kernels.greedy_match(
        _boxes_array(p.box for p in ranked),
        _boxes_array(g.box for g in gts),
        iou_threshold,
    )
    return [(p, gts[j] if j >= 0 else None) for p, j in zip(ranked, matched)]


def _ranked_tp_flags(
    ranked: Sequence["Detection"],
    gts_by_artwork: dict[str, list[GroundTruthBox]],
    iou_threshold: float,
) -> np.ndarray:
    """True-positive flags aligned with the global prediction ranking.

    Matching runs independently per artwork; the ranking (and therefore
    the PR curve) pools all predictions.
    """
    flags = np.zeros(len(ranked), dtype=np.float64)
    groups: dict[str, list[int]] = {}
    for idx, pred in enumerate(ranked):
        groups.setdefault(pred.artwork_id, []).append(idx)
    for artwork_id, indices in groups.items():
        gts = gts_by_artwork.get(artwork_id)
        if not gts:
            continue
        matched = kernels.greedy_match(
            _boxes_array(ranked[i].box for i in indices),
            _boxes_array(g.box for g in gts),
            iou_threshold,
        )
        for pos, i in enumerate(indices):
            if matched[pos] >= 0:
                flags[i] = 1.0
    return flags


def _ap_from_tp_flags(flags: np.ndarray, n_gt: int) -> float:
    """All-points interpolated AP from ranked true-positive flags."""
    n = flags.shape[0]
    if n_gt <= 0:
        return 1.0 if n == 0 else 0.0
    if n == 0:
        return 0.0
    cum_tp = np.cumsum(flags)
    precision = cum_tp / np.arange(1, n + 1, dtype=np.float64)
    recall = cum_tp / float(n_gt)
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    prev_recall = np.concatenate(([0.0], recall[:-1]))
    return float(np.sum((recall - prev_recall) * envelope))


def _pr_points(flags: np.ndarray, n_gt: int) -> list[tuple[float, float]]:
    n = flags.shape[0]
    if n == 0 or n_gt <= 0:
        return []
    cum_tp = np.cumsum(flags)
    precision = cum_tp / np.arange(1, n + 1, dtype=np.float64)
    recall = cum_tp / float(n_gt)
    return list(zip(recall.tolist(), precision.tolist()))


def _group_gts(gts: Sequence[GroundTruthBox]) -> dict[str, list[GroundTruthBox]]:
    grouped: dict[str, list[GroundTruthBox]] = {}
    for gt in gts:
        grouped.setdefault(gt.artwork_id, []).append(gt)
    return grouped


def average_precision(
    preds: Sequence["Detection"],
    gts: Sequence[GroundTruthBox],
    iou_threshold: float,
) -> float:
    """AP for one label class at one IoU threshold.

    Predictions may span artworks; matching is per artwork, the PR curve
    pools all predictions. Defined as 1 when both inputs are empty and 0
    when only the ground truths are.
    """
    if not gts:
        return 1.0 if not preds else 0.0
    ranked = _rank_order(preds)
    flags = _ranked_tp_flags(ranked, _group_gts(gts), iou_threshold)
    return _ap_from_tp_flags(flags, len(gts))


def coco_ap(preds: Sequence["Detection"], gts: Sequence[GroundTruthBox]) -> EvalReport:
    """AP at IoU thresholds 0.50..0.95 (step 0.05) and their mean."""
    ranked = _rank_order(preds)
    gts_by_artwork = _group_gts(gts)
    per_threshold: dict[float, float] = {}
    pr_points: dict[float, list[tuple[float, float]]] = {}
    for threshold in COCO_THRESHOLDS:
        if not gts:
            ap = 1.0 if not preds else 0.0
            flags = np.zeros(len(ranked), dtype=np.float64)
        else:
            flags = _ranked_tp_flags(ranked, gts_by_artwork, threshold)
            ap = _ap_from_tp_flags(flags, len(gts))
        per_threshold[threshold] = ap
        pr_points[threshold] = _pr_points(flags, len(gts))
    mean_ap = sum(per_threshold.values()) / len(per_threshold)
    return EvalReport(per_threshold=per_threshold, mean_ap=mean_ap, pr_points=pr_points)


def read_ground_truth(path: str | Path) -> list[GroundTruthBox]:
    """Read line-delimited ground-truth records.

    Each line is a JSON object with artwork_id, label, x_min, y_min,
    x_max, y_max (docs/formats.md).
    """
    out: list[GroundTruthBox] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                out.append(
                    GroundTruthBox(
                        artwork_id=str(rec["artwork_id"]),
                        label=str(rec["label"]),
                        box=BoundingBox(
                            float(rec["x_min"]),
                            float(rec["y_min"]),
                            float(rec["x_max"]),
                            float(rec["y_max"]),
                        ),
                    )
                )
            except (KeyError, ValueError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad ground-truth record: {exc}") from exc
    return out
