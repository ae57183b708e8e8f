"""Numpy implementations of the evaluation kernels.

Same contracts as the compiled extension (``_native.pyx``); used as the
fallback when the extension is unavailable or explicitly disabled. Both
backends must produce bit-identical results (same float64 operation
order), which the test suite checks.
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"


def _as_boxes(values) -> np.ndarray:
    return np.ascontiguousarray(values, dtype=np.float64).reshape(-1, 4)


def iou_matrix(boxes_a, boxes_b) -> np.ndarray:
    """Pairwise IoU between (N,4) and (M,4) xyxy boxes, as an (N,M) array.

    Entries with zero-area union are 0.
    """
    a = _as_boxes(boxes_a)
    b = _as_boxes(boxes_b)
    n, m = a.shape[0], b.shape[0]
    if n == 0 or m == 0:
        return np.zeros((n, m), dtype=np.float64)
    iw = np.minimum(a[:, None, 2], b[None, :, 2]) - np.maximum(a[:, None, 0], b[None, :, 0])
    ih = np.minimum(a[:, None, 3], b[None, :, 3]) - np.maximum(a[:, None, 1], b[None, :, 1])
    iw = np.maximum(iw, 0.0)
    ih = np.maximum(ih, 0.0)
    inter = iw * ih
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    out = np.zeros_like(inter)
    np.divide(inter, union, out=out, where=union > 0.0)
    return out


def greedy_match(pred_boxes, gt_boxes, threshold: float) -> np.ndarray:
    """Match ranked predictions to ground-truth boxes.

    Prediction rows must already be in match order (descending confidence,
    ascending detection id). Each prediction takes the not-yet-matched
    ground truth with the highest IoU, provided that IoU >= threshold;
    ties go to the lowest ground-truth index; each ground truth is used at
    most once.

    Returns:
        int64 array of length n_pred: matched gt row index, or -1.
    """
    ious = iou_matrix(pred_boxes, gt_boxes)
    n_pred, n_gt = ious.shape
    matched = np.full(n_pred, -1, dtype=np.int64)
    if n_pred == 0 or n_gt == 0:
        return matched
    taken = np.zeros(n_gt, dtype=bool)
    for i in range(n_pred):
        row = np.where(taken, -1.0, ious[i])
        j = int(np.argmax(row))
        if row[j] >= threshold and row[j] >= 0.0:
            matched[i] = j
            taken[j] = True
    return matched
