# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled evaluation kernels: pairwise IoU and greedy ranked matching.

Contracts mirror ``_numpy_backend``; backend selection happens in
``artexplore.metrics.backend`` at import time.
"""

import numpy as np

BACKEND = "native"


def iou_matrix(boxes_a, boxes_b):
    """Pairwise IoU between (N,4) and (M,4) xyxy boxes, as an (N,M) array."""
    a = np.ascontiguousarray(boxes_a, dtype=np.float64).reshape(-1, 4)
    b = np.ascontiguousarray(boxes_b, dtype=np.float64).reshape(-1, 4)
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t m = b.shape[0]
    out = np.zeros((n, m), dtype=np.float64)
    if n == 0 or m == 0:
        return out
    cdef double[:, ::1] av = a
    cdef double[:, ::1] bv = b
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j
    cdef double ax0, ay0, ax1, ay1, area_a, iw, ih, inter, union
    for i in range(n):
        ax0 = av[i, 0]
        ay0 = av[i, 1]
        ax1 = av[i, 2]
        ay1 = av[i, 3]
        area_a = (ax1 - ax0) * (ay1 - ay0)
        for j in range(m):
            iw = min(ax1, bv[j, 2]) - max(ax0, bv[j, 0])
            if iw <= 0.0:
                continue
            ih = min(ay1, bv[j, 3]) - max(ay0, bv[j, 1])
            if ih <= 0.0:
                continue
            inter = iw * ih
            union = area_a + (bv[j, 2] - bv[j, 0]) * (bv[j, 3] - bv[j, 1]) - inter
            if union > 0.0:
                ov[i, j] = inter / union
    return out


def greedy_match(pred_boxes, gt_boxes, double threshold):
    """Match ranked predictions to ground-truth boxes.

    Prediction rows must already be in match order (descending confidence,
    ascending detection id). Each prediction takes the not-yet-matched
    ground truth with the highest IoU, provided that IoU >= threshold;
    ties go to the lowest ground-truth index; each ground truth is used at
    most once. Returns an int64 array: matched gt row index, or -1.
    """
    p = np.ascontiguousarray(pred_boxes, dtype=np.float64).reshape(-1, 4)
    g = np.ascontiguousarray(gt_boxes, dtype=np.float64).reshape(-1, 4)
    cdef Py_ssize_t n_pred = p.shape[0]
    cdef Py_ssize_t n_gt = g.shape[0]
    matched = np.full(n_pred, -1, dtype=np.int64)
    if n_pred == 0 or n_gt == 0:
        return matched
    taken = np.zeros(n_gt, dtype=np.uint8)
    cdef double[:, ::1] pv = p
    cdef double[:, ::1] gv = g
    cdef long long[::1] mv = matched
    cdef unsigned char[::1] tv = taken
    cdef Py_ssize_t i, j, best_j
    cdef double best_iou, px0, py0, px1, py1, area_p, iw, ih, inter, union, v
    for i in range(n_pred):
        px0 = pv[i, 0]
        py0 = pv[i, 1]
        px1 = pv[i, 2]
        py1 = pv[i, 3]
        area_p = (px1 - px0) * (py1 - py0)
        best_j = -1
        best_iou = -1.0
        for j in range(n_gt):
            if tv[j]:
                continue
            iw = min(px1, gv[j, 2]) - max(px0, gv[j, 0])
            if iw < 0.0:
                iw = 0.0
            ih = min(py1, gv[j, 3]) - max(py0, gv[j, 1])
            if ih < 0.0:
                ih = 0.0
            inter = iw * ih
            union = area_p + (gv[j, 2] - gv[j, 0]) * (gv[j, 3] - gv[j, 1]) - inter
            if union > 0.0:
                v = inter / union
            else:
                v = 0.0
            if v > best_iou:
                best_iou = v
                best_j = j
        if best_j >= 0 and best_iou >= threshold:
            mv[i] = best_j
            tv[best_j] = 1
    return matched
