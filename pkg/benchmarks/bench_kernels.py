"""Benchmark the compiled evaluation kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeats 5]

Workloads mirror the real evaluation path: many small per-painting
matching problems (the common case) and a few large IoU matrices, plus
an end-to-end ten-threshold AP over a pooled ranking.
"""

import argparse
import importlib
import os
import statistics
import sys
import time

import numpy as np


def random_boxes(rng, n, span=400.0):
    x0 = rng.uniform(0, span, (n, 1))
    y0 = rng.uniform(0, span, (n, 1))
    w = rng.uniform(4, span / 4, (n, 1))
    h = rng.uniform(4, span / 4, (n, 1))
    return np.hstack([x0, y0, x0 + w, y0 + h])


def bench(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times), statistics.median(times)


def workload_small_groups(kernels, groups):
    def run():
        for preds, gts in groups:
            for threshold in (0.5, 0.75, 0.95):
                kernels.greedy_match(preds, gts, threshold)

    return run


def workload_big_matrix(kernels, a, b):
    return lambda: kernels.iou_matrix(a, b)


def workload_full_eval(average_precision, preds, gts):
    from artexplore.metrics.evaluation import COCO_THRESHOLDS

    def run():
        for threshold in COCO_THRESHOLDS:
            average_precision(preds, gts, threshold)

    return run


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    from artexplore.metrics import _numpy_backend

    try:
        from artexplore.metrics import _native
    except ImportError:
        print("compiled extension not built; run pip install -e . --no-build-isolation")
        sys.exit(1)

    rng = np.random.default_rng(1234)
    # 2,000 paintings x (up to 30 predictions, up to 12 ground truths)
    groups = [
        (
            random_boxes(rng, int(rng.integers(1, 31))),
            random_boxes(rng, int(rng.integers(1, 13))),
        )
        for _ in range(2000)
    ]
    big_a = random_boxes(rng, 3000)
    big_b = random_boxes(rng, 2000)

    rows = []
    for name, kernels in (("native", _native), ("numpy", _numpy_backend)):
        best, med = bench(workload_small_groups(kernels, groups), args.repeats)
        rows.append((f"greedy_match 2000 groups x 3 thr [{name}]", best, med))
        best, med = bench(workload_big_matrix(kernels, big_a, big_b), args.repeats)
        rows.append((f"iou_matrix 3000x2000 [{name}]", best, med))

    # end-to-end AP with each backend selected via the env knob
    from dataclasses import dataclass

    from artexplore.metrics.boxes import BoundingBox
    from artexplore.metrics.evaluation import GroundTruthBox

    @dataclass(frozen=True)
    class Pred:
        id: str
        artwork_id: str
        box: BoundingBox
        confidence: float

    preds, gts = [], []
    for art in range(300):
        for i, row in enumerate(random_boxes(rng, 12, span=300)):
            preds.append(
                Pred(f"a{art}d{i}", f"a{art}", BoundingBox(*row), float(rng.random()))
            )
        for row in random_boxes(rng, 5, span=300):
            gts.append(GroundTruthBox(f"a{art}", "x", BoundingBox(*row)))

    for name in ("native", "numpy"):
        os.environ["ARTEXPLORE_KERNELS"] = name
        import artexplore.metrics.backend as backend_mod
        import artexplore.metrics.evaluation as eval_mod

        importlib.reload(backend_mod)
        importlib.reload(eval_mod)
        best, med = bench(
            workload_full_eval(eval_mod.average_precision, preds, gts), args.repeats
        )
        rows.append((f"average_precision 3600 preds x 10 thr [{name}]", best, med))
    os.environ.pop("ARTEXPLORE_KERNELS", None)

    width = max(len(r[0]) for r in rows) + 2
    print(f"{'workload':<{width}} {'best':>10} {'median':>10}")
    for label, best, med in rows:
        print(f"{label:<{width}} {best * 1e3:>8.1f}ms {med * 1e3:>8.1f}ms")
    pairs = {}
    for label, best, _ in rows:
        key = label.rsplit(" [", 1)[0]
        pairs.setdefault(key, {})[label.rsplit("[", 1)[1].rstrip("]")] = best
    print()
    for key, values in pairs.items():
        if {"native", "numpy"} <= set(values):
            print(f"speedup {key}: {values['numpy'] / values['native']:.1f}x")


if __name__ == "__main__":
    main()
