"""Pedestrian-detection evaluation: greedy matching, FPPI/miss-rate curve,
log-average miss rate and the false-positive breakdown by best IoU."""
from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _core
from .geometry import BBox, Sample, boxes_to_array, pairwise_iou

__all__ = [
    "ImageMatch",
    "EvalResult",
    "FP_BIN_EDGES",
    "FP_BIN_LABELS",
    "match_detections",
    "fppi_curve",
    "log_average_mr",
    "fp_interval_histogram",
    "valid_prediction_count",
    "truncate_top_k",
    "evaluate",
]

FP_BIN_EDGES = (0.2, 0.4, 0.6, 0.8)
FP_BIN_LABELS = ("[0.0,0.2)", "[0.2,0.4)", "[0.4,0.6)", "[0.6,0.8)", "[0.8,1.0]")


@dataclass
class ImageMatch:
    """Per-image greedy matching outcome; per-det arrays follow input order."""

    scores: np.ndarray
    is_tp: np.ndarray
    best_iou: np.ndarray
    matched_gt: np.ndarray
    n_gt: int

    @property
    def tp(self) -> int:
        return int(self.is_tp.sum())

    @property
    def fp(self) -> int:
        return int(len(self.is_tp) - self.is_tp.sum())

    @property
    def fn(self) -> int:
        return self.n_gt - self.tp

    @property
    def fp_best_ious(self) -> list[float]:
        return [float(v) for v in self.best_iou[~self.is_tp]]


def _score_order(dets: Sequence[Sample]) -> np.ndarray:
    # Equal scores are ordered by box, then index, so the result does not
    # depend on how equal-score detections were listed.
    keys = sorted(range(len(dets)), key=lambda k: (-dets[k].score, dets[k].box.as_tuple(), k))
    return np.array(keys, dtype=np.int64)


def match_detections(dets: Sequence[Sample], gts: Sequence[BBox], iou_thresh: float = 0.5) -> ImageMatch:
    """Greedy one-to-one matching in descending score order.

    Each detection claims the unclaimed gt with the highest IoU, provided it
    reaches ``iou_thresh``. ``best_iou`` is against any gt, claimed or not.
    """
    n = len(dets)
    scores = np.array([d.score for d in dets], dtype=np.float64)
    if n == 0:
        empty = np.zeros(0)
        return ImageMatch(scores, np.zeros(0, dtype=bool), empty, np.zeros(0, dtype=np.int64), len(gts))
    if len(gts) == 0:
        return ImageMatch(scores, np.zeros(n, dtype=bool), np.zeros(n), np.full(n, -1, dtype=np.int64), 0)
    ious = pairwise_iou(boxes_to_array(d.box for d in dets), boxes_to_array(gts))
    matched = _core.greedy_match(ious, _score_order(dets), iou_thresh)
    return ImageMatch(scores, matched >= 0, ious.max(axis=1), matched, len(gts))


def fppi_curve(matches: Sequence[ImageMatch]) -> list[tuple[float, float]]:
    """(fppi, miss_rate) at every distinct score threshold, highest first.

    The first point is the empty detection set. With no gts at all the miss
    rate is 0 everywhere.
    """
    n_img = max(len(matches), 1)
    n_gt = sum(m.n_gt for m in matches)
    scores = np.concatenate([m.scores for m in matches]) if matches else np.zeros(0)
    is_tp = np.concatenate([m.is_tp for m in matches]) if matches else np.zeros(0, dtype=bool)
    order = np.argsort(-scores, kind="stable")
    scores, is_tp = scores[order], is_tp[order]

    def miss(tp):
        return 1.0 - tp / n_gt if n_gt else 0.0

    curve = [(0.0, miss(0))]
    tp = fp = 0
    for k in range(len(scores)):
        if is_tp[k]:
            tp += 1
        else:
            fp += 1
        if k + 1 == len(scores) or scores[k + 1] != scores[k]:
            curve.append((fp / n_img, miss(tp)))
    return curve


def _mr_from_curve(curve, n_points: int, fppi_range: tuple[float, float]) -> float:
    targets = np.logspace(math.log10(fppi_range[0]), math.log10(fppi_range[1]), n_points)
    samples = []
    for t in targets:
        below = [mr for f, mr in curve if f <= t]
        samples.append(min(below) if below else 1.0)
    if min(samples) <= 0.0:
        return 0.0
    return float(math.exp(math.fsum(math.log(s) for s in samples) / len(samples)))


def log_average_mr(
    matches: Sequence[ImageMatch],
    n_points: int = 9,
    fppi_range: tuple[float, float] = (1e-2, 1.0),
) -> float:
    """Geometric mean of the miss rate sampled at log-spaced FPPI targets.

    Each target takes the lowest miss rate reached at FPPI <= target. A zero
    sample makes the mean exactly 0.
    """
    return _mr_from_curve(fppi_curve(matches), n_points, fppi_range)


def fp_interval_histogram(best_ious: Sequence[float]) -> list[int]:
    counts = [0] * (len(FP_BIN_EDGES) + 1)
    for v in best_ious:
        counts[bisect.bisect_right(FP_BIN_EDGES, float(v))] += 1
    return counts


def _global_order(dets_per_image: Sequence[Sequence[Sample]]):
    flat = [(d.score, i, k) for i, dets in enumerate(dets_per_image) for k, d in enumerate(dets)]
    flat.sort(key=lambda t: (-t[0], t[1], t[2]))
    return flat


def valid_prediction_count(
    dets_per_image: Sequence[Sequence[Sample]],
    gts_per_image: Sequence[Sequence[BBox]],
    iou_thresh: float = 0.5,
    fppi_max: float = 1.0,
) -> int:
    """How many top-scoring predictions fit before FPPI exceeds ``fppi_max``.

    These are the predictions that can influence the miss-rate average.
    """
    matches = [match_detections(d, g, iou_thresh) for d, g in zip(dets_per_image, gts_per_image)]
    n_img = max(len(matches), 1)
    budget = fppi_max * n_img
    fp = 0
    count = 0
    for _, i, k in _global_order(dets_per_image):
        if not matches[i].is_tp[k]:
            if fp + 1 > budget:
                break
            fp += 1
        count += 1
    return count


def truncate_top_k(dets_per_image: Sequence[Sequence[Sample]], k: int) -> list[list[Sample]]:
    """Keep the k highest-scoring predictions over the whole set, per-image order preserved."""
    keep = {(i, j) for _, i, j in _global_order(dets_per_image)[: max(k, 0)]}
    return [[d for j, d in enumerate(dets) if (i, j) in keep] for i, dets in enumerate(dets_per_image)]


@dataclass
class EvalResult:
    mr: float
    curve: list[tuple[float, float]]
    fp_histogram: list[int]
    tp: int
    fp: int
    fn: int
    n_images: int = 0
    n_gt: int = 0
    fp_ious: list[float] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "mr": self.mr,
            "curve": [[f, m] for f, m in self.curve],
            "fp_histogram": dict(zip(FP_BIN_LABELS, self.fp_histogram)),
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "n_images": self.n_images,
            "n_gt": self.n_gt,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def table(self) -> str:
        lines = [f"MR = {self.mr * 100:.2f}%   tp={self.tp} fp={self.fp} fn={self.fn}",
                 "FP best-IoU interval   count"]
        lines += [f"{label:<21} {c:>5}" for label, c in zip(FP_BIN_LABELS, self.fp_histogram)]
        lines.append(f"{'total':<21} {sum(self.fp_histogram):>5}")
        return "\n".join(lines)


def evaluate(
    dets_per_image: Sequence[Sequence[Sample]],
    gts_per_image: Sequence[Sequence[BBox]],
    iou_thresh: float = 0.5,
    max_dets: Optional[int] = None,
) -> EvalResult:
    """Full evaluation over a set of images.

    ``max_dets`` truncates to that many top-scoring predictions first, which
    is how two detectors are put on an equal footing for the FP breakdown.
    """
    if len(dets_per_image) != len(gts_per_image):
        raise ValueError("detections and ground truths cover different image counts")
    if max_dets is not None:
        dets_per_image = truncate_top_k(dets_per_image, max_dets)
    matches = [match_detections(d, g, iou_thresh) for d, g in zip(dets_per_image, gts_per_image)]
    curve = fppi_curve(matches)
    fp_ious = [v for m in matches for v in m.fp_best_ious]
    return EvalResult(
        mr=_mr_from_curve(curve, 9, (1e-2, 1.0)),
        curve=curve,
        fp_histogram=fp_interval_histogram(fp_ious),
        tp=sum(m.tp for m in matches),
        fp=sum(m.fp for m in matches),
        fn=sum(m.fn for m in matches),
        n_images=len(matches),
        n_gt=sum(m.n_gt for m in matches),
        fp_ious=fp_ious,
    )
