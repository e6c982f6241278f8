"""Deterministic synthetic crowded scenes.

Ground truths are pedestrian-shaped boxes (fixed width/height ratio,
log-normal heights) placed so that the number of strongly overlapping pairs
approaches a target. Predictions emulate a decoder layer: jittered hits whose
hit probability drops with occlusion, poorly localized boxes for some of the
missed pedestrians, and high-confidence background clutter.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np

from .errors import GenerationError, InputDomainError
from .geometry import SCORE_EPS, BBox, Sample, boxes_to_array, pairwise_iou

__all__ = ["SceneSpec", "SceneStats", "gen_scene", "gen_predictions", "pair_overlap_count", "PAIR_IOU"]

PAIR_IOU = 0.3
MAX_MOVES = 4000


@dataclass(frozen=True)
class SceneSpec:
    seed: int = 0
    image_w: float = 1280.0
    image_h: float = 720.0
    n_pedestrians: int = 22
    target_pair_iou_rate: float = 9.0
    aspect_ratio: float = 0.41
    height_median: float = 150.0
    height_sigma: float = 0.3
    hit_prob: float = 0.95
    occlusion_penalty: float = 0.6
    center_jitter: float = 0.05
    scale_jitter: float = 0.05
    poor_loc_prob: float = 0.5
    poor_loc_score_offset: float = 0.3
    clutter: int = 30
    score_noise: float = 0.05
    clutter_score_low: float = 0.3
    clutter_score_high: float = 0.7

    def __post_init__(self):
        if self.n_pedestrians < 0 or self.clutter < 0:
            raise InputDomainError("n_pedestrians and clutter must be >= 0")
        for name in ("center_jitter", "scale_jitter", "height_sigma", "score_noise", "target_pair_iou_rate"):
            if getattr(self, name) < 0:
                raise InputDomainError(f"{name} must be >= 0")
        for name in ("hit_prob", "occlusion_penalty", "poor_loc_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InputDomainError(f"{name} must lie in [0, 1]")
        if self.image_w <= 0 or self.image_h <= 0 or self.aspect_ratio <= 0 or self.height_median <= 0:
            raise InputDomainError("image size, aspect ratio and height must be positive")

    def replace(self, **kw) -> "SceneSpec":
        d = asdict(self)
        d.update(kw)
        return SceneSpec(**d)

    @classmethod
    def from_dict(cls, d: dict) -> "SceneSpec":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


@dataclass
class SceneStats:
    n: int
    pair_iou_count: int
    target: float
    moves: int


def pair_overlap_count(boxes: np.ndarray, thresh: float = PAIR_IOU) -> int:
    """Number of unordered box pairs with IoU above ``thresh``."""
    if len(boxes) < 2:
        return 0
    m = pairwise_iou(boxes, boxes)
    return int(np.triu(m > thresh, k=1).sum())


def _overlap_rows(boxes, thresh=PAIR_IOU):
    m = pairwise_iou(boxes, boxes)
    np.fill_diagonal(m, 0.0)
    return m > thresh


def _size(rng, spec):
    h_max = 0.9 * spec.image_h
    w_max = 0.9 * spec.image_w
    h = spec.height_median * float(np.exp(rng.normal(0.0, spec.height_sigma))) if spec.height_sigma else spec.height_median
    h = min(max(h, 0.25 * spec.height_median), h_max)
    w = spec.aspect_ratio * h
    if w > w_max:
        w = w_max
        h = w / spec.aspect_ratio
    return w, h


def _place_free(rng, w, h, spec):
    x1 = rng.uniform(0.0, spec.image_w - w)
    y1 = rng.uniform(0.0, spec.image_h - h)
    return np.array([x1, y1, x1 + w, y1 + h])


def _place_near(rng, anchor, w, h, spec):
    # horizontal neighbour offset by 10-45% of the width: IoU with a same-size
    # partner lands roughly in (0.35, 0.8)
    aw = anchor[2] - anchor[0]
    side = 1.0 if rng.random() < 0.5 else -1.0
    cx = (anchor[0] + anchor[2]) / 2.0 + side * rng.uniform(0.1, 0.45) * aw
    cy = (anchor[1] + anchor[3]) / 2.0 + rng.normal(0.0, 0.05) * (anchor[3] - anchor[1])
    cx = min(max(cx, w / 2.0), spec.image_w - w / 2.0)
    cy = min(max(cy, h / 2.0), spec.image_h - h / 2.0)
    return np.array([cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0])


def gen_scene(spec: SceneSpec) -> tuple[list[BBox], SceneStats]:
    """Ground-truth boxes for one image.

    Boxes start uniformly placed, then single boxes are relocated (next to a
    random partner when too few pairs overlap, to a free spot when too many)
    and a move is kept only if it does not increase the distance to the
    target pair count. For n >= 15 the loop must end within 20% of the target.
    """
    rng = np.random.default_rng([spec.seed, 0])
    n = spec.n_pedestrians
    if n == 0:
        return [], SceneStats(0, 0, spec.target_pair_iou_rate, 0)
    if spec.aspect_ratio * 0.25 * spec.height_median > spec.image_w:
        raise GenerationError("pedestrian boxes cannot fit the image width")
    sizes = [_size(rng, spec) for _ in range(n)]
    boxes = np.array([_place_free(rng, w, h, spec) for w, h in sizes])

    target = spec.target_pair_iou_rate
    lo, hi = 0.8 * target, 1.2 * target
    count = pair_overlap_count(boxes)
    moves = 0
    while not (lo <= count <= hi) and moves < MAX_MOVES:
        moves += 1
        i = int(rng.integers(n))
        w, h = sizes[i]
        trial = boxes.copy()
        if count < lo:
            j = int(rng.integers(n - 1))
            j = j + 1 if j >= i else j
            trial[i] = _place_near(rng, boxes[j], w, h, spec)
        else:
            overlapping = np.flatnonzero(_overlap_rows(boxes).any(axis=1))
            i = int(overlapping[rng.integers(len(overlapping))])
            w, h = sizes[i]
            trial[i] = _place_free(rng, w, h, spec)
        new = pair_overlap_count(trial)
        if abs(new - target) <= abs(count - target):
            boxes, count = trial, new
    if n >= 15 and not (lo <= count <= hi):
        raise GenerationError(
            f"could not reach {target} overlapping pairs (got {count}) after {moves} moves"
        )
    gts = [BBox(*row) for row in boxes]
    return gts, SceneStats(n, count, target, moves)


def _clip(box, spec):
    x1 = min(max(box[0], 0.0), spec.image_w)
    y1 = min(max(box[1], 0.0), spec.image_h)
    x2 = min(max(box[2], x1), spec.image_w)
    y2 = min(max(box[3], y1), spec.image_h)
    return np.array([x1, y1, x2, y2])


def _jitter(rng, gt, spec, center_sigma, scale_sigma):
    # additive offsets, so zero noise reproduces the gt bit for bit
    w, h = gt[2] - gt[0], gt[3] - gt[1]
    dx = rng.normal(0.0, center_sigma) * w if center_sigma else 0.0
    dy = rng.normal(0.0, center_sigma) * h if center_sigma else 0.0
    s = float(np.exp(rng.normal(0.0, scale_sigma))) if scale_sigma else 1.0
    gw, gh = (s - 1.0) * w / 2.0, (s - 1.0) * h / 2.0
    return _clip(np.array([gt[0] + dx - gw, gt[1] + dy - gh, gt[2] + dx + gw, gt[3] + dy + gh]), spec)


def _hit_score(rng, overlap, spec):
    noise = rng.normal(0.0, spec.score_noise) if spec.score_noise else 0.0
    return min(max(overlap + noise, SCORE_EPS), 1.0 - SCORE_EPS)


def _iou_one(box, gt):
    return float(pairwise_iou(box[None, :], gt[None, :], check=False)[0, 0])


def gen_predictions(gts: list[BBox], spec: SceneSpec, rng: Optional[np.random.Generator] = None) -> list[Sample]:
    """Simulated decoder outputs for one image (order shuffled)."""
    rng = rng if rng is not None else np.random.default_rng([spec.seed, 1])
    g = boxes_to_array(gts)
    occ = np.zeros(len(g))
    if len(g) > 1:
        m = pairwise_iou(g, g, check=False)
        np.fill_diagonal(m, 0.0)
        occ = m.max(axis=1)

    preds: list[tuple[np.ndarray, float]] = []
    for k, gt in enumerate(g):
        # Occlusion takes probability mass away from clean hits; part of it
        # becomes a query that reached the pedestrian but localizes it badly.
        p_cover = spec.hit_prob * (1.0 - spec.occlusion_penalty * occ[k])
        p_poor = spec.hit_prob * spec.occlusion_penalty * occ[k] * spec.poor_loc_prob
        u = rng.random()
        if u < p_cover:
            box = _jitter(rng, gt, spec, spec.center_jitter, spec.scale_jitter)
            offset = 0.0
        elif u < p_cover + p_poor:
            w, h = gt[2] - gt[0], gt[3] - gt[1]
            side = 1.0 if rng.random() < 0.5 else -1.0
            dx = side * rng.uniform(0.25, 0.45) * w
            dy = rng.normal(0.0, 0.1) * h
            box = _clip(np.array([gt[0] + dx, gt[1] + dy, gt[2] + dx, gt[3] + dy]), spec)
            # sees the pedestrian's features, so it is confident despite the offset
            offset = spec.poor_loc_score_offset
        else:
            continue
        if box[2] > box[0] and box[3] > box[1]:
            preds.append((box, _hit_score(rng, _iou_one(box, gt) + offset, spec)))

    for _ in range(spec.clutter):
        for _attempt in range(50):
            w, h = _size(rng, spec)
            box = _place_free(rng, w, h, spec)
            if len(g) == 0 or pairwise_iou(box[None, :], g, check=False).max() < 0.2:
                break
        score = rng.uniform(spec.clutter_score_low, spec.clutter_score_high)
        preds.append((box, float(score)))

    order = rng.permutation(len(preds))
    return [Sample(BBox(*preds[k][0]), preds[k][1]) for k in order]
