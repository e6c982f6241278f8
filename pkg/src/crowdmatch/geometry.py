"""Axis-aligned box primitives in absolute pixel coordinates."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _core
from .errors import DegenerateGeometryError, InputDomainError

SCORE_EPS = 1e-7

__all__ = [
    "BBox",
    "Sample",
    "SCORE_EPS",
    "iou",
    "giou",
    "center_l1",
    "boxes_to_array",
    "pairwise_iou",
    "pairwise_giou",
]


@dataclass(frozen=True)
class BBox:
    """Corner-form box. Zero-area boxes are allowed, negative extents are not."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        for name in ("x1", "y1", "x2", "y2"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise DegenerateGeometryError(f"non-finite coordinate {name}={value}")
            object.__setattr__(self, name, value)
        if self.x2 < self.x1 or self.y2 < self.y1:
            raise DegenerateGeometryError(f"negative extent: {self.as_tuple()}")

    @classmethod
    def from_cxcywh(cls, cx: float, cy: float, w: float, h: float) -> "BBox":
        return cls(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)

    @classmethod
    def from_seq(cls, seq: Sequence[float]) -> "BBox":
        x1, y1, x2, y2 = seq
        return cls(x1, y1, x2, y2)

    @property
    def cx(self) -> float:
        return (self.x1 + self.x2) / 2.0

    @property
    def cy(self) -> float:
        return (self.y1 + self.y2) / 2.0

    @property
    def w(self) -> float:
        return self.x2 - self.x1

    @property
    def h(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.w * self.h

    def to_cxcywh(self) -> tuple[float, float, float, float]:
        return self.cx, self.cy, self.w, self.h

    def as_tuple(self) -> tuple[float, float, float, float]:
        return self.x1, self.y1, self.x2, self.y2

    def translate(self, dx: float, dy: float) -> "BBox":
        return BBox(self.x1 + dx, self.y1 + dy, self.x2 + dx, self.y2 + dy)


@dataclass(frozen=True)
class Sample:
    """One detector prediction. The score is clamped to [eps, 1 - eps] on creation."""

    box: BBox
    score: float

    def __post_init__(self):
        s = float(self.score)
        if not (0.0 <= s <= 1.0):
            raise InputDomainError(f"score must lie in [0, 1], got {self.score!r}")
        object.__setattr__(self, "score", min(max(s, SCORE_EPS), 1.0 - SCORE_EPS))


def _inter_union(a: BBox, b: BBox) -> tuple[float, float]:
    # Operation order mirrors the pairwise kernels so scalar and matrix
    # results are bit-identical.
    iw = min(a.x2, b.x2) - max(a.x1, b.x1)
    if iw < 0.0:
        iw = 0.0
    ih = min(a.y2, b.y2) - max(a.y1, b.y1)
    if ih < 0.0:
        ih = 0.0
    inter = iw * ih
    area_a = (a.x2 - a.x1) * (a.y2 - a.y1)
    area_b = (b.x2 - b.x1) * (b.y2 - b.y1)
    return inter, area_a + area_b - inter


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union. Raises when both boxes have zero area."""
    inter, union = _inter_union(a, b)
    if union <= 0.0:
        raise DegenerateGeometryError(f"IoU undefined, both boxes zero-area: {a}, {b}")
    return inter / union


def giou(a: BBox, b: BBox) -> float:
    """Generalized IoU in [-1, 1].

    The enclosing box must have positive area. When both inputs are zero-area
    but the enclosure is not, the IoU term is taken as 0 (result -1).
    """
    inter, union = _inter_union(a, b)
    cw = max(a.x2, b.x2) - min(a.x1, b.x1)
    ch = max(a.y2, b.y2) - min(a.y1, b.y1)
    c_area = cw * ch
    if c_area <= 0.0:
        raise DegenerateGeometryError(f"GIoU undefined, enclosing box degenerate: {a}, {b}")
    overlap = inter / union if union > 0.0 else 0.0
    return overlap - (c_area - union) / c_area


def center_l1(a: BBox, b: BBox) -> tuple[float, float]:
    return abs(a.cx - b.cx), abs(a.cy - b.cy)


def boxes_to_array(boxes: Iterable[BBox]) -> np.ndarray:
    arr = np.array([b.as_tuple() for b in boxes], dtype=np.float64)
    return arr.reshape(-1, 4)


def pairwise_iou(a: np.ndarray, b: np.ndarray, *, check: bool = True) -> np.ndarray:
    """IoU matrix between two (N, 4) corner-form arrays.

    Degenerate pairs come back as NaN; with ``check`` the first one raises,
    naming the offending (row, col).
    """
    a = np.ascontiguousarray(a, dtype=np.float64).reshape(-1, 4)
    b = np.ascontiguousarray(b, dtype=np.float64).reshape(-1, 4)
    out = _core.pairwise_iou(a, b)
    if check:
        _raise_on_nan(out, "IoU undefined, both boxes zero-area")
    return out


def pairwise_giou(a: np.ndarray, b: np.ndarray, *, check: bool = True) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64).reshape(-1, 4)
    b = np.ascontiguousarray(b, dtype=np.float64).reshape(-1, 4)
    out = _core.pairwise_giou(a, b)
    if check:
        _raise_on_nan(out, "GIoU undefined, enclosing box degenerate")
    return out


def _raise_on_nan(mat: np.ndarray, message: str) -> None:
    bad = np.argwhere(np.isnan(mat))
    if len(bad):
        i, j = (int(v) for v in bad[0])
        raise DegenerateGeometryError(f"{message} at pair ({i}, {j})")
