"""Matching costs between ground truths and predicted samples.

Two matrices are built here. The constrained one replaces the L1 box term with
three binary penalties (center-x, center-y, IoU position) that mark a pair as
not learnable; the legacy one is the plain DETR-style cost kept for ablations.
Lower totals are better matches.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateGeometryError, EmptyInputError, InputDomainError
from .geometry import BBox, Sample, boxes_to_array, iou, pairwise_giou, pairwise_iou

__all__ = [
    "CostConfig",
    "PairCosts",
    "CostMatrix",
    "cls_cost",
    "cenx_cost",
    "ceny_cost",
    "pos_cost",
    "build_cost_matrix",
    "build_legacy_cost_matrix",
]


@dataclass(frozen=True)
class CostConfig:
    alpha: float = 0.3
    beta: float = 0.6
    lambda1: float = 2.0
    lambda2: float = 2.0
    focal_alpha: float = 0.25
    focal_gamma: float = 2.0

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, float(getattr(self, f.name)))
        # alpha may be +inf (center constraints disabled); beta = 0 is allowed
        # so the position sweep can start at zero.
        if not self.alpha > 0.0:
            raise InputDomainError(f"alpha must be > 0, got {self.alpha}")
        if not 0.0 <= self.beta < 1.0:
            raise InputDomainError(f"beta must lie in [0, 1), got {self.beta}")
        if self.lambda1 < 0.0 or self.lambda2 < 0.0 or self.lambda1 + self.lambda2 <= 0.0:
            raise InputDomainError("lambda1, lambda2 must be non-negative with a positive sum")
        if not 0.0 <= self.focal_alpha <= 1.0:
            raise InputDomainError(f"focal_alpha must lie in [0, 1], got {self.focal_alpha}")
        if not self.focal_gamma >= 0.0:
            raise InputDomainError(f"focal_gamma must be >= 0, got {self.focal_gamma}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "CostConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


@dataclass(frozen=True)
class PairCosts:
    c_cls: float
    c_giou: float
    c_cenx: float
    c_ceny: float
    c_pos: float
    total: float
    learnable: bool
    c_l1: float = 0.0


def cls_cost(score: float, focal_alpha: float = 0.25, focal_gamma: float = 2.0) -> float:
    """Focal-style classification matching cost, strictly decreasing in score."""
    s = float(score)
    if not 0.0 < s < 1.0:
        raise InputDomainError(f"score must lie strictly inside (0, 1), got {score!r}")
    pos = focal_alpha * (1.0 - s) ** focal_gamma * (-math.log(s))
    neg = (1.0 - focal_alpha) * s ** focal_gamma * (-math.log(1.0 - s))
    return pos - neg


def cenx_cost(sample: BBox, gt: BBox, alpha: float) -> float:
    """-1 when the x-center offset exceeds alpha * gt width, else 0."""
    if gt.w <= 0.0:
        raise DegenerateGeometryError(f"center constraint needs gt width > 0: {gt}")
    return -1.0 if abs(sample.cx - gt.cx) > alpha * gt.w else 0.0


def ceny_cost(sample: BBox, gt: BBox, alpha: float) -> float:
    if gt.h <= 0.0:
        raise DegenerateGeometryError(f"center constraint needs gt height > 0: {gt}")
    return -1.0 if abs(sample.cy - gt.cy) > alpha * gt.h else 0.0


def pos_cost(sample: BBox, gt: BBox, beta: float) -> float:
    """-1 when IoU <= beta (the boundary rejects), else 0."""
    return -1.0 if iou(sample, gt) <= beta else 0.0


@dataclass
class CostMatrix:
    """Dense |gts| x |samples| cost terms. Rows are gts, columns samples."""

    total: np.ndarray
    c_cls: np.ndarray
    c_giou: np.ndarray
    c_cenx: np.ndarray
    c_ceny: np.ndarray
    c_pos: np.ndarray
    c_l1: np.ndarray
    iou: np.ndarray
    legacy: bool = False

    @property
    def shape(self) -> tuple[int, int]:
        return self.total.shape

    @property
    def learnable(self) -> np.ndarray:
        return (self.c_cenx == 0.0) & (self.c_ceny == 0.0) & (self.c_pos == 0.0)

    def pair(self, i: int, j: int) -> PairCosts:
        return PairCosts(
            c_cls=float(self.c_cls[i, j]),
            c_giou=float(self.c_giou[i, j]),
            c_cenx=float(self.c_cenx[i, j]),
            c_ceny=float(self.c_ceny[i, j]),
            c_pos=float(self.c_pos[i, j]),
            total=float(self.total[i, j]),
            learnable=bool(self.learnable[i, j]),
            c_l1=float(self.c_l1[i, j]),
        )


def _prepare(gts: Sequence[BBox], samples: Sequence[Sample], cfg: CostConfig):
    if len(samples) == 0:
        raise EmptyInputError("cost matrix needs at least one sample")
    g = boxes_to_array(gts)
    p = boxes_to_array(s.box for s in samples)
    # Per-sample scalar evaluation keeps c_cls bit-identical to cls_cost().
    cls_row = np.array([cls_cost(s.score, cfg.focal_alpha, cfg.focal_gamma) for s in samples])
    c_cls = np.broadcast_to(cls_row, (len(g), len(p))).copy()
    return g, p, c_cls


def constraint_flags(g: np.ndarray, p: np.ndarray, ious: np.ndarray, alpha: float, beta: float):
    """Center-x, center-y and position flags (-1 violated, 0 satisfied) for all pairs."""
    gw = g[:, 2] - g[:, 0]
    gh = g[:, 3] - g[:, 1]
    for k, extent in enumerate((gw, gh)):
        bad = np.flatnonzero(extent <= 0.0)
        if len(bad):
            axis = "width" if k == 0 else "height"
            raise DegenerateGeometryError(f"center constraint needs gt {axis} > 0 (gt {int(bad[0])})")
    gcx = (g[:, 0] + g[:, 2]) / 2.0
    gcy = (g[:, 1] + g[:, 3]) / 2.0
    pcx = (p[:, 0] + p[:, 2]) / 2.0
    pcy = (p[:, 1] + p[:, 3]) / 2.0
    cenx = np.where(np.abs(pcx[None, :] - gcx[:, None]) > (alpha * gw)[:, None], -1.0, 0.0)
    ceny = np.where(np.abs(pcy[None, :] - gcy[:, None]) > (alpha * gh)[:, None], -1.0, 0.0)
    pos = np.where(ious <= beta, -1.0, 0.0)
    return cenx, ceny, pos


def build_cost_matrix(
    gts: Sequence[BBox],
    samples: Sequence[Sample],
    cfg: Optional[CostConfig] = None,
    *,
    constrain_cost: bool = True,
) -> CostMatrix:
    """Constraint-augmented cost: lambda1*cls - lambda2*(giou + pos + cenx + ceny).

    Every violated constraint raises the pair's total by exactly lambda2. With
    ``constrain_cost=False`` the flags are still computed (for the later
    filter) but left out of the total.
    """
    cfg = cfg or CostConfig()
    g, p, c_cls = _prepare(gts, samples, cfg)
    ious = pairwise_iou(g, p)
    c_giou = pairwise_giou(g, p)
    cenx, ceny, pos = constraint_flags(g, p, ious, cfg.alpha, cfg.beta)
    if constrain_cost:
        total = cfg.lambda1 * c_cls - cfg.lambda2 * (c_giou + pos + cenx + ceny)
    else:
        total = cfg.lambda1 * c_cls - cfg.lambda2 * c_giou
    return CostMatrix(
        total=total,
        c_cls=c_cls,
        c_giou=c_giou,
        c_cenx=cenx,
        c_ceny=ceny,
        c_pos=pos,
        c_l1=np.zeros_like(total),
        iou=ious,
    )


def build_legacy_cost_matrix(
    gts: Sequence[BBox],
    samples: Sequence[Sample],
    cfg: Optional[CostConfig] = None,
    *,
    image_size: Optional[tuple[float, float]] = None,
) -> CostMatrix:
    """DETR-style cost: lambda1*(cls + L1) - lambda2*giou, every pair learnable.

    L1 is the mean absolute difference of (cx, cy, w, h), each divided by the
    image width or height when ``image_size=(width, height)`` is given, raw
    pixels otherwise.
    """
    cfg = cfg or CostConfig()
    g, p, c_cls = _prepare(gts, samples, cfg)
    ious = pairwise_iou(g, p)
    c_giou = pairwise_giou(g, p)
    sx, sy = (1.0, 1.0) if image_size is None else (float(image_size[0]), float(image_size[1]))
    if sx <= 0.0 or sy <= 0.0:
        raise InputDomainError(f"image size must be positive, got {image_size}")

    def cxcywh(a):
        return (a[:, 0] + a[:, 2]) / 2.0, (a[:, 1] + a[:, 3]) / 2.0, a[:, 2] - a[:, 0], a[:, 3] - a[:, 1]

    gc, pc = cxcywh(g), cxcywh(p)
    scales = (sx, sy, sx, sy)
    terms = [np.abs(pc[k][None, :] - gc[k][:, None]) / scales[k] for k in range(4)]
    c_l1 = (terms[0] + terms[1] + terms[2] + terms[3]) / 4.0
    total = cfg.lambda1 * (c_cls + c_l1) - cfg.lambda2 * c_giou
    zeros = np.zeros_like(total)
    return CostMatrix(
        total=total,
        c_cls=c_cls,
        c_giou=c_giou,
        c_cenx=zeros,
        c_ceny=zeros.copy(),
        c_pos=zeros.copy(),
        c_l1=c_l1,
        iou=ious,
        legacy=True,
    )
