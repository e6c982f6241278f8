"""Focal loss, the utilizability-aware variant and their exact gradients.

Positives carry a soft label (their IoU with the matched gt) and a per-sample
focusing exponent that moves away from the anchor ``gamma_o`` in proportion
to how badly the sample is learned (gradient ratio above the batch mean) and
how little it is worth (IoU relative to ``beta``). Negatives use the plain
focal loss with label 0 and the anchor exponent.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

from .assignment import Assignment
from .errors import ConsistencyError, InputDomainError
from .geometry import SCORE_EPS, BBox, Sample, iou

__all__ = [
    "LossConfig",
    "GradientRatioTracker",
    "LossEntry",
    "LossReport",
    "focal_loss",
    "uafl_gamma",
    "uafl_loss",
    "uafl_grad",
    "gradient_ratio",
    "gradient_ratio_update",
    "batch_uafl",
    "RATIO_EPS",
]

RATIO_EPS = 1e-8


@dataclass(frozen=True)
class LossConfig:
    gamma_o: float = 2.0
    beta: float = 0.6
    gamma_clamp: tuple[float, float] = (0.0, 3.0)
    gamma_min: float = 0.05

    def __post_init__(self):
        lo, hi = (float(v) for v in self.gamma_clamp)
        object.__setattr__(self, "gamma_clamp", (lo, hi))
        if not self.gamma_o >= 0.0:
            raise InputDomainError(f"gamma_o must be >= 0, got {self.gamma_o}")
        if not 0.0 <= self.beta <= 1.0:
            raise InputDomainError(f"beta must lie in [0, 1], got {self.beta}")
        if lo < 0.0 or lo > hi:
            raise InputDomainError(f"gamma_clamp must satisfy 0 <= low <= high, got {self.gamma_clamp}")
        if not self.gamma_min > 0.0:
            raise InputDomainError(f"gamma_min must be > 0, got {self.gamma_min}")
        if self.gamma_o < self.gamma_min:
            raise InputDomainError("gamma_o must not be below gamma_min")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gamma_clamp"] = list(self.gamma_clamp)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LossConfig":
        keys = ("gamma_o", "beta", "gamma_clamp", "gamma_min")
        kw = {k: d[k] for k in keys if k in d}
        if "gamma_clamp" in kw:
            kw["gamma_clamp"] = tuple(kw["gamma_clamp"])
        return cls(**kw)


def _check_p(p: float) -> float:
    p = float(p)
    if not SCORE_EPS <= p <= 1.0 - SCORE_EPS:
        raise InputDomainError(f"probability must lie in [{SCORE_EPS}, 1 - {SCORE_EPS}], got {p!r}")
    return p


def _check_y(y: float) -> float:
    y = float(y)
    if not 0.0 <= y <= 1.0:
        raise InputDomainError(f"label must lie in [0, 1], got {y!r}")
    return y


def focal_loss(p: float, y: int, gamma: float) -> float:
    """Binary focal loss without the alpha weight; y must be 0 or 1."""
    p = _check_p(p)
    if y not in (0, 1):
        raise InputDomainError(f"focal loss needs a hard label 0 or 1, got {y!r}")
    return -((1.0 - p) ** gamma) * y * math.log(p) - p ** gamma * (1 - y) * math.log(1.0 - p)


def uafl_gamma(g: float, t_g: float, y: float, cfg: Optional[LossConfig] = None) -> float:
    """Adaptive exponent ``gamma_o + clamp(g - t_g) * (beta - y)``, floored at gamma_min."""
    cfg = cfg or LossConfig()
    lo, hi = cfg.gamma_clamp
    excess = min(max(g - t_g, lo), hi)
    return max(cfg.gamma_min, cfg.gamma_o + excess * (cfg.beta - y))


def uafl_loss(p: float, y: float, gamma: float) -> float:
    """``-|y - p|^gamma * (y log p + (1 - y) log(1 - p))``; zero exactly at p == y."""
    p, y = _check_p(p), _check_y(y)
    return -(abs(y - p) ** gamma) * (y * math.log(p) + (1.0 - y) * math.log(1.0 - p))


def uafl_grad(p: float, y: float, gamma: float) -> float:
    """Exact d(uafl_loss)/dp.

    At p == y the loss sits at its minimum of 0 and 0 is returned; for
    gamma <= 1 that is a subgradient, the two one-sided derivatives differ.
    """
    p, y = _check_p(p), _check_y(y)
    d = p - y
    if d == 0.0:
        return 0.0
    mag = abs(d)
    ce = y * math.log(p) + (1.0 - y) * math.log(1.0 - p)
    dce = y / p - (1.0 - y) / (1.0 - p)
    dmod = gamma * mag ** (gamma - 1.0) * math.copysign(1.0, d)
    return -(dmod * ce + mag ** gamma * dce)


def gradient_ratio(p: float, y_pos: float, gamma_o: float) -> tuple[float, float]:
    """|dL/dp| for the same score labelled as a positive (soft label) and as a negative."""
    return abs(uafl_grad(p, y_pos, gamma_o)), abs(uafl_grad(p, 0.0, gamma_o))


@dataclass
class GradientRatioTracker:
    """Per-sample gradient ratios and their mean ``t_g``.

    Not thread-safe; one tracker per batch context.
    """

    g: dict[int, float] = field(default_factory=dict)
    t_g: float = 0.0

    def update(self, sample_index: int, grad_as_pos: float, grad_as_neg: float) -> "GradientRatioTracker":
        if grad_as_pos < 0.0 or grad_as_neg < 0.0:
            raise InputDomainError("gradient magnitudes must be non-negative")
        self.g[int(sample_index)] = abs(grad_as_pos) / (abs(grad_as_neg) + RATIO_EPS)
        self.t_g = math.fsum(self.g.values()) / len(self.g)
        return self

    def reset(self) -> None:
        self.g.clear()
        self.t_g = 0.0

    def ratio(self, sample_index: int) -> float:
        return self.g[sample_index]


def gradient_ratio_update(tracker: GradientRatioTracker, sample_index: int,
                          grad_as_pos: float, grad_as_neg: float) -> GradientRatioTracker:
    return tracker.update(sample_index, grad_as_pos, grad_as_neg)


@dataclass
class LossEntry:
    index: int
    role: str
    y: float
    gamma: float
    loss: float
    dloss_dscore: float


@dataclass
class LossReport:
    entries: list[LossEntry] = field(default_factory=list)
    sum_pos: float = 0.0
    sum_neg: float = 0.0
    count_filtered: int = 0
    t_g: float = 0.0

    @property
    def total(self) -> float:
        return self.sum_pos + self.sum_neg

    def to_dict(self) -> dict:
        return {
            "entries": [asdict(e) for e in self.entries],
            "sum_pos": self.sum_pos,
            "sum_neg": self.sum_neg,
            "count_filtered": self.count_filtered,
            "t_g": self.t_g,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def batch_uafl(
    assignment: Assignment,
    samples: Sequence[Sample],
    gts: Sequence[BBox],
    tracker: Optional[GradientRatioTracker] = None,
    cfg: Optional[LossConfig] = None,
) -> LossReport:
    """Loss report for one image's assignment.

    The tracker is refreshed from this batch's positives before any exponent
    is computed, so ``t_g`` is the mean ratio over the current positives.
    """
    cfg = cfg or LossConfig()
    tracker = tracker if tracker is not None else GradientRatioTracker()
    n = len(samples)
    seen = [g_s[1] for g_s in assignment.positives] + list(assignment.negatives)
    if sorted(seen) != list(range(n)):
        raise ConsistencyError("assignment does not partition the sample indices")
    for g_idx, s_idx, _ in assignment.positives:
        if not 0 <= g_idx < len(gts):
            raise ConsistencyError(f"gt index {g_idx} out of range")

    soft = {}
    tracker.reset()
    for g_idx, s_idx, _ in assignment.positives:
        y = iou(samples[s_idx].box, gts[g_idx])
        soft[s_idx] = y
        tracker.update(s_idx, *gradient_ratio(samples[s_idx].score, y, cfg.gamma_o))

    entries = []
    pos_terms, neg_terms = [], []
    for s_idx in range(n):
        p = samples[s_idx].score
        if s_idx in soft:
            y = soft[s_idx]
            gamma = uafl_gamma(tracker.ratio(s_idx), tracker.t_g, y, cfg)
            loss = uafl_loss(p, y, gamma)
            pos_terms.append(loss)
            role = "pos"
        else:
            y, gamma = 0.0, cfg.gamma_o
            loss = focal_loss(p, 0, gamma)
            neg_terms.append(loss)
            role = "neg"
        entries.append(LossEntry(s_idx, role, y, gamma, loss, uafl_grad(p, y, gamma)))
    return LossReport(
        entries=entries,
        sum_pos=math.fsum(pos_terms),
        sum_neg=math.fsum(neg_terms),
        count_filtered=len(assignment.filtered),
        t_g=tracker.t_g,
    )
