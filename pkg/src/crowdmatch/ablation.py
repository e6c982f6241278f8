"""Assignment ablations on synthetic scenes.

There is no detector to train here, so the effect of an assignment on
evaluation is approximated by one score-reweighting step: each positive's
score is raised toward its soft label (IoU with the matched gt) and each
negative's score is pulled toward zero. Two assignment schemes fed through
the same step can then be compared with the usual evaluation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .assignment import Assignment, cgla_assign, legacy_assign
from .costs import CostConfig
from .evaluation import EvalResult, evaluate, valid_prediction_count
from .geometry import Sample, iou
from .scenes import Scene

__all__ = [
    "REWEIGHT_RATE",
    "reweight_scores",
    "assign_scene",
    "reweighted_detections",
    "filtered_rate",
    "SweepRow",
    "sweep",
    "compare_fp_intervals",
]

REWEIGHT_RATE = 0.5


def reweight_scores(
    samples: Sequence[Sample],
    gts,
    assignment: Assignment,
    rate: float = REWEIGHT_RATE,
) -> list[Sample]:
    """One proxy training step on the scores.

    Positives move a fraction ``rate`` of the way up to their soft label
    (never down); negatives shrink by the same fraction.
    """
    out = list(samples)
    pos = {s: g for g, s, _ in assignment.positives}
    for k, smp in enumerate(samples):
        if k in pos:
            y = iou(smp.box, gts[pos[k]])
            new = smp.score + rate * max(0.0, y - smp.score)
        else:
            new = smp.score * (1.0 - rate)
        out[k] = Sample(smp.box, new)
    return out


def assign_scene(scene: Scene, cfg: CostConfig, legacy: bool = False) -> Assignment:
    if legacy:
        return legacy_assign(scene.gts, scene.preds, cfg, image_size=(scene.width, scene.height))
    return cgla_assign(scene.gts, scene.preds, cfg)


def reweighted_detections(
    scenes: Sequence[Scene],
    cfg: CostConfig,
    legacy: bool = False,
    assignments: Optional[Sequence[Assignment]] = None,
) -> list[list[Sample]]:
    if assignments is None:
        assignments = [assign_scene(s, cfg, legacy) for s in scenes]
    return [reweight_scores(s.preds, s.gts, a) for s, a in zip(scenes, assignments)]


def filtered_rate(assignments: Sequence[Assignment]) -> float:
    """Share of Hungarian-matched pairs that the constraints demoted."""
    matched = sum(len(a.positives) + len(a.filtered) for a in assignments)
    return sum(len(a.filtered) for a in assignments) / matched if matched else 0.0


@dataclass
class SweepRow:
    alpha: float
    beta: float
    filtered_rate: float
    mr: float
    positives: int
    filtered: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def sweep(
    scenes: Sequence[Scene],
    alphas: Sequence[float],
    betas: Sequence[float],
    base: Optional[CostConfig] = None,
) -> list[SweepRow]:
    """One row per (alpha, beta): demotion rate and miss rate after reweighting."""
    base = base or CostConfig()
    gts = [s.gts for s in scenes]
    rows = []
    for a in alphas:
        for b in betas:
            cfg = CostConfig.from_dict({**base.to_dict(), "alpha": a, "beta": b})
            assignments = [assign_scene(s, cfg) for s in scenes]
            dets = reweighted_detections(scenes, cfg, assignments=assignments)
            rows.append(SweepRow(
                alpha=cfg.alpha,
                beta=cfg.beta,
                filtered_rate=filtered_rate(assignments),
                mr=evaluate(dets, gts).mr,
                positives=sum(len(x.positives) for x in assignments),
                filtered=sum(len(x.filtered) for x in assignments),
            ))
    return rows


def compare_fp_intervals(scenes: Sequence[Scene], cfg: Optional[CostConfig] = None) -> dict:
    """FP counts by best-IoU interval, constrained vs legacy assignment.

    Both reweighted detection sets are cut to the same number of top-scoring
    predictions: the smaller of the two counts that fit within FPPI <= 1.
    """
    cfg = cfg or CostConfig()
    gts = [s.gts for s in scenes]
    dets_c = reweighted_detections(scenes, cfg, legacy=False)
    dets_l = reweighted_detections(scenes, cfg, legacy=True)
    k = min(valid_prediction_count(dets_c, gts), valid_prediction_count(dets_l, gts))
    res_c: EvalResult = evaluate(dets_c, gts, max_dets=k)
    res_l: EvalResult = evaluate(dets_l, gts, max_dets=k)
    return {
        "k": k,
        "cgla": res_c.fp_histogram,
        "legacy": res_l.fp_histogram,
        "mr_cgla": evaluate(dets_c, gts).mr,
        "mr_legacy": evaluate(dets_l, gts).mr,
    }

