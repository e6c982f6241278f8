"""One-to-one label assignment.

``hungarian_solve`` is a shortest-augmenting-path solver (compiled kernel with
a numpy fallback) followed by a pass that picks, among all optimal matchings,
the one with the lexicographically smallest (row, col) sequence.
``brute_force_assign`` enumerates injections and serves as the oracle.
``cgla_assign`` is the constrained pipeline: build the constrained cost,
match, then demote every matched pair that violates a constraint.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np

from . import _core
from .costs import (
    CostConfig,
    CostMatrix,
    PairCosts,
    build_cost_matrix,
    build_legacy_cost_matrix,
)
from .errors import ConsistencyError, InvalidCostError, OracleSizeError
from .geometry import BBox, Sample

__all__ = [
    "Assignment",
    "hungarian_solve",
    "brute_force_assign",
    "assignment_total",
    "cgla_assign",
    "legacy_assign",
    "BRUTE_FORCE_MAX_ROWS",
]

BRUTE_FORCE_MAX_ROWS = 8

CostLike = Union[CostMatrix, np.ndarray, Sequence[Sequence[float]]]


def _as_array(cost: CostLike) -> np.ndarray:
    arr = cost.total if isinstance(cost, CostMatrix) else cost
    arr = np.array(arr, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidCostError(f"cost must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise InvalidCostError(f"non-finite cost at ({int(bad[0])}, {int(bad[1])})")
    return arr


def _pad_rows_gt_cols(arr: np.ndarray) -> np.ndarray:
    """Square up a tall matrix with virtual columns of a large finite cost."""
    n, m = arr.shape
    pad = float(np.abs(arr).max()) * n + 1.0 if arr.size else 1.0
    out = np.full((n, n), pad)
    out[:, :m] = arr
    return out


def _tolerance(arr: np.ndarray) -> float:
    scale = float(np.abs(arr).max()) if arr.size else 1.0
    return 1e-10 * max(1.0, scale)


def _solve_wide(arr: np.ndarray) -> np.ndarray:
    """Lexicographically smallest optimal row->col map for rows <= cols."""
    n, m = arr.shape
    row_to_col, u, v = _core.lsa_rect(np.ascontiguousarray(arr))
    best = float(arr[np.arange(n), row_to_col].sum())
    tol = _tolerance(arr)
    cur = row_to_col.copy()
    used = np.zeros(m, dtype=bool)
    prefix = 0.0
    for i in range(n):
        # Any optimal matching uses only edges that are tight under the
        # optimal duals, so only tight columns left of cur[i] can improve
        # the lexicographic order.
        reduced = arr[i] - u[i] - v
        for c in range(int(cur[i])):
            if used[c] or reduced[c] > tol:
                continue
            trial = _fixed_prefix_solve(arr, i, c, used)
            if trial is None:
                continue
            total, tail = trial
            if prefix + arr[i, c] + total <= best + tol:
                cur[i] = c
                cur[i + 1:] = tail
                break
        used[cur[i]] = True
        prefix += arr[i, cur[i]]
    return cur


def _fixed_prefix_solve(arr, i, c, used):
    n, m = arr.shape
    free = np.flatnonzero(~used)
    free = free[free != c]
    rest = arr[i + 1:][:, free]
    if rest.shape[0] == 0:
        return 0.0, np.zeros(0, dtype=np.int64)
    if rest.shape[0] > rest.shape[1]:
        return None
    # Only the optimum value matters here; later rows are re-examined by the
    # caller's loop, so no recursive tie-breaking.
    sub, _, _ = _core.lsa_rect(np.ascontiguousarray(rest))
    return float(rest[np.arange(rest.shape[0]), sub].sum()), free[sub]


def hungarian_solve(cost: CostLike) -> list[tuple[int, int]]:
    """Minimum-total one-to-one assignment.

    Every row is matched when rows <= cols. Taller matrices are padded with
    virtual columns and rows landing on them are dropped. Among equal-total
    optima the lexicographically smallest (row, col) sequence is returned.
    """
    arr = _as_array(cost)
    n, m = arr.shape
    if n == 0 or m == 0:
        return []
    if n > m:
        cols = _solve_wide(_pad_rows_gt_cols(arr))
        return [(r, int(c)) for r, c in enumerate(cols) if c < m]
    cols = _solve_wide(arr)
    return [(r, int(c)) for r, c in enumerate(cols)]


@lru_cache(maxsize=64)
def _injections(m: int, n: int) -> np.ndarray:
    # itertools yields permutations in lexicographic order, which makes the
    # first minimum the lexicographically smallest optimum.
    perms = np.fromiter(
        itertools.chain.from_iterable(itertools.permutations(range(m), n)),
        dtype=np.int16,
    )
    return perms.reshape(-1, n)


def brute_force_assign(cost: CostLike) -> list[tuple[int, int]]:
    """Exhaustive enumeration oracle (rows <= 8)."""
    arr = _as_array(cost)
    n, m = arr.shape
    if n > BRUTE_FORCE_MAX_ROWS:
        raise OracleSizeError(f"brute force limited to {BRUTE_FORCE_MAX_ROWS} rows, got {n}")
    if n == 0 or m == 0:
        return []
    work = _pad_rows_gt_cols(arr) if n > m else arr
    perms = _injections(work.shape[1], n)
    totals = np.zeros(len(perms))
    for r in range(n):
        totals += work[r, perms[:, r]]
    best = perms[int(np.argmin(totals))]
    return [(r, int(c)) for r, c in enumerate(best) if c < m]


def assignment_total(cost: CostLike, pairs: Sequence[tuple[int, int]]) -> float:
    arr = _as_array(cost)
    return float(sum(arr[r, c] for r, c in pairs))


@dataclass
class Assignment:
    positives: list[tuple[int, int, PairCosts]] = field(default_factory=list)
    negatives: list[int] = field(default_factory=list)
    filtered: list[tuple[int, int]] = field(default_factory=list)
    total_cost: float = 0.0

    @property
    def matched(self) -> list[tuple[int, int]]:
        """All Hungarian pairs before filtering, ordered by gt index."""
        pairs = [(g, s) for g, s, _ in self.positives] + list(self.filtered)
        return sorted(pairs)

    def to_dict(self) -> dict:
        return {
            "positives": [
                {"gt": g, "sample": s, "total": pc.total, "c_cls": pc.c_cls, "c_giou": pc.c_giou,
                 "c_cenx": pc.c_cenx, "c_ceny": pc.c_ceny, "c_pos": pc.c_pos}
                for g, s, pc in self.positives
            ],
            "negatives": list(self.negatives),
            "filtered": [[g, s] for g, s in self.filtered],
            "total_cost": self.total_cost,
        }


def _check_sizes(gts, samples):
    if len(gts) > len(samples):
        raise ConsistencyError(
            f"more ground truths ({len(gts)}) than samples ({len(samples)}); "
            "every gt needs its own sample"
        )


def _assemble(cm: CostMatrix, n_samples: int, apply_filter: bool) -> Assignment:
    pairs = hungarian_solve(cm)
    out = Assignment(total_cost=assignment_total(cm, pairs))
    keep = cm.learnable
    taken = set()
    for g, s in pairs:
        if apply_filter and not keep[g, s]:
            out.filtered.append((g, s))
        else:
            out.positives.append((g, s, cm.pair(g, s)))
            taken.add(s)
    out.negatives = [j for j in range(n_samples) if j not in taken]
    return out


def cgla_assign(
    gts: Sequence[BBox],
    samples: Sequence[Sample],
    cfg: Optional[CostConfig] = None,
    *,
    constrain_cost: bool = True,
    apply_filter: bool = True,
) -> Assignment:
    """Constraint-guided assignment.

    Matched pairs with any violated constraint move from the positives to the
    negatives and are listed in ``filtered``. Either half can be switched off
    for ablations: ``constrain_cost=False`` drops the flags from the matching
    cost, ``apply_filter=False`` keeps every matched pair positive.
    """
    cfg = cfg or CostConfig()
    _check_sizes(gts, samples)
    if len(samples) == 0:
        return Assignment()
    cm = build_cost_matrix(gts, samples, cfg, constrain_cost=constrain_cost)
    return _assemble(cm, len(samples), apply_filter)


def legacy_assign(
    gts: Sequence[BBox],
    samples: Sequence[Sample],
    cfg: Optional[CostConfig] = None,
    *,
    image_size: Optional[tuple[float, float]] = None,
) -> Assignment:
    """Plain DETR-style Hungarian assignment; nothing is filtered."""
    cfg = cfg or CostConfig()
    _check_sizes(gts, samples)
    if len(samples) == 0:
        return Assignment()
    cm = build_legacy_cost_matrix(gts, samples, cfg, image_size=image_size)
    return _assemble(cm, len(samples), apply_filter=False)
