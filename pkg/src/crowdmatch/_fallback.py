"""Pure numpy implementations of the hot kernels.

Every function here has a twin in ``_kernels.pyx`` and the two must agree
bit-for-bit: same operation order, same first-index tie-breaks.
"""
from __future__ import annotations

import numpy as np


def _inter_union(a, b):
    ax1, ay1, ax2, ay2 = (a[:, k][:, None] for k in range(4))
    bx1, by1, bx2, by2 = (b[:, k][None, :] for k in range(4))
    iw = np.minimum(ax2, bx2) - np.maximum(ax1, bx1)
    iw = np.where(iw < 0.0, 0.0, iw)
    ih = np.minimum(ay2, by2) - np.maximum(ay1, by1)
    ih = np.where(ih < 0.0, 0.0, ih)
    inter = iw * ih
    area_a = (ax2 - ax1) * (ay2 - ay1)
    area_b = (bx2 - bx1) * (by2 - by1)
    return inter, area_a + area_b - inter


def pairwise_iou(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    inter, union = _inter_union(a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = inter / union
    return np.where(union <= 0.0, np.nan, out)


def pairwise_giou(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    inter, union = _inter_union(a, b)
    cw = np.maximum(a[:, 2][:, None], b[:, 2][None, :]) - np.minimum(a[:, 0][:, None], b[:, 0][None, :])
    ch = np.maximum(a[:, 3][:, None], b[:, 3][None, :]) - np.minimum(a[:, 1][:, None], b[:, 1][None, :])
    c_area = cw * ch
    with np.errstate(divide="ignore", invalid="ignore"):
        overlap = np.where(union > 0.0, inter / union, 0.0)
        out = overlap - (c_area - union) / c_area
    return np.where(c_area <= 0.0, np.nan, out)


def lsa_rect(cost: np.ndarray):
    """Shortest-augmenting-path Hungarian for n rows <= m cols.

    Returns (row_to_col, u, v) where u, v are row/column potentials with
    cost[i, j] - u[i] - v[j] >= 0 and equality on the matched edges.
    """
    n, m = cost.shape
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    p = np.zeros(m + 1, dtype=np.int64)
    way = np.zeros(m + 1, dtype=np.int64)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(m + 1, np.inf)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used[1:]
            cur = cost[i0 - 1] - u[i0] - v[1:]
            tail = minv[1:]
            upd = free & (cur < tail)
            tail[upd] = cur[upd]
            way[1:][upd] = j0
            masked = np.where(free, tail, np.inf)
            j1 = int(np.argmin(masked)) + 1
            delta = masked[j1 - 1]
            used_idx = np.flatnonzero(used)
            u[p[used_idx]] += delta
            v[used_idx] -= delta
            minv[~used] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    row_to_col = np.full(n, -1, dtype=np.int64)
    for j in range(1, m + 1):
        if p[j]:
            row_to_col[p[j] - 1] = j - 1
    return row_to_col, u[1:].copy(), v[1:].copy()


def greedy_match(iou: np.ndarray, order: np.ndarray, thresh: float) -> np.ndarray:
    """Each detection in ``order`` claims the best unclaimed gt with IoU >= thresh."""
    n_det, n_gt = iou.shape
    matched = np.full(n_det, -1, dtype=np.int64)
    if n_gt == 0:
        return matched
    claimed = np.zeros(n_gt, dtype=bool)
    for d in order:
        row = np.where(claimed, -1.0, iou[d])
        g = int(np.argmax(row))
        if row[g] >= thresh and not claimed[g]:
            claimed[g] = True
            matched[d] = g
    return matched
