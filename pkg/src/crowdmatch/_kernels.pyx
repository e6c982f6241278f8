# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_fallback.py``.

Keep the arithmetic in the same order as the numpy versions; the test suite
checks the two backends for exact equality.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY, NAN

cnp.import_array()


cdef inline void _inter_union(double ax1, double ay1, double ax2, double ay2,
                              double bx1, double by1, double bx2, double by2,
                              double* inter, double* union_) noexcept nogil:
    cdef double iw = min(ax2, bx2) - max(ax1, bx1)
    if iw < 0.0:
        iw = 0.0
    cdef double ih = min(ay2, by2) - max(ay1, by1)
    if ih < 0.0:
        ih = 0.0
    inter[0] = iw * ih
    cdef double area_a = (ax2 - ax1) * (ay2 - ay1)
    cdef double area_b = (bx2 - bx1) * (by2 - by1)
    union_[0] = area_a + area_b - inter[0]


def pairwise_iou(const double[:, ::1] a, const double[:, ::1] b):
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0], i, j
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double inter, union_
    with nogil:
        for i in range(n):
            for j in range(m):
                _inter_union(a[i, 0], a[i, 1], a[i, 2], a[i, 3], b[j, 0], b[j, 1], b[j, 2], b[j, 3],
                             &inter, &union_)
                if union_ <= 0.0:
                    o[i, j] = NAN
                else:
                    o[i, j] = inter / union_
    return out


def pairwise_giou(const double[:, ::1] a, const double[:, ::1] b):
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0], i, j
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double inter, union_, cw, ch, c_area, overlap
    with nogil:
        for i in range(n):
            for j in range(m):
                _inter_union(a[i, 0], a[i, 1], a[i, 2], a[i, 3], b[j, 0], b[j, 1], b[j, 2], b[j, 3],
                             &inter, &union_)
                cw = max(a[i, 2], b[j, 2]) - min(a[i, 0], b[j, 0])
                ch = max(a[i, 3], b[j, 3]) - min(a[i, 1], b[j, 1])
                c_area = cw * ch
                if c_area <= 0.0:
                    o[i, j] = NAN
                    continue
                overlap = inter / union_ if union_ > 0.0 else 0.0
                o[i, j] = overlap - (c_area - union_) / c_area
    return out


def lsa_rect(const double[:, ::1] cost):
    """Shortest-augmenting-path Hungarian for n rows <= m cols."""
    cdef Py_ssize_t n = cost.shape[0], m = cost.shape[1]
    cdef Py_ssize_t i, j, j0, j1, i0
    cdef double delta, cur
    u_arr = np.zeros(n + 1)
    v_arr = np.zeros(m + 1)
    p_arr = np.zeros(m + 1, dtype=np.int64)
    way_arr = np.zeros(m + 1, dtype=np.int64)
    minv_arr = np.empty(m + 1)
    used_arr = np.empty(m + 1, dtype=np.uint8)
    cdef double[::1] u = u_arr, v = v_arr, minv = minv_arr
    cdef cnp.int64_t[::1] p = p_arr, way = way_arr
    cdef unsigned char[::1] used = used_arr
    with nogil:
        for i in range(1, n + 1):
            p[0] = i
            j0 = 0
            for j in range(m + 1):
                minv[j] = INFINITY
                used[j] = 0
            while True:
                used[j0] = 1
                i0 = p[j0]
                delta = INFINITY
                j1 = -1
                for j in range(1, m + 1):
                    if not used[j]:
                        cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                        if cur < minv[j]:
                            minv[j] = cur
                            way[j] = j0
                        if j1 == -1 or minv[j] < delta:
                            delta = minv[j]
                            j1 = j
                for j in range(m + 1):
                    if used[j]:
                        u[p[j]] += delta
                        v[j] -= delta
                    else:
                        minv[j] -= delta
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
        if p_arr[j]:
            row_to_col[p_arr[j] - 1] = j - 1
    return row_to_col, u_arr[1:].copy(), v_arr[1:].copy()


def greedy_match(const double[:, ::1] iou, const cnp.int64_t[::1] order, double thresh):
    cdef Py_ssize_t n_det = iou.shape[0], n_gt = iou.shape[1]
    cdef Py_ssize_t k, d, g, best
    cdef double best_val
    matched_arr = np.full(n_det, -1, dtype=np.int64)
    claimed_arr = np.zeros(n_gt, dtype=np.uint8)
    cdef cnp.int64_t[::1] matched = matched_arr
    cdef unsigned char[::1] claimed = claimed_arr
    with nogil:
        for k in range(order.shape[0]):
            d = order[k]
            best = -1
            best_val = -1.0
            for g in range(n_gt):
                if not claimed[g] and iou[d, g] > best_val:
                    best_val = iou[d, g]
                    best = g
            if best >= 0 and best_val >= thresh:
                claimed[best] = 1
                matched[d] = best
    return matched_arr
