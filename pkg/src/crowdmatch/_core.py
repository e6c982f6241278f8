"""Kernel dispatch: compiled extension when importable, numpy fallback otherwise.

Set ``CROWDMATCH_PURE=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _fallback

BACKENDS = {"python": _fallback}

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None
else:
    BACKENDS["cython"] = _compiled

if _compiled is not None and os.environ.get("CROWDMATCH_PURE", "") in ("", "0"):
    BACKEND = "cython"
    _impl = _compiled
else:
    BACKEND = "python"
    _impl = _fallback


def use_backend(name: str) -> None:
    """Switch the active backend at runtime (tests and benchmarks)."""
    global BACKEND, _impl
    if name not in BACKENDS:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}")
    BACKEND = name
    _impl = BACKENDS[name]


def pairwise_iou(a, b):
    return _impl.pairwise_iou(a, b)


def pairwise_giou(a, b):
    return _impl.pairwise_giou(a, b)


def lsa_rect(cost):
    return _impl.lsa_rect(cost)


def greedy_match(iou, order, thresh):
    return _impl.greedy_match(iou, order, float(thresh))
