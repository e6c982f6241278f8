"""Compiled vs pure-numpy kernels.

    python3 benchmarks/bench_kernels.py [--repeat N]

Times each kernel on both backends with identical inputs, checks the outputs
are bit-identical, and prints the speedup.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from crowdmatch import _core
from crowdmatch.assignment import cgla_assign
from crowdmatch.scenes import make_scenes


def _boxes(rng, n):
    xy = rng.uniform(0, 1000, size=(n, 2))
    wh = rng.uniform(5, 150, size=(n, 2))
    return np.hstack([xy, xy + wh])


def cases(rng):
    a, b = _boxes(rng, 30), _boxes(rng, 300)
    iou_mat = rng.uniform(0, 1, size=(300, 30))
    order = np.argsort(-rng.uniform(size=300)).astype(np.int64)
    cost = rng.normal(size=(25, 300))
    scenes = make_scenes(20, seed=0)
    return {
        "pairwise_iou 30x300": lambda: _core.pairwise_iou(a, b),
        "pairwise_giou 30x300": lambda: _core.pairwise_giou(a, b),
        "lsa_rect 25x300": lambda: _core.lsa_rect(cost),
        "greedy_match 300x30": lambda: _core.greedy_match(iou_mat, order, 0.5),
        "cgla_assign 20 scenes": lambda: [cgla_assign(s.gts, s.preds) for s in scenes],
    }


def _same(x, y):
    if isinstance(x, tuple):
        return all(_same(p, q) for p, q in zip(x, y))
    if isinstance(x, list):
        return x == y
    return np.array_equal(x, y, equal_nan=True)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = sorted(_core.BACKENDS)
    if "cython" not in backends:
        print("compiled extension not built; only the numpy fallback is available")
    prev = _core.BACKEND
    print(f"{'kernel':<24}" + "".join(f"{b + ' [ms]':>16}" for b in backends) + f"{'speedup':>10}{'identical':>11}")
    try:
        for name in cases(np.random.default_rng(0)):
            times, outs = {}, {}
            for be in backends:
                _core.use_backend(be)
                fn = cases(np.random.default_rng(0))[name]
                outs[be] = fn()
                n = max(1, int(0.2 / max(timeit.timeit(fn, number=1), 1e-6)))
                times[be] = min(timeit.repeat(fn, number=n, repeat=args.repeat)) / n * 1e3
            speed = times["python"] / times["cython"] if "cython" in times else float("nan")
            same = all(_same(outs[backends[0]], o) for o in outs.values()) if "cgla" not in name else "-"
            print(f"{name:<24}" + "".join(f"{times[b]:>16.3f}" for b in backends) + f"{speed:>9.1f}x{str(same):>11}")
    finally:
        _core.use_backend(prev)


if __name__ == "__main__":
    main()
