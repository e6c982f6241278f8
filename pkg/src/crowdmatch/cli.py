"""Command-line entry point: gen, assign, eval, sweep, loss-report.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
Set CROWDMATCH_LOG=DEBUG (or INFO, WARNING, ...) for log output on stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import _core
from .ablation import assign_scene, reweighted_detections, sweep
from .costs import CostConfig
from .errors import CrowdMatchError
from .evaluation import evaluate
from .loss import GradientRatioTracker, LossConfig, batch_uafl
from .scenes import SCHEMA_VERSION, Scene, dump_scenes, dumps_scenes, load_scenes, make_scenes
from .synthgen import SceneSpec

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("crowdmatch")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

COST_KEYS = ("alpha", "beta", "lambda1", "lambda2", "focal_alpha", "focal_gamma")
LOSS_KEYS = ("gamma_o", "gamma_clamp", "gamma_min")
DEFAULT_ALPHAS = (0.1, 0.2, 0.3, 0.4, 0.5)
DEFAULT_BETAS = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    cost: CostConfig = field(default_factory=CostConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    seed: int = 0

    def to_dict(self) -> dict:
        return {**self.cost.to_dict(), **self.loss.to_dict(), "seed": self.seed}


def load_config(path: Optional[str], overrides: dict) -> RunConfig:
    """Flat TOML file, then command-line overrides. ``beta`` feeds both costs and loss."""
    values: dict = {}
    if path:
        try:
            with open(path, "rb") as fh:
                values = tomllib.load(fh)
        except FileNotFoundError:
            raise UsageError(f"config file not found: {path}") from None
        except tomllib.TOMLDecodeError as exc:
            raise UsageError(f"config file {path}: {exc}") from None
        unknown = set(values) - set(COST_KEYS) - set(LOSS_KEYS) - {"seed"}
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        cost = CostConfig.from_dict({k: values[k] for k in COST_KEYS if k in values})
        loss_kw = {k: values[k] for k in LOSS_KEYS if k in values}
        loss = LossConfig.from_dict({**loss_kw, "beta": cost.beta})
    except (CrowdMatchError, TypeError) as exc:
        raise UsageError(f"invalid configuration: {exc}") from None
    return RunConfig(cost=cost, loss=loss, seed=int(values.get("seed", 0)))


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("grid must not be empty")
    return vals


def _read_scenes(path: str) -> list[Scene]:
    if not Path(path).is_file():
        raise UsageError(f"input file not found: {path}")
    return load_scenes(path)


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_gen(args, cfg: RunConfig) -> int:
    spec = SceneSpec(n_pedestrians=args.n_pedestrians, clutter=args.clutter)
    scenes = make_scenes(args.count, seed=cfg.seed, spec=spec)
    _emit(dumps_scenes(scenes), args.out)
    log.info("generated %d scenes", len(scenes))
    return EXIT_OK


def cmd_assign(args, cfg: RunConfig) -> int:
    scenes = _read_scenes(args.scenes)
    assignments = [assign_scene(s, cfg.cost, legacy=args.legacy_cost) for s in scenes]
    doc = {
        "schema": SCHEMA_VERSION,
        "legacy_cost": bool(args.legacy_cost),
        "config": cfg.cost.to_dict(),
        "images": [{"id": s.id, **a.to_dict()} for s, a in zip(scenes, assignments)],
    }
    _emit(json.dumps(doc, indent=1) + "\n", args.out)
    if args.reweighted_out:
        dets = reweighted_detections(scenes, cfg.cost, assignments=assignments)
        dump_scenes([Scene(s.id, s.width, s.height, s.gts, d) for s, d in zip(scenes, dets)], args.reweighted_out)
    pos = sum(len(a.positives) for a in assignments)
    filt = sum(len(a.filtered) for a in assignments)
    neg = sum(len(a.negatives) for a in assignments)
    print(f"images={len(scenes)} positives={pos} filtered={filt} negatives={neg}",
          file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


def cmd_eval(args, cfg: RunConfig) -> int:
    det_scenes = _read_scenes(args.dets)
    gt_scenes = _read_scenes(args.gts) if args.gts else det_scenes
    by_id = {s.id: s.preds for s in det_scenes}
    unknown = set(by_id) - {s.id for s in gt_scenes}
    if unknown:
        raise CrowdMatchError(f"detections reference unknown image ids: {sorted(map(str, unknown))}")
    dets = [by_id.get(s.id, []) for s in gt_scenes]
    result = evaluate(dets, [s.gts for s in gt_scenes], iou_thresh=args.iou_thresh, max_dets=args.max_dets)
    if args.out:
        Path(args.out).write_text(result.to_json() + "\n")
    else:
        print(result.to_json())
    print(result.table())
    return EXIT_OK


def cmd_sweep(args, cfg: RunConfig) -> int:
    scenes = _read_scenes(args.scenes)
    rows = sweep(scenes, args.alphas, args.betas, cfg.cost)
    print(f"{'alpha':>6} {'beta':>6} {'filtered':>9} {'MR':>8}")
    for r in rows:
        print(f"{r.alpha:>6.2f} {r.beta:>6.2f} {r.filtered_rate:>9.4f} {r.mr * 100:>7.2f}%")
    if args.out:
        Path(args.out).write_text(json.dumps([r.to_dict() for r in rows], indent=1) + "\n")
    return EXIT_OK


def cmd_loss_report(args, cfg: RunConfig) -> int:
    scenes = _read_scenes(args.scenes)
    tracker = GradientRatioTracker()
    images = []
    for s in scenes:
        a = assign_scene(s, cfg.cost)
        report = batch_uafl(a, s.preds, s.gts, tracker, cfg.loss)
        images.append({"id": s.id, **report.to_dict()})
    doc = {"schema": SCHEMA_VERSION, "config": cfg.to_dict(), "images": images}
    _emit(json.dumps(doc, indent=1) + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat TOML file with cost/loss parameters")
    common.add_argument("--seed", type=int)
    common.add_argument("--alpha", type=float, help="center constraint fraction")
    common.add_argument("--beta", type=float, help="position constraint IoU threshold")
    common.add_argument("--lambda1", type=float)
    common.add_argument("--lambda2", type=float)
    common.add_argument("--gamma-o", dest="gamma_o", type=float, help="anchor focusing exponent")
    common.add_argument("--out", help="output file (default: stdout)")

    parser = _Parser(prog="crowdmatch", description=__doc__.splitlines()[0])
    parser.add_argument("--backend", choices=sorted(_core.BACKENDS), help="kernel backend override")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", parents=[common], help="write synthetic crowded scenes")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--n-pedestrians", type=int, default=22)
    p.add_argument("--clutter", type=int, default=30)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("assign", parents=[common], help="label assignment per image")
    p.add_argument("scenes")
    p.add_argument("--legacy-cost", action="store_true", help="plain DETR cost, no constraint filtering")
    p.add_argument("--reweighted-out", help="also write the score-reweighted detections as a scene file")
    p.set_defaults(func=cmd_assign)

    p = sub.add_parser("eval", parents=[common], help="miss rate and FP breakdown")
    p.add_argument("dets", help="scene file whose preds are the detections")
    p.add_argument("gts", nargs="?", help="scene file with ground truths (default: the dets file)")
    p.add_argument("--iou-thresh", type=float, default=0.5)
    p.add_argument("--max-dets", type=int, help="keep only this many top-scoring detections")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", parents=[common], help="alpha/beta ablation grid")
    p.add_argument("scenes")
    p.add_argument("--alphas", type=_float_list, default=list(DEFAULT_ALPHAS))
    p.add_argument("--betas", type=_float_list, default=list(DEFAULT_BETAS))
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("loss-report", parents=[common], help="per-sample loss, exponent and gradient")
    p.add_argument("scenes")
    p.set_defaults(func=cmd_loss_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    level = os.environ.get("CROWDMATCH_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.backend:
            _core.use_backend(args.backend)
        log.debug("kernel backend: %s", _core.BACKEND)
        overrides = {k: getattr(args, k, None) for k in ("alpha", "beta", "lambda1", "lambda2", "gamma_o", "seed")}
        cfg = load_config(args.config, overrides)
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"crowdmatch: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CrowdMatchError as exc:
        print(f"crowdmatch: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"crowdmatch: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
