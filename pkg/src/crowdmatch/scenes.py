"""Scene files: ground truths plus predictions per image, as versioned JSON.

    {"schema": 1,
     "images": [{"id": ..., "width": W, "height": H,
                 "gts": [[x1, y1, x2, y2], ...],
                 "preds": [{"box": [x1, y1, x2, y2], "score": s}, ...]}]}
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence, Union

from .errors import CrowdMatchError, SchemaError, SchemaVersionError
from .geometry import BBox, Sample
from .synthgen import SceneSpec, gen_predictions, gen_scene

SCHEMA_VERSION = 1

__all__ = ["Scene", "SCHEMA_VERSION", "load_scenes", "loads_scenes", "dump_scenes", "dumps_scenes", "make_scenes"]


@dataclass
class Scene:
    id: Union[int, str]
    width: float
    height: float
    gts: list[BBox] = field(default_factory=list)
    preds: list[Sample] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "width": self.width,
            "height": self.height,
            "gts": [list(b.as_tuple()) for b in self.gts],
            "preds": [{"box": list(p.box.as_tuple()), "score": p.score} for p in self.preds],
        }


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise SchemaError(f"expected a finite number, got {value!r}", where)
    return float(value)


def _box(value: Any, where: str) -> BBox:
    if not isinstance(value, list) or len(value) != 4:
        raise SchemaError("expected [x1, y1, x2, y2]", where)
    coords = [_number(v, f"{where}[{k}]") for k, v in enumerate(value)]
    try:
        return BBox(*coords)
    except CrowdMatchError as exc:
        raise SchemaError(str(exc), where) from None


def _scene(obj: Any, where: str) -> Scene:
    if not isinstance(obj, dict):
        raise SchemaError("expected an object", where)
    for key in ("id", "width", "height", "gts", "preds"):
        if key not in obj:
            raise SchemaError(f"missing field {key!r}", where)
    if not isinstance(obj["id"], (int, str)) or isinstance(obj["id"], bool):
        raise SchemaError("id must be an integer or string", f"{where}.id")
    width = _number(obj["width"], f"{where}.width")
    height = _number(obj["height"], f"{where}.height")
    if width <= 0 or height <= 0:
        raise SchemaError("image size must be positive", f"{where}.width")
    if not isinstance(obj["gts"], list):
        raise SchemaError("expected a list", f"{where}.gts")
    if not isinstance(obj["preds"], list):
        raise SchemaError("expected a list", f"{where}.preds")
    gts = [_box(b, f"{where}.gts[{k}]") for k, b in enumerate(obj["gts"])]
    preds = []
    for k, p in enumerate(obj["preds"]):
        pw = f"{where}.preds[{k}]"
        if not isinstance(p, dict) or "box" not in p or "score" not in p:
            raise SchemaError("expected {'box': [...], 'score': s}", pw)
        score = _number(p["score"], f"{pw}.score")
        if not 0.0 <= score <= 1.0:
            raise SchemaError(f"score must lie in [0, 1], got {score}", f"{pw}.score")
        preds.append(Sample(_box(p["box"], f"{pw}.box"), score))
    return Scene(obj["id"], width, height, gts, preds)


def loads_scenes(text: str) -> list[Scene]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    if not isinstance(doc, dict):
        raise SchemaError("top level must be an object", "$")
    if doc.get("schema") != SCHEMA_VERSION:
        raise SchemaVersionError(f"unsupported schema version {doc.get('schema')!r}, expected {SCHEMA_VERSION}", "schema")
    images = doc.get("images")
    if not isinstance(images, list):
        raise SchemaError("expected a list", "images")
    return [_scene(obj, f"images[{k}]") for k, obj in enumerate(images)]


def load_scenes(path: Union[str, Path]) -> list[Scene]:
    return loads_scenes(Path(path).read_text())


def dumps_scenes(scenes: Sequence[Scene]) -> str:
    doc = {"schema": SCHEMA_VERSION, "images": [s.to_dict() for s in scenes]}
    return json.dumps(doc, indent=1) + "\n"


def dump_scenes(scenes: Sequence[Scene], path: Union[str, Path]) -> None:
    Path(path).write_text(dumps_scenes(scenes))


def make_scenes(count: int, seed: int = 0, spec: SceneSpec | None = None) -> list[Scene]:
    """``count`` synthetic scenes; scene k uses seed ``seed + k``."""
    spec = spec or SceneSpec()
    out = []
    for k in range(count):
        s = spec.replace(seed=seed + k)
        gts, _ = gen_scene(s)
        out.append(Scene(k, s.image_w, s.image_h, gts, gen_predictions(gts, s)))
    return out
