from __future__ import annotations

import numpy as np
import pytest

from crowdmatch.assignment import cgla_assign
from crowdmatch.errors import GenerationError, InputDomainError, SchemaError, SchemaVersionError
from crowdmatch.geometry import BBox, boxes_to_array, iou
from crowdmatch.scenes import Scene, dumps_scenes, load_scenes, loads_scenes, make_scenes
from crowdmatch.synthgen import SceneSpec, gen_predictions, gen_scene, pair_overlap_count


def _pairs_by_oracle(gts):
    return sum(1 for i in range(len(gts)) for j in range(i + 1, len(gts)) if iou(gts[i], gts[j]) > 0.3)


def test_empty_scene():
    gts, stats = gen_scene(SceneSpec(n_pedestrians=0))
    assert gts == [] and stats.pair_iou_count == 0


def test_seed_determinism():
    a, _ = gen_scene(SceneSpec(seed=42))
    b, _ = gen_scene(SceneSpec(seed=42))
    assert a == b
    assert gen_predictions(a, SceneSpec(seed=42)) == gen_predictions(b, SceneSpec(seed=42))
    c, _ = gen_scene(SceneSpec(seed=43))
    assert a != c


def test_overlap_statistics_over_100_seeds():
    counts = []
    for seed in range(100):
        spec = SceneSpec(seed=seed)
        gts, stats = gen_scene(spec)
        assert len(gts) == 22
        assert stats.pair_iou_count == _pairs_by_oracle(gts)
        counts.append(stats.pair_iou_count)
    assert min(counts) >= 7 and max(counts) <= 11
    assert 8 <= np.mean(counts) <= 10


def test_boxes_inside_image_and_valid():
    for seed in range(10):
        spec = SceneSpec(seed=seed, image_w=640, image_h=360, height_median=90)
        gts, _ = gen_scene(spec)
        preds = gen_predictions(gts, spec)
        arr = boxes_to_array(gts + [p.box for p in preds])
        assert (arr[:, 0] >= 0).all() and (arr[:, 2] <= 640).all()
        assert (arr[:, 1] >= 0).all() and (arr[:, 3] <= 360).all()
        assert (arr[:, 2] >= arr[:, 0]).all() and (arr[:, 3] >= arr[:, 1]).all()


def test_noiseless_predictions_equal_gts():
    spec = SceneSpec(seed=1, center_jitter=0, scale_jitter=0, hit_prob=1.0, occlusion_penalty=0.0,
                     clutter=0, score_noise=0)
    gts, _ = gen_scene(spec)
    preds = gen_predictions(gts, spec)
    assert sorted(p.box.as_tuple() for p in preds) == sorted(g.as_tuple() for g in gts)
    assert all(p.score == pytest.approx(1.0, abs=1e-6) for p in preds)


def test_hit_prob_zero_gives_only_clutter():
    spec = SceneSpec(seed=2, hit_prob=0.0, clutter=12)
    gts, _ = gen_scene(spec)
    preds = gen_predictions(gts, spec)
    assert len(preds) == 12
    assert all(0.3 <= p.score <= 0.7 for p in preds)


def test_default_spec_realizes_filtered_pairs():
    scenes = make_scenes(200, seed=500)
    filtered = sum(len(cgla_assign(s.gts, s.preds).filtered) for s in scenes)
    assert filtered / len(scenes) >= 0.1


def test_generation_error_when_target_unreachable():
    with pytest.raises(GenerationError):
        gen_scene(SceneSpec(n_pedestrians=15, target_pair_iou_rate=200))  # only 105 pairs exist


def test_scene_spec_validation():
    with pytest.raises(InputDomainError):
        SceneSpec(n_pedestrians=-1)
    with pytest.raises(InputDomainError):
        SceneSpec(center_jitter=-0.1)
    with pytest.raises(InputDomainError):
        SceneSpec(hit_prob=1.5)


def test_pair_overlap_count_small_cases():
    assert pair_overlap_count(np.zeros((0, 4))) == 0
    two = boxes_to_array([BBox(0, 0, 10, 10), BBox(2, 0, 12, 10)])
    assert pair_overlap_count(two) == 1


# ---- scene files -----------------------------------------------------------------

def test_scene_roundtrip_is_byte_stable():
    scenes = make_scenes(3, seed=9)
    text = dumps_scenes(scenes)
    again = loads_scenes(text)
    assert dumps_scenes(again) == text
    assert again[1].gts == scenes[1].gts and again[1].preds == scenes[1].preds


def test_scene_file_errors(tmp_path):
    with pytest.raises(SchemaError, match="line 1 column"):
        loads_scenes("{not json")
    with pytest.raises(SchemaVersionError):
        loads_scenes('{"schema": 2, "images": []}')
    bad = '{"schema": 1, "images": [{"id": 0, "width": 10, "height": 10, "gts": [], ' \
          '"preds": [{"box": [0, 0, 1, 1], "score": 2}]}]}'
    with pytest.raises(SchemaError, match=r"images\[0\]\.preds\[0\]\.score"):
        loads_scenes(bad)
    neg = '{"schema": 1, "images": [{"id": 0, "width": 10, "height": 10, "gts": [[5, 0, 1, 1]], "preds": []}]}'
    with pytest.raises(SchemaError, match=r"images\[0\]\.gts\[0\]"):
        loads_scenes(neg)
    path = tmp_path / "s.json"
    path.write_text(dumps_scenes([Scene("a", 10, 10)]))
    assert load_scenes(path)[0].id == "a"
