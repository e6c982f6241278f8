from __future__ import annotations

import json

import pytest

from crowdmatch.cli import DEFAULT_ALPHAS, DEFAULT_BETAS, load_config, main
from crowdmatch.geometry import BBox, Sample
from crowdmatch.scenes import Scene, dump_scenes, load_scenes, make_scenes
from crowdmatch.synthgen import SceneSpec


@pytest.fixture
def scene_file(tmp_path):
    path = tmp_path / "scenes.json"
    assert main(["gen", "--count", "4", "--seed", "3", "--out", str(path)]) == 0
    return path


def _occluded_scene():
    gts = [BBox(0, 0, 40, 100), BBox(100, 0, 140, 100), BBox(200, 0, 240, 100)]
    preds = [Sample(BBox(1, 0, 41, 100), 0.9), Sample(BBox(200, 1, 240, 101), 0.85),
             Sample(BBox(132.7272727, 0, 172.7272727, 100), 0.6)]
    return Scene(0, 400, 200, gts, preds)


def test_assign_writes_assignments_and_summary(scene_file, tmp_path, capsys):
    out = tmp_path / "a.json"
    assert main(["assign", str(scene_file), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert len(doc["images"]) == 4
    line = capsys.readouterr().out.strip()
    pos = sum(len(i["positives"]) for i in doc["images"])
    assert line.startswith("images=4 ") and f"positives={pos}" in line


def test_assign_noiseless_scene_filters_nothing(tmp_path, capsys):
    spec = SceneSpec(center_jitter=0, scale_jitter=0, hit_prob=1.0, occlusion_penalty=0.0, clutter=5)
    path = tmp_path / "clean.json"
    dump_scenes(make_scenes(2, seed=1, spec=spec), path)
    assert main(["assign", str(path), "--out", str(tmp_path / "a.json")]) == 0
    assert "filtered=0" in capsys.readouterr().out


def test_assign_occluded_fixture_filters(tmp_path, capsys):
    path = tmp_path / "occluded.json"
    dump_scenes([_occluded_scene()], path)
    assert main(["assign", str(path), "--out", str(tmp_path / "a.json")]) == 0
    assert "filtered=1" in capsys.readouterr().out
    assert main(["assign", str(path), "--legacy-cost", "--out", str(tmp_path / "l.json")]) == 0
    assert "filtered=0" in capsys.readouterr().out


def test_assign_empty_scene_list(tmp_path):
    path = tmp_path / "empty.json"
    dump_scenes([], path)
    out = tmp_path / "a.json"
    assert main(["assign", str(path), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["images"] == []


def test_eval_perfect_and_empty(tmp_path, capsys):
    scenes = make_scenes(2, seed=4)
    perfect = [Scene(s.id, s.width, s.height, s.gts, [Sample(g, 0.9) for g in s.gts]) for s in scenes]
    empty = [Scene(s.id, s.width, s.height, s.gts, []) for s in scenes]
    dump_scenes(perfect, tmp_path / "p.json")
    dump_scenes(empty, tmp_path / "e.json")
    assert main(["eval", str(tmp_path / "p.json")]) == 0
    assert "MR = 0.00%" in capsys.readouterr().out
    assert main(["eval", str(tmp_path / "e.json"), str(tmp_path / "p.json"), "--out", str(tmp_path / "r.json")]) == 0
    assert "MR = 100.00%" in capsys.readouterr().out
    assert json.loads((tmp_path / "r.json").read_text())["mr"] == 1.0


def test_eval_golden_regression(tmp_path):
    # fixture from the hand-stepped evaluation case; MR frozen after verification
    gl, gr = [0, 0, 10, 10], [20, 0, 30, 10]
    doc = {"schema": 1, "images": [
        {"id": 0, "width": 100, "height": 100, "gts": [gl, gr],
         "preds": [{"box": gl, "score": 0.9}, {"box": [50, 50, 60, 60], "score": 0.6}, {"box": gr, "score": 0.5}]},
        {"id": 1, "width": 100, "height": 100, "gts": [gl, gr],
         "preds": [{"box": [50, 50, 60, 60], "score": 0.8}, {"box": gl, "score": 0.7},
                   {"box": [40, 40, 45, 45], "score": 0.4}]},
    ]}
    (tmp_path / "d.json").write_text(json.dumps(doc))
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}.json"
        assert main(["eval", str(tmp_path / "d.json"), "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    res = json.loads(outs[0])
    assert res["mr"] == pytest.approx((0.75 ** 7 * 0.5 * 0.25) ** (1 / 9), abs=1e-15)
    assert res["fp_histogram"] == {"[0.0,0.2)": 3, "[0.2,0.4)": 0, "[0.4,0.6)": 0, "[0.6,0.8)": 0, "[0.8,1.0]": 0}


def test_sweep_singleton_equals_assign_then_eval(scene_file, tmp_path, capsys):
    out = tmp_path / "sweep.json"
    assert main(["sweep", str(scene_file), "--alphas", "0.3", "--betas", "0.6", "--out", str(out)]) == 0
    rows = json.loads(out.read_text())
    assert len(rows) == 1
    rw = tmp_path / "rw.json"
    assert main(["assign", str(scene_file), "--reweighted-out", str(rw), "--out", str(tmp_path / "a.json")]) == 0
    assert main(["eval", str(rw), "--out", str(tmp_path / "e.json")]) == 0
    assert json.loads((tmp_path / "e.json").read_text())["mr"] == rows[0]["mr"]
    capsys.readouterr()


def test_sweep_grid_shapes(scene_file, tmp_path):
    out = tmp_path / "sweep.json"
    assert main(["sweep", str(scene_file), "--alphas", "0.2,0.3", "--betas", "0.5,0.6", "--out", str(out)]) == 0
    assert len(json.loads(out.read_text())) == 4
    assert len(DEFAULT_ALPHAS) == 5 and DEFAULT_BETAS[0] == 0.0 and DEFAULT_BETAS[-1] == 0.8


def test_sweep_filtered_rate_grows_with_beta(tmp_path):
    path = tmp_path / "s.json"
    dump_scenes(make_scenes(20, seed=100), path)
    out = tmp_path / "sweep.json"
    assert main(["sweep", str(path), "--alphas", "0.3", "--betas", "0.4,0.8", "--out", str(out)]) == 0
    lo, hi = json.loads(out.read_text())
    assert hi["filtered_rate"] > lo["filtered_rate"]


def test_loss_report(scene_file, tmp_path):
    out = tmp_path / "loss.json"
    assert main(["loss-report", str(scene_file), "--gamma-o", "1.5", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["config"]["gamma_o"] == 1.5
    for img in doc["images"]:
        for e in img["entries"]:
            assert e["loss"] >= 0 and e["gamma"] >= 0.05


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("alpha = 0.2\nbeta = 0.5\ngamma_o = 1.5\ngamma_clamp = [0.0, 2.0]\n")
    rc = load_config(str(cfg), {"beta": 0.7, "alpha": None})
    assert rc.cost.alpha == 0.2 and rc.cost.beta == 0.7 and rc.loss.beta == 0.7
    assert rc.loss.gamma_o == 1.5 and rc.loss.gamma_clamp == (0.0, 2.0)


def test_exit_codes(tmp_path, capsys):
    assert main(["assign", str(tmp_path / "missing.json")]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1
    bad_cfg = tmp_path / "bad.toml"
    bad_cfg.write_text("nonsense_key = 1\n")
    dump_scenes([], tmp_path / "ok.json")
    assert main(["assign", str(tmp_path / "ok.json"), "--config", str(bad_cfg)]) == 1
    assert main(["assign", str(tmp_path / "ok.json"), "--beta", "1.5"]) == 1
    (tmp_path / "v2.json").write_text('{"schema": 2, "images": []}')
    assert main(["assign", str(tmp_path / "v2.json")]) == 2
    (tmp_path / "broken.json").write_text('{"schema": 1, "images": [')
    assert main(["assign", str(tmp_path / "broken.json")]) == 2
    assert "line 1 column" in capsys.readouterr().err


def test_internal_error_exit_code(scene_file, monkeypatch):
    import crowdmatch.cli as cli

    def boom(*a, **k):
        raise RuntimeError("kaput")

    monkeypatch.setattr(cli, "assign_scene", boom)
    assert main(["assign", str(scene_file)]) == 3


def test_gen_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["gen", "--count", "3", "--seed", "11", "--out", str(a)])
    main(["gen", "--count", "3", "--seed", "11", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()
    assert len(load_scenes(a)) == 3
