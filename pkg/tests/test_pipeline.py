import shlex
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from glarefuse import formats
from glarefuse.benchmark import write_scenes
from glarefuse.glare_mask import MaskParams, build_mask, dilate, erode
from glarefuse.inpaint import InpaintParams
from glarefuse.pipeline import (
    EXIT_OK,
    EXIT_PARTIAL,
    ConfigError,
    PipelineConfig,
    SmoothParams,
    make_variants,
    run_pipeline,
    variant_combinations,
)
from glarefuse.synth import SimDetectorSpec, benchmark_scenes
from glarefuse.wbf import FusionParams, fuse

PERFECT = SimDetectorSpec(tp_rate=1.0, glare_fp_rate=0.0, base_fp_rate=0.0, jitter=0.0)


@pytest.fixture(scope="module")
def bench(tmp_path_factory):
    root = tmp_path_factory.mktemp("bench")
    write_scenes(benchmark_scenes(seed=3, images_per_domain=4), root)
    return root


def config(bench, out, **kw):
    return PipelineConfig(output_dir=out, input_dir=bench / "images",
                          ground_truth=bench / "ground_truth.jsonl", **kw)


def test_combinations_follow_table_layout():
    assert variant_combinations(("original", "inpainted", "smoothed")) == [
        ("original",), ("original", "inpainted"), ("original", "smoothed"),
        ("original", "inpainted", "smoothed")]
    assert variant_combinations(("smoothed", "original")) == [("original",), ("original", "smoothed")]


def test_smoothed_differs_from_inpainted_only_near_mask_edge():
    from glarefuse.synth import SceneSpec, generate_scene
    img = generate_scene(SceneSpec(seed=1, n_glare=3)).image
    v = make_variants(img, ("original", "inpainted", "smoothed"), MaskParams(), InpaintParams(), SmoothParams())
    mask = build_mask(img)
    band = dilate(mask, 3, 2) & ~erode(mask, 3, 2)
    assert v["original"] is img
    assert np.array_equal(v["inpainted"][~mask], img[~mask])
    assert np.array_equal(v["smoothed"][~band], v["inpainted"][~band])
    assert not np.array_equal(v["smoothed"], v["inpainted"])


def test_perfect_detector_scores_one(bench, tmp_path):
    res = run_pipeline(config(bench, tmp_path, variants=("original",), sim=PERFECT))
    assert res.exit_code == EXIT_OK
    assert res.table == {"original": {0.25: 1.0, 0.30: 1.0, 0.35: 1.0}}


def test_report_schema(bench, tmp_path):
    res = run_pipeline(config(bench, tmp_path, conf_thresholds=(0.25, 0.30)))
    lines = (tmp_path / "report.csv").read_text().splitlines()
    assert lines[0] == "variants,0.25,0.30"
    assert [l.split(",")[0] for l in lines[1:]] == [
        "original", "original+inpainted", "original+smoothed", "original+inpainted+smoothed"]
    assert sorted(res.reports["original"][0.25].per_domain) == ["dark_canopy", "mixed_field", "sunlit_soil"]


def test_fusing_inpainted_variant_helps(bench, tmp_path):
    res = run_pipeline(config(bench, tmp_path, variants=("original", "inpainted")))
    for t in (0.25, 0.30, 0.35):
        assert res.table["original+inpainted"][t] > res.table["original"][t]


def test_deterministic_and_worker_independent(bench, tmp_path):
    outs = [tmp_path / "a", tmp_path / "b", tmp_path / "c"]
    run_pipeline(config(bench, outs[0]))
    run_pipeline(config(bench, outs[1]))
    run_pipeline(config(bench, outs[2], workers=2))
    for name in ("report.csv", "fused.jsonl", "detections/original.jsonl", "detections/smoothed.jsonl"):
        data = {(o / name).read_bytes() for o in outs}
        assert len(data) == 1, name


def test_variant_isolation(bench, tmp_path):
    full = run_pipeline(config(bench, tmp_path / "full"))
    only = run_pipeline(config(bench, tmp_path / "only", variants=("original",)))
    other = run_pipeline(config(bench, tmp_path / "other", inpaint=InpaintParams(max_iters=5, radius=1)))
    for image_id, sets in full.detections.items():
        assert only.detections[image_id]["original"] == sets["original"]
        assert other.detections[image_id]["original"] == sets["original"]


def test_detection_file_mode_equals_direct_fusion(bench, tmp_path):
    first = run_pipeline(config(bench, tmp_path / "first"))
    dets = tmp_path / "first" / "detections"
    p = FusionParams()
    res = run_pipeline(PipelineConfig(output_dir=tmp_path / "files", detector="files", detections_dir=dets,
                                      ground_truth=bench / "ground_truth.jsonl", fusion=p))
    sets = {v: {d.image_id: d for d in formats.read_detections(dets / f"{v}.jsonl")}
            for v in ("original", "inpainted", "smoothed")}
    for image_id, fused in res.fused.items():
        direct = fuse([sets[v][image_id] for v in ("original", "inpainted", "smoothed")], p)
        assert fused == direct
    assert res.table == first.table
    assert (tmp_path / "files" / "fused.jsonl").read_bytes() == (tmp_path / "first" / "fused.jsonl").read_bytes()


def test_partial_failure(bench, tmp_path):
    det = tmp_path / "det.py"
    det.write_text(
        "import json, sys\nfrom pathlib import Path\n"
        "p = Path(sys.argv[1])\n"
        "if p.stem.endswith('0001'):\n    sys.exit(4)\n"
        "print(json.dumps({'image_id': p.stem, 'source_id': p.parent.name, 'boxes': []}))\n")
    cmd = f"{shlex.quote(sys.executable)} {shlex.quote(str(det))}"
    res = run_pipeline(config(bench, tmp_path / "out", detector="command", detector_command=cmd))
    assert res.exit_code == EXIT_PARTIAL
    assert sorted(res.failures) == ["dark_canopy_0001", "mixed_field_0001", "sunlit_soil_0001"]
    assert "code 4" in res.failures["dark_canopy_0001"]
    assert len(res.detections) == 9
    assert (tmp_path / "out" / "failures.txt").read_text().count("\n") == 3
    assert (tmp_path / "out" / "report.csv").exists()


def test_overlays_and_variants_written(bench, tmp_path):
    run_pipeline(config(bench, tmp_path, overlays=True, save_variants=True, variants=("original", "inpainted")))
    assert len(list((tmp_path / "overlays").glob("*.png"))) == 12
    overlay = formats.read_image(next((tmp_path / "overlays").glob("*.png")))
    assert overlay.shape == (128, 256, 3)
    assert len(list((tmp_path / "variants" / "inpainted").glob("*.png"))) == 12


@pytest.mark.parametrize("changes", [
    {"variants": ()},
    {"variants": ("inpainted",)},
    {"variants": ("original", "sharpened")},
    {"detector": "magic"},
    {"detector": "files"},
    {"workers": 0},
    {"ground_truth": None},
    {"conf_thresholds": ()},
])
def test_config_errors(bench, tmp_path, changes):
    with pytest.raises(ConfigError):
        run_pipeline(replace(config(bench, tmp_path), **changes))


def test_missing_input_directory(tmp_path):
    cfg = PipelineConfig(output_dir=tmp_path, input_dir=tmp_path / "nope", ground_truth=tmp_path / "gt.json")
    with pytest.raises(ConfigError):
        run_pipeline(cfg)


def test_without_glare_false_positives_fusion_changes_nothing():
    from glarefuse.benchmark import BenchmarkConfig, run_benchmark
    cfg = BenchmarkConfig(images_per_domain=3, detector=SimDetectorSpec(glare_fp_rate=0.0))
    table = run_benchmark(1, cfg)
    for row in table.values():
        assert row == pytest.approx(table["original"], abs=1e-12)
