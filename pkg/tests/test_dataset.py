import json
from dataclasses import replace

import numpy as np
import pytest

from echoimaging.dataset import (
    DatasetFile, ExperimentPlan, PRESETS, generate_dataset, load_histograms, place_object, preset,
    record_dtype, run_info_analysis, run_multipath_sweep, scene_for, truncate_dataset,
)
from echoimaging.histogram import max_tof, truncate
from echoimaging.io import read_pgm
from echoimaging.reconstruct import TrainConfig
from echoimaging.scene import SPEED_OF_LIGHT, default_scene, detector_bounds
from echoimaging.tracer import render_depth, trace_rays

TINY_TRAIN = TrainConfig(epochs=1, batch_size=4, down=(8,), up=(8, 8))


def small_plan(**kw):
    base = dict(n_train=3, n_test=2, rays_per_scene=500, max_bounces=(1, 2), image_hw=(16, 16),
                bins=32, train=TINY_TRAIN, retrains=1, seed=5)
    base.update(kw)
    return ExperimentPlan(**base)


@pytest.fixture(scope="module")
def generated(tmp_path_factory):
    plan = small_plan()
    out = tmp_path_factory.mktemp("data")
    generate_dataset(plan, out)
    return plan, out


def test_files_written(generated):
    plan, out = generated
    names = sorted(p.name for p in out.iterdir())
    assert names == ["mask.pgm", "plan.json", "test_k1.etd", "test_k2.etd", "train_k1.etd", "train_k2.etd"]
    assert ExperimentPlan.from_json(out / "plan.json") == plan


def test_depths_identical_across_k(generated):
    _, out = generated
    a = DatasetFile.load(out / "train_k1.etd")
    b = DatasetFile.load(out / "train_k2.etd")
    assert len(a) == len(b) == 3
    assert np.array_equal(a.records["depth"], b.records["depth"])
    assert a.records["max_bounces"].tolist() == [1, 1, 1] and b.records["max_bounces"].tolist() == [2, 2, 2]


def test_k1_equals_single_bounce_part_of_k2(generated):
    plan, out = generated
    k1 = DatasetFile.load(out / "train_k1.etd")
    k2 = DatasetFile.load(out / "train_k2.etd")
    assert np.all(k1.counts <= k2.counts)
    # arrival-level: retrace scene 0 and keep only single-bounce arrivals
    sc = scene_for(plan, 0)
    res = trace_rays(sc, plan.rays_per_scene, 2, plan.window_s)
    assert np.array_equal(res.histogram(plan.bins, plan.window_s, 1).counts, k1.counts[0])
    assert np.array_equal(res.histogram(plan.bins, plan.window_s, 2).counts, k2.counts[0])


def test_ground_truth_matches_render(generated):
    plan, out = generated
    f = DatasetFile.load(out / "test_k2.etd")
    sid = int(f.scene_ids[0])
    assert sid == plan.n_train
    sc = scene_for(plan, sid)
    assert np.allclose(f.depths[0], render_depth(sc, height=16, width=16).depth, atol=1e-5)
    assert f.records["seed"][0] == sc.seed
    assert f.depth_scale_m == pytest.approx(plan.scene.room.diagonal)
    mask = read_pgm(out / "mask.pgm")
    assert np.allclose(mask, render_depth(plan.scene.empty(), height=16, width=16).depth, atol=1.1e-4)


def test_regeneration_bitwise_identical(generated, tmp_path):
    plan, out = generated
    generate_dataset(plan, tmp_path)
    for name in ("train_k1.etd", "train_k2.etd", "test_k1.etd", "test_k2.etd", "mask.pgm"):
        assert (out / name).read_bytes() == (tmp_path / name).read_bytes()


def test_round_trip_byte_identical(generated, tmp_path):
    _, out = generated
    raw = (out / "train_k2.etd").read_bytes()
    f = DatasetFile.from_bytes(raw)
    f.save(tmp_path / "again.etd")
    assert (tmp_path / "again.etd").read_bytes() == raw


def test_header_layout(generated):
    _, out = generated
    raw = (out / "train_k1.etd").read_bytes()
    assert raw[:4] == b"ETD1"
    version, n, b, h, w = np.frombuffer(raw[4:24], "<u4")
    bw, scale = np.frombuffer(raw[24:40], "<f8")
    assert (version, n, b, h, w) == (1, 3, 32, 16, 16)
    assert len(raw) == 40 + n * record_dtype(b, h, w).itemsize
    assert record_dtype(b, h, w).itemsize == 4 + 8 + 16 + 4 * b + 4 * h * w + 4


def test_corrupt_files_rejected(generated):
    _, out = generated
    raw = (out / "train_k1.etd").read_bytes()
    with pytest.raises(ValueError):
        DatasetFile.from_bytes(raw[:-1])
    with pytest.raises(ValueError):
        DatasetFile.from_bytes(b"ETD2" + raw[4:])
    with pytest.raises(ValueError):
        DatasetFile.from_bytes(raw[:20])


def test_train_test_disjoint():
    plan = small_plan()
    assert not set(plan.train_ids()) & set(plan.test_ids())
    train_seeds = {plan.scene_seed(i) for i in plan.train_ids()}
    test_seeds = {plan.scene_seed(i) for i in plan.test_ids()}
    assert not train_seeds & test_seeds


def test_placement_avoids_emitter_and_detector():
    plan = ExperimentPlan()
    lo, hi = detector_bounds(plan.scene.detector)
    for i in range(300):
        obj = place_object(plan, plan.scene_seed(i))
        assert not obj.contains_point(plan.scene.emitter.position)
        assert not (np.all(obj.lower <= hi) and np.all(lo <= obj.upper))


def test_plan_validation_and_json(tmp_path):
    with pytest.raises(ValueError):
        small_plan(max_bounces=(1, 1))
    with pytest.raises(ValueError):
        small_plan(n_train=0, n_test=0)
    with pytest.raises(ValueError):
        ExperimentPlan.from_dict({"n_trian": 3})
    plan = small_plan()
    plan.to_json(tmp_path / "p.json")
    assert ExperimentPlan.from_json(tmp_path / "p.json") == plan


def test_presets():
    desk, full = PRESETS["desk"], PRESETS["full"]
    assert (desk.n_train, desk.n_test, desk.rays_per_scene, desk.max_bounces, desk.retrains) == (500, 50, 2000, (1, 2, 4, 8), 3)
    assert (full.n_train, full.n_test, full.rays_per_scene, full.retrains) == (2000, 100, 10_000, 10)
    assert full.epochs_for(1) == 110 and full.epochs_for(10) == 350
    assert preset("info").max_bounces == (1, 2, 3, 4, 5, 6)
    with pytest.raises(ValueError):
        preset("huge")


def test_truncate_dataset_matches_histogram_truncate(generated):
    _, out = generated
    f = DatasetFile.load(out / "train_k2.etd")
    t = truncate_dataset(f, 1, SPEED_OF_LIGHT)
    cut = max_tof(1, default_scene().room, SPEED_OF_LIGHT)
    for h_in, h_out in zip(f.histograms().values(), t.histograms().values()):
        assert h_out == truncate(h_in, cut)
    assert t.records["max_bounces"].tolist() == [1, 1, 1]


def test_sweep_single_k(generated, tmp_path):
    plan, out = generated
    plan1 = replace(plan, max_bounces=(2,))
    rep = run_multipath_sweep(plan1, out, tmp_path / "sweep.csv")
    assert [r.k for r in rep.rows] == [2]
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0] == "k,mean_mse,mse_spread,mean_iou" and len(lines) == 2
    assert 0 <= rep.rows[0].mean_iou <= 1


def test_sweep_rows_sorted_and_missing_k(generated, tmp_path):
    plan, out = generated
    rep = run_multipath_sweep(replace(plan, max_bounces=(2, 1)), out)
    assert [r.k for r in rep.rows] == [1, 2]
    with pytest.raises(FileNotFoundError):
        run_multipath_sweep(replace(plan, max_bounces=(1, 3)), out)


def test_info_analysis(generated, tmp_path):
    plan, out = generated
    a = run_info_analysis(plan, out, tmp_path / "a.csv")
    b = run_info_analysis(plan, out, tmp_path / "b.csv")
    assert list(a.ui_bits) == [2]
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    c = run_info_analysis(plan)  # simulated afresh from the same plan
    assert c.h1_bits == a.h1_bits and c.ui_bits == a.ui_bits
    with pytest.raises(ValueError):
        run_info_analysis(replace(plan, max_bounces=(1, 3)))


def test_load_histograms_pools_splits(generated):
    plan, out = generated
    h = load_histograms(out, 2)
    assert sorted(h[1]) == list(range(plan.n_scenes))
