import math

import numpy as np
import pytest

from echoimaging.histogram import (
    EchoHistogram, LabelSession, max_tof, occupancy, quantize, truncate,
)
from echoimaging.scene import SPEED_OF_LIGHT, Detector, Emitter, Room, SceneConfig, default_scene
from echoimaging.tracer import image_source_arrival_times, trace_rays

C = SPEED_OF_LIGHT


def hist(counts, bw=1.0):
    counts = np.asarray(counts)
    return EchoHistogram(counts, bw, bw * counts.size)


def test_invariants():
    with pytest.raises(ValueError):
        EchoHistogram(np.array([1, -1]), 1.0, 2.0)
    with pytest.raises(ValueError):
        EchoHistogram(np.array([1, 2]), 1.0, 3.0)
    with pytest.raises(ValueError):
        EchoHistogram(np.array([]), 1.0, 0.0)


def test_from_arrival_times():
    h = EchoHistogram.from_arrival_times([0.5e-9, 1.5e-9, 1.6e-9, 99.99e-9, 150e-9], bins=100, window_s=100e-9)
    assert h.counts[0] == 1 and h.counts[1] == 2 and h.counts[99] == 1
    assert h.total == 4
    assert h.bin_centers[0] == pytest.approx(0.5e-9)


def test_csv_round_trip(tmp_path):
    h = EchoHistogram.from_arrival_times(np.linspace(1e-9, 90e-9, 40), 256, 100e-9)
    h.to_csv(tmp_path / "h.csv")
    assert EchoHistogram.from_csv(tmp_path / "h.csv") == h


def test_max_tof_cube():
    room = Room(3.0, 3.0, 3.0)
    assert max_tof(1, room, C) == pytest.approx(2 * math.sqrt(27) / C)
    assert all(max_tof(k + 1, room, C) > max_tof(k, room, C) for k in range(1, 10))
    with pytest.raises(ValueError):
        max_tof(0, room, C)


def test_max_tof_bounds_every_image_source_time():
    rng = np.random.default_rng(0)
    for _ in range(20):
        room = Room(*rng.uniform(1, 8, size=3))
        e = rng.uniform(0.05, 0.95, size=3) * room.size
        d = rng.uniform(0.05, 0.95, size=3) * room.size
        _, details = image_source_arrival_times(room, e, d, 5, c=C, return_details=True)
        for t, order, _ in details:
            assert t <= max_tof(order, room, C) * (1 + 1e-12)


def test_truncate_examples():
    h = hist([3, 1, 4, 1, 5])
    assert truncate(h, h.window_s) == h
    first = truncate(h, h.bin_width_s / 2)
    assert first.counts.tolist() == [3, 0, 0, 0, 0]
    with pytest.raises(ValueError):
        truncate(h, 0.0)


def test_truncate_idempotent_and_non_increasing(rng):
    for _ in range(50):
        h = hist(rng.integers(0, 5, size=32), bw=1e-9)
        t = rng.uniform(1e-10, h.window_s)
        once = truncate(h, t)
        assert truncate(once, t) == once
        assert once.total <= h.total


def test_quantize_commutes_with_truncate(rng):
    for _ in range(50):
        h = hist(rng.integers(0, 3, size=32), bw=1e-9)
        t = rng.uniform(1e-10, h.window_s)
        occ = occupancy(h).copy()
        occ[h.bin_centers > t] = False
        assert np.array_equal(quantize(truncate(h, t)).occupancy, occ)


def test_truncate_at_max_tof_keeps_all_single_bounce_mass():
    sc = SceneConfig(object=None, seed=3)
    res = trace_rays(sc, 20_000, 10, 100e-9)
    full = res.histogram(256, 100e-9)
    one = res.histogram(256, 100e-9, max_bounces=1)
    cut = truncate(full, max_tof(1, sc.room, C))
    t1, _ = res.arrivals(1)
    assert len(t1) > 0 and np.all(t1 <= max_tof(1, sc.room, C))
    # every 1-bounce count survives the cut; short 2-bounce paths may survive too
    assert np.all(one.counts <= cut.counts)
    assert one.total > 0


def test_quantize_count_blind():
    s = LabelSession()
    a = s.quantize(hist([3, 0, 1]))
    b = s.quantize(hist([7, 0, 2]))
    c = s.quantize(hist([0, 0, 1]))
    assert a.label_id == b.label_id == 0 and c.label_id == 1
    assert np.array_equal(a.occupancy, [True, False, True])
    assert len(s) == 2


def test_quantize_zero_histogram():
    lab = quantize(hist([0, 0, 0, 0]))
    assert not lab.occupancy.any() and lab.label_id == 0


def test_label_ids_match_occupancy_equality(rng):
    hs = [hist(rng.integers(0, 2, size=6)) for _ in range(200)]
    labels = LabelSession().labels(hs)
    for i in range(0, 200, 7):
        for j in range(0, 200, 11):
            same = np.array_equal(occupancy(hs[i]), occupancy(hs[j]))
            assert (labels[i] == labels[j]) == same


def test_simulated_single_path_labels_pigeonhole():
    base = default_scene()
    session = LabelSession()
    hs = []
    rng = np.random.default_rng(4)
    from echoimaging.scene import CuboidObject

    for i in range(200):
        obj = CuboidObject(rng.uniform(0.5, 3.5), rng.uniform(1.6, 6.5))
        hs.append(trace_rays(SceneConfig(object=obj, seed=i), 2000, 1, 100e-9).histogram(256, 100e-9))
    labels = session.labels(hs)
    assert len(set(labels.tolist())) == len(session) <= 200
