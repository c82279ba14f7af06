import numpy as np
import pytest

from echoimaging.io import read_csv, read_pgm, write_csv, write_pgm
from echoimaging.scene import default_scene
from echoimaging.tracer import render_depth


def test_pgm_round_trip(tmp_path):
    img = render_depth(default_scene())
    img.to_pgm(tmp_path / "d.pgm")
    back = read_pgm(tmp_path / "d.pgm")
    assert back.shape == (64, 64)
    assert np.max(np.abs(back - img.depth)) <= 1e-4 + 1e-12


def test_pgm_header_and_payload(tmp_path):
    depth = np.array([[0.0, 1.0], [2.0, 13.1]])
    write_pgm(tmp_path / "a.pgm", depth, meters_per_level=0.001)
    raw = (tmp_path / "a.pgm").read_bytes()
    assert raw.startswith(b"P5\n# meters_per_level 0.001\n2 2\n65535\n")
    levels = np.frombuffer(raw[-8:], ">u2")
    assert levels.tolist() == [0, 1000, 2000, 13100]
    assert np.allclose(read_pgm(tmp_path / "a.pgm", meters_per_level=1.0), [[0, 1000], [2000, 13100]])


def test_pgm_rejects_bad_input(tmp_path):
    with pytest.raises(ValueError):
        write_pgm(tmp_path / "x.pgm", np.zeros(3))
    with pytest.raises(ValueError):
        write_pgm(tmp_path / "x.pgm", np.full((2, 2), np.nan))
    (tmp_path / "bad.pgm").write_bytes(b"P2\n1 1\n255\n0")
    with pytest.raises(ValueError):
        read_pgm(tmp_path / "bad.pgm")


def test_csv_helpers(tmp_path):
    write_csv(tmp_path / "t.csv", ["a", "b"], [(1, 0.1), (2, 1 / 3)])
    header, rows = read_csv(tmp_path / "t.csv")
    assert header == ["a", "b"] and float(rows[1][1]) == 1 / 3


def test_depth_csv(tmp_path):
    img = render_depth(default_scene(), height=8, width=8)
    img.to_csv(tmp_path / "d.csv")
    assert np.allclose(np.loadtxt(tmp_path / "d.csv", delimiter=","), img.depth, atol=1e-6)
