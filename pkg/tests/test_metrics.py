import numpy as np
import pytest

from echoimaging.metrics import binarize, foreground_iou, iou, mse
from echoimaging.scene import default_scene
from echoimaging.tracer import render_depth


def test_mse_examples(rng):
    g = rng.random((8, 8))
    assert mse(g, g) == 0.0
    assert mse(np.array([[0.0], [0.0]]), np.array([[1.0], [0.0]])) == 0.5
    a, b = rng.random((5, 5)), rng.random((5, 5))
    assert mse(3 * a, 3 * b) == pytest.approx(9 * mse(a, b))
    assert mse(a, b) == mse(b, a)
    with pytest.raises(ValueError):
        mse(a, np.zeros((4, 5)))


def test_binarize_examples():
    mask = np.full((4, 4), 5.0)
    assert not binarize(mask, mask).any()
    img = mask.copy()
    img[1, 2] -= 1.0
    fg = binarize(img, mask, 0.5)
    assert fg.sum() == 1 and fg[1, 2]
    assert not binarize(mask + 1.0, mask).any()


def test_binarize_shift_invariant(rng):
    mask = rng.uniform(4, 6, (10, 10))
    img = mask - rng.uniform(0, 2, (10, 10))
    assert np.array_equal(binarize(img, mask), binarize(img + 3.7, mask + 3.7))


def test_binarized_render_is_object_silhouette():
    sc = default_scene()
    truth = render_depth(sc)
    empty = render_depth(sc.empty())
    fg = binarize(truth, empty, 0.5)
    occluded = truth.depth < empty.depth
    # every foreground pixel is occluded by the object
    assert fg.any() and np.all(occluded[fg])
    drop = empty.depth - truth.depth
    assert np.array_equal(fg, drop >= 0.5 * drop.max())


def test_iou_examples():
    a = np.zeros((4, 4), bool)
    a[0, :2] = True
    b = a.copy()
    b[1, :2] = True
    assert iou(a, a) == 1.0
    assert iou(a, ~a) == 0.0
    assert iou(a, b) == 0.5
    assert iou(np.zeros((3, 3), bool), np.zeros((3, 3), bool)) == 1.0


def test_iou_symmetric_and_permutation_invariant(rng):
    a = rng.random((9, 9)) > 0.5
    b = rng.random((9, 9)) > 0.4
    assert iou(a, b) == iou(b, a)
    p = rng.permutation(81)
    assert iou(a.ravel()[p], b.ravel()[p]) == iou(a, b)


def test_foreground_iou_of_truth_is_one():
    sc = default_scene()
    truth = render_depth(sc)
    assert foreground_iou(truth, truth, render_depth(sc.empty())) == 1.0
