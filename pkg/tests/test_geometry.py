import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import boxes
from glarefuse.geometry import Box, area, enclosing, intersection, iou


def test_iou_examples():
    a = Box(0, 0, 10, 10)
    assert iou(a, Box(0, 0, 10, 10)) == 1.0
    assert iou(a, Box(20, 20, 30, 30)) == 0.0
    assert iou(a, Box(5, 0, 15, 10)) == pytest.approx(50 / 150, abs=1e-15)


@pytest.mark.parametrize("coords, expected", [
    ((0, 0, 1, 1), 1.0), ((0, 0, 10, 10), 100.0), ((2, 3, 7, 5), 10.0),
])
def test_area(coords, expected):
    assert area(Box.from_coords(coords)) == expected


@pytest.mark.parametrize("coords", [(0, 0, 0, 5), (3, 0, 1, 5), (0, 4, 5, 4)])
def test_degenerate_boxes_rejected(coords):
    with pytest.raises(ValueError):
        Box.from_coords(coords)


def test_invalid_score_and_label():
    with pytest.raises(ValueError):
        Box(0, 0, 1, 1, score=1.5)
    with pytest.raises(ValueError):
        Box(0, 0, 1, 1, label=-1)


def test_edge_touching_boxes_do_not_overlap():
    assert iou(Box(0, 0, 10, 10), Box(10, 0, 20, 10)) == 0.0


def test_enclosing():
    assert enclosing([Box(1, 5, 3, 6), Box(0, 7, 2, 9)]) == (0, 5, 3, 9)
    with pytest.raises(ValueError):
        enclosing([])


@given(boxes(), boxes())
def test_iou_symmetric_and_bounded(a, b):
    assert iou(a, b) == iou(b, a)
    assert 0.0 <= iou(a, b) <= 1.0


@given(boxes())
def test_self_iou_is_one(a):
    assert iou(a, a) == 1.0


@given(boxes(), boxes(), st.floats(-50, 50), st.floats(-50, 50))
def test_iou_translation_invariant(a, b, dx, dy):
    assert abs(iou(a, b) - iou(a.shifted(dx, dy), b.shifted(dx, dy))) <= 1e-12


@given(boxes(), boxes())
def test_positive_iou_iff_interiors_meet(a, b):
    meets = a.x_min < b.x_max and b.x_min < a.x_max and a.y_min < b.y_max and b.y_min < a.y_max
    assert (iou(a, b) > 0) == meets
    assert intersection(a, b) <= min(area(a), area(b)) + 1e-9
