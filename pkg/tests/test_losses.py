import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from glarefuse.geometry import Box
from glarefuse.losses import INSIDE_WEIGHT, OUTSIDE_WEIGHT, masked_mse_loss, penalty_matrix, smooth_l1

finite = st.floats(-1e3, 1e3, allow_nan=False)
betas = st.floats(0.01, 10.0)


def test_penalty_weights():
    assert INSIDE_WEIGHT == 100.0
    assert OUTSIDE_WEIGHT == pytest.approx(1.010101, abs=1e-6)
    assert np.all(penalty_matrix(5, 3) == OUTSIDE_WEIGHT)
    assert np.all(penalty_matrix(5, 3, [Box(0, 0, 5, 3)]) == INSIDE_WEIGHT)
    p = penalty_matrix(4, 4, [Box(0, 0, 2, 2)])
    assert p.shape == (4, 4)
    assert (p == INSIDE_WEIGHT).sum() == 4 and (p == OUTSIDE_WEIGHT).sum() == 12
    assert (p[:2, :2] == INSIDE_WEIGHT).all()


def test_masked_mse_examples():
    x = np.random.default_rng(0).random((4, 5))
    p = penalty_matrix(5, 4, [Box(1, 1, 2, 2)])
    assert masked_mse_loss(x, x, p) == 0.0
    target = np.zeros((4, 5))
    pred = target.copy()
    pred[1, 1] = 0.1
    assert masked_mse_loss(pred, target, p) == pytest.approx(1.0)
    assert masked_mse_loss(pred, target, 2 * p) == pytest.approx(2.0)


def test_masked_mse_broadcasts_over_channels():
    pred, target = np.ones((3, 4, 5)), np.zeros((3, 4, 5))
    assert masked_mse_loss(pred, target, np.ones((4, 5))) == 60.0
    with pytest.raises(ValueError):
        masked_mse_loss(pred, target, np.ones((5, 4)))
    with pytest.raises(ValueError):
        masked_mse_loss(pred, target[0], np.ones((4, 5)))


@given(arrays(np.float64, (3, 4), elements=finite), arrays(np.float64, (3, 4), elements=finite))
def test_masked_mse_with_unit_penalty_is_sse(pred, target):
    sse = float(((pred - target) ** 2).sum())
    assert masked_mse_loss(pred, target, np.ones((3, 4))) == pytest.approx(sse, rel=1e-12, abs=1e-12)
    assert masked_mse_loss(pred, target, penalty_matrix(4, 3)) >= 0.0


@given(arrays(np.float64, (2, 3), elements=finite))
def test_masked_mse_zero_iff_equal(pred):
    p = penalty_matrix(3, 2)
    assert masked_mse_loss(pred, pred, p) == 0.0
    other = pred.copy()
    other[0, 0] += 1.0
    assert masked_mse_loss(pred, other, p) > 0.0


def test_smooth_l1_examples():
    assert smooth_l1(0.0) == 0.0
    assert smooth_l1(2.0, 1.0) == 1.5
    assert smooth_l1(0.5, 1.0) == 0.125
    assert smooth_l1(3.0, 3.0) == 1.5
    assert np.allclose(smooth_l1(np.array([-2.0, 0.0, 0.5])), [1.5, 0.0, 0.125])
    with pytest.raises(ValueError):
        smooth_l1(1.0, 0.0)


@given(betas)
def test_smooth_l1_continuous_at_beta(beta):
    # the largest float below beta takes the quadratic branch, beta itself the linear one
    assert abs(smooth_l1(np.nextafter(beta, 0), beta) - smooth_l1(beta, beta)) <= 1e-12
    assert abs(smooth_l1(-beta, beta) - 0.5 * beta) <= 1e-12


@given(finite, betas)
def test_smooth_l1_even(x, beta):
    assert smooth_l1(x, beta) == smooth_l1(-x, beta)


@given(st.floats(-20, 20), betas)
def test_smooth_l1_derivative(x, beta):
    h = 1e-6
    if abs(abs(x) - beta) < 2 * h:
        return  # the kink itself; one-sided slopes agree there anyway
    fd = (smooth_l1(x + h, beta) - smooth_l1(x - h, beta)) / (2 * h)
    exact = x / beta if abs(x) < beta else np.sign(x)
    assert abs(fd - exact) <= 1e-4
