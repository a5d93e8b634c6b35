"""Malformed inputs raise, with messages that name the offending argument."""
import numpy as np
import pytest

import topocp_bindings as tb


def good_pair(shape=(5, 5)):
    rng = np.random.default_rng(3)
    return rng.random(shape), (rng.random(shape) > 0.5).astype(np.uint8)


def test_shape_mismatch_names_target():
    pred, _ = good_pair((5, 5))
    with pytest.raises(ValueError, match="target.*pred"):
        tb.py_topo_loss(pred, np.ones((4, 4), dtype=np.uint8))


def test_pred_out_of_range():
    _, target = good_pair()
    with pytest.raises(ValueError, match="pred"):
        tb.py_topo_loss(np.full((5, 5), 1.5), target)


def test_target_not_binary():
    pred, _ = good_pair()
    with pytest.raises(ValueError, match="target"):
        tb.py_topo_loss(pred, np.full((5, 5), 2, dtype=np.uint8))


def test_bad_dtype_names_argument():
    _, target = good_pair()
    with pytest.raises(TypeError, match="pred"):
        tb.py_topo_loss(np.ones((5, 5), dtype=np.int32), target)


def test_bad_rank():
    with pytest.raises(ValueError, match="pred"):
        tb.py_topo_loss(np.ones(5), np.ones(5, dtype=np.uint8))


@pytest.mark.parametrize("lam", [-0.1, 1.5])
def test_lambda_range(lam):
    pred, target = good_pair()
    with pytest.raises(ValueError, match="lam"):
        tb.py_topo_loss(pred, target, lam=lam)


def test_mp_range():
    pred, target = good_pair()
    with pytest.raises(ValueError, match="mp"):
        tb.py_topo_loss(pred, target, mp=1.0)


def test_omega_wrong_length():
    pred, target = good_pair()
    with pytest.raises(ValueError, match="omega"):
        tb.py_topo_loss(pred, target, omega=(1.0, 1.0, 1.0))


def test_metrics_empty_gt_raises():
    pred = np.ones((4, 4), dtype=np.uint8)
    with pytest.raises(ValueError, match="gt"):
        tb.py_metrics(pred, np.zeros((4, 4), dtype=np.uint8))


def test_metrics_fractional_pred_rejected():
    gt = np.ones((4, 4), dtype=np.uint8)
    with pytest.raises(ValueError, match="pred"):
        tb.py_metrics(np.full((4, 4), 0.5), gt)


def test_metrics_bad_spacing():
    m = np.ones((4, 4), dtype=np.uint8)
    with pytest.raises(ValueError, match="spacing"):
        tb.py_metrics(m, m, spacing=(1.0, 0.0))
    with pytest.raises(ValueError, match="spacing"):
        tb.py_metrics(m, m, spacing=(1.0, 1.0, 1.0))


def test_noncontiguous_views_accepted():
    rng = np.random.default_rng(4)
    big = rng.random((10, 10))
    pred = big[::2, ::2]  # strided view, not C-contiguous
    target = (big[::2, ::2] > 0.5).astype(np.uint8)
    value, grad = tb.py_topo_loss(pred, target)
    assert np.isfinite(value) and grad.shape == (5, 5)
