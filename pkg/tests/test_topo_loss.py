import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from topomorse.field_io import BinaryMask, ScalarField, binarize
from topomorse.topo_loss import (
    LossConfig,
    bce,
    dmt_loss,
    loss_gradient,
    morse_mask,
    total_loss,
)


def test_config_validation():
    with pytest.raises(ValueError):
        LossConfig(eps=-0.1)
    with pytest.raises(ValueError):
        LossConfig(beta=-1)
    with pytest.raises(ValueError):
        LossConfig(clamp=0.0)
    with pytest.raises(ValueError):
        LossConfig(clamp=0.6)
    cfg = LossConfig()
    assert (cfg.eps, cfg.beta, cfg.clamp) == (0.2, 3.0, 1e-7)
    assert cfg.include_s1 and cfg.include_s2


def test_bce_on_exact_prediction_hits_clamp_floor():
    g = ScalarField(np.array([[0.0, 1.0], [1.0, 0.0]]))
    # perfect prediction: every pixel clamps, loss = -log(1 - 1e-7)
    assert bce(g, g) == pytest.approx(-math.log1p(-1e-7), rel=1e-12)


def test_bce_frozen_value():
    f = ScalarField(np.array([[0.25, 0.75]]))
    g = ScalarField(np.array([[0.0, 1.0]]))
    assert bce(f, g) == pytest.approx(-math.log(0.75), rel=1e-12)


def test_bce_rejects_non_binary_gt():
    f = ScalarField(np.full((2, 2), 0.5))
    with pytest.raises(ValueError, match="0/1"):
        bce(f, ScalarField(np.full((2, 2), 0.5)))
    with pytest.raises(ValueError):
        bce(f, ScalarField(np.full((3, 3), 1.0)))  # also a shape mismatch


def test_dmt_loss_zero_mask_and_full_mask():
    rng = np.random.default_rng(0)
    f = ScalarField(rng.uniform(0.1, 0.9, (5, 6)))
    g = binarize(f, 0.5)
    gt = ScalarField(g.bits.astype(float))
    empty = BinaryMask(np.zeros((5, 6), dtype=bool))
    full = BinaryMask(np.ones((5, 6), dtype=bool))
    assert dmt_loss(f, gt, empty) == 0.0
    assert dmt_loss(f, gt, full) == pytest.approx(bce(f, gt), rel=1e-12)


def test_dmt_loss_normalised_by_total_pixels():
    f = ScalarField(np.array([[0.25, 0.75], [0.5, 0.5]]))
    gt = ScalarField(np.array([[0.0, 1.0], [1.0, 0.0]]))
    mask = BinaryMask(np.array([[True, False], [False, False]]))
    expect = -math.log(0.75) / 4.0
    assert dmt_loss(f, gt, mask) == pytest.approx(expect, rel=1e-12)


def test_total_loss_identity_and_beta_zero():
    rng = np.random.default_rng(5)
    f = ScalarField(rng.uniform(0.05, 0.95, (12, 12)))
    gt = ScalarField((rng.random((12, 12)) > 0.5).astype(float))
    cfg = LossConfig(beta=2.5)
    report = total_loss(f, gt, cfg)
    assert report.total == pytest.approx(report.l_bce + 2.5 * report.l_dmt, rel=1e-12)
    assert report.beta == 2.5
    mask = morse_mask(f, cfg)
    assert report.mask_density == pytest.approx(mask.density)
    assert report.l_dmt == pytest.approx(dmt_loss(f, gt, mask, cfg.clamp), rel=1e-12)
    zero = total_loss(f, gt, LossConfig(beta=0.0))
    assert zero.total == pytest.approx(zero.l_bce, rel=1e-12)


def test_mask_flags_partition_the_union():
    rng = np.random.default_rng(9)
    f = ScalarField(rng.random((16, 16)))
    both = morse_mask(f, LossConfig())
    s1 = morse_mask(f, LossConfig(include_s2=False))
    s2 = morse_mask(f, LossConfig(include_s1=False))
    neither = morse_mask(f, LossConfig(include_s1=False, include_s2=False))
    assert np.array_equal(both.bits, s1.bits | s2.bits)
    assert not neither.bits.any()


def test_mask_invariant_under_value_shift():
    # shifting all values preserves every filtration comparison, so the
    # structural mask cannot move
    rng = np.random.default_rng(13)
    vals = rng.random((10, 10))
    a = morse_mask(ScalarField(vals), LossConfig())
    b = morse_mask(ScalarField(vals + 0.173), LossConfig())
    assert np.array_equal(a.bits, b.bits)


def test_mask_invariant_under_tiny_tie_free_perturbation():
    # noise small enough to preserve every comparison the pipeline makes:
    # value order, persistence order, and each persistence-vs-eps test
    from topomorse.persistence import zero_dim_pairs

    rng = np.random.default_rng(21)
    vals = rng.random((10, 10))
    eps = 0.2
    pers = np.array(
        [
            p.persistence
            for pol in ("superlevel", "sublevel")
            for p in zero_dim_pairs(ScalarField(vals), pol)
            if not p.essential
        ]
    )
    margins = np.concatenate(
        [np.diff(np.sort(vals.ravel())), np.diff(np.sort(pers)), np.abs(pers - eps)]
    )
    delta = margins[margins > 0].min() / 5.0
    noise = rng.uniform(-delta, delta, vals.shape)
    a = morse_mask(ScalarField(vals), LossConfig(eps=eps))
    b = morse_mask(ScalarField(vals + noise), LossConfig(eps=eps))
    assert np.array_equal(a.bits, b.bits)


def _finite_difference(f_vals, gt, mask, cfg, h=1e-5):
    grad = np.zeros_like(f_vals)
    it = np.nditer(f_vals, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        hi = f_vals.copy()
        hi[idx] += h
        lo = f_vals.copy()
        lo[idx] -= h
        up = bce(ScalarField(hi), gt, cfg.clamp) + cfg.beta * dmt_loss(
            ScalarField(hi), gt, mask, cfg.clamp
        )
        dn = bce(ScalarField(lo), gt, cfg.clamp) + cfg.beta * dmt_loss(
            ScalarField(lo), gt, mask, cfg.clamp
        )
        grad[idx] = (up - dn) / (2 * h)
        it.iternext()
    return grad


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(2)
    f_vals = rng.uniform(0.05, 0.95, (8, 8))
    f = ScalarField(f_vals)
    gt = ScalarField((rng.random((8, 8)) > 0.4).astype(float))
    cfg = LossConfig(beta=3.0)
    mask = morse_mask(f, cfg)
    grad = loss_gradient(f, gt, mask, cfg).values
    fd = _finite_difference(f_vals, gt, mask, cfg)
    scale = max(np.abs(grad).max(), 1e-12)
    assert np.abs(grad - fd).max() / scale < 1e-4


def test_gradient_zero_where_clamped():
    cfg = LossConfig(beta=1.0, clamp=1e-3)
    f = ScalarField(np.array([[1e-5, 0.5], [0.9999, 0.25]]))
    gt = ScalarField(np.array([[0.0, 1.0], [1.0, 0.0]]))
    mask = BinaryMask(np.ones((2, 2), dtype=bool))
    grad = loss_gradient(f, gt, mask, cfg).values
    assert grad[0, 0] == 0.0
    assert grad[1, 0] == 0.0
    assert grad[0, 1] != 0.0 and grad[1, 1] != 0.0


def test_gradient_sign_pushes_towards_gt():
    f = ScalarField(np.array([[0.3, 0.7]]))
    gt = ScalarField(np.array([[1.0, 0.0]]))
    grad = loss_gradient(f, gt, BinaryMask(np.zeros((1, 2), bool))).values
    assert grad[0, 0] < 0  # raise f where gt is 1
    assert grad[0, 1] > 0


@settings(max_examples=25, deadline=None)
@given(
    hnp.arrays(np.float64, (4, 5), elements=st.floats(0.01, 0.99)),
    hnp.arrays(np.bool_, (4, 5)),
    hnp.arrays(np.bool_, (4, 5)),
)
def test_masked_loss_between_zero_and_full(f_vals, gt_bits, mask_bits):
    f = ScalarField(f_vals)
    gt = ScalarField(gt_bits.astype(float))
    masked = dmt_loss(f, gt, BinaryMask(mask_bits))
    assert 0.0 <= masked <= bce(f, gt) + 1e-12
