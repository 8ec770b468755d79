import numpy as np
import pytest

from voxelzoom.errors import DimMismatch
from voxelzoom.metrics import bce_loss, combined_loss, dice_loss, dice_score
from voxelzoom.volume import LogitsVolume, MaskVolume

from oracles import ref_bce, ref_bce_gradient, ref_dice, ref_dice_loss


def mask_from(bits):
    return MaskVolume(np.asarray(bits, dtype=bool), (1.0, 1.0, 1.0))


def probs_from(vals):
    return LogitsVolume(np.asarray(vals, dtype=np.float32), (1.0, 1.0, 1.0),
                        calibration="probability")


def random_pair(seed, dims=(4, 4, 4)):
    rng = np.random.default_rng(seed)
    y = mask_from(rng.uniform(size=dims) > 0.5)
    p = probs_from(rng.uniform(size=dims))
    return y, p


def test_dice_identical_masks():
    m = mask_from(np.ones((3, 3, 3), dtype=bool))
    assert dice_score(m, m) == 1.0


def test_dice_disjoint_masks():
    a = np.zeros((2, 2, 2), dtype=bool)
    a[0] = True
    b = ~a
    assert dice_score(mask_from(a), mask_from(b)) == 0.0


def test_dice_both_empty():
    e = mask_from(np.zeros((2, 2, 2), dtype=bool))
    assert dice_score(e, e) == 1.0


def test_dice_one_empty():
    e = mask_from(np.zeros((2, 2, 2), dtype=bool))
    f = mask_from(np.ones((2, 2, 2), dtype=bool))
    assert dice_score(e, f) == 0.0


def test_dice_matches_reference():
    for seed in range(10):
        rng = np.random.default_rng(seed)
        a = rng.uniform(size=(5, 5, 5)) > 0.4
        b = rng.uniform(size=(5, 5, 5)) > 0.6
        assert dice_score(mask_from(a), mask_from(b)) == pytest.approx(
            ref_dice(a, b))


def test_dice_dim_mismatch():
    with pytest.raises(DimMismatch):
        dice_score(mask_from(np.zeros((2, 2, 2), bool)),
                   mask_from(np.zeros((3, 3, 3), bool)))


def test_bce_matches_reference():
    for seed in range(5):
        y, p = random_pair(seed)
        assert bce_loss(p, y) == pytest.approx(ref_bce(y.bits, p.scores),
                                               rel=1e-6)


def test_bce_clamps_extremes():
    y = mask_from(np.ones((2, 2, 2), dtype=bool))
    p = probs_from(np.zeros((2, 2, 2), dtype=np.float32))
    val = bce_loss(p, y)
    assert np.isfinite(val)
    assert val == pytest.approx(-np.log(1e-7), rel=1e-6)


def test_bce_squashes_logit_input():
    y = mask_from(np.ones((2, 2, 2), dtype=bool))
    logits = LogitsVolume(np.zeros((2, 2, 2), dtype=np.float32),
                          (1.0, 1.0, 1.0), calibration="logit")
    assert bce_loss(logits, y) == pytest.approx(-np.log(0.5), rel=1e-6)


def test_bce_finite_difference_gradient():
    rng = np.random.default_rng(1)
    y_bits = rng.uniform(size=(3, 3, 3)) > 0.5
    p = rng.uniform(0.2, 0.8, size=(3, 3, 3))
    y = mask_from(y_bits)
    grad = ref_bce_gradient(y_bits, p)
    delta = 1e-4
    for idx in [(0, 0, 0), (1, 1, 1), (2, 2, 0)]:
        hi = p.copy()
        lo = p.copy()
        hi[idx] += delta
        lo[idx] -= delta
        numeric = (bce_loss(probs_from(hi), y) - bce_loss(probs_from(lo), y)) / (2 * delta)
        assert numeric == pytest.approx(grad[idx], rel=1e-2)


def test_dice_loss_matches_reference():
    for seed in range(5):
        y, p = random_pair(seed)
        assert dice_loss(p, y) == pytest.approx(
            ref_dice_loss(y.bits, p.scores), abs=1e-9)


def test_dice_loss_complements_score_on_binary():
    for seed in range(20):
        rng = np.random.default_rng(seed)
        y = rng.uniform(size=(4, 4, 4)) > 0.5
        q = rng.uniform(size=(4, 4, 4)) > 0.5
        loss = dice_loss(probs_from(q.astype(np.float32)), mask_from(y))
        score = dice_score(mask_from(y), mask_from(q))
        assert loss == pytest.approx(1.0 - score, abs=1e-6)


def test_dice_loss_empty_pair_is_zero():
    y = mask_from(np.zeros((2, 2, 2), dtype=bool))
    p = probs_from(np.zeros((2, 2, 2), dtype=np.float32))
    assert dice_loss(p, y) == pytest.approx(0.0, abs=1e-12)


def test_bce_constant_half():
    for seed in (0, 1):
        y, _ = random_pair(seed)
        p = probs_from(np.full((4, 4, 4), 0.5, dtype=np.float32))
        assert bce_loss(p, y) == pytest.approx(np.log(2.0), rel=1e-6)


def test_bce_flipped_prediction():
    y = mask_from(np.ones((2, 2, 2), dtype=bool))
    p = probs_from(np.zeros((2, 2, 2), dtype=np.float32))
    assert bce_loss(p, y) == pytest.approx(16.118, abs=1e-3)


def test_dice_loss_half_prediction_on_full_mask():
    y = mask_from(np.ones((3, 3, 3), dtype=bool))
    p = probs_from(np.full((3, 3, 3), 0.5, dtype=np.float32))
    assert dice_loss(p, y) == pytest.approx(1.0 / 3.0, abs=1e-6)


def test_combined_is_exact_sum():
    for seed in range(5):
        y, p = random_pair(seed)
        assert combined_loss(p, y) == bce_loss(p, y) + dice_loss(p, y)


def test_combined_closed_form():
    y = mask_from(np.ones((3, 3, 3), dtype=bool))
    p = probs_from(np.full((3, 3, 3), 0.5, dtype=np.float32))
    assert combined_loss(p, y) == pytest.approx(1.0265, abs=1e-3)
