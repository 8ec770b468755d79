import numpy as np

from voxelzoom.fh import (
    denoise_filter_small,
    denoise_morph_refine,
    denoise_replace_with_gt,
)
from voxelzoom.volume import MaskVolume


def mask_from(bits):
    return MaskVolume(np.asarray(bits, dtype=bool), (1.0, 1.0, 1.0))


def box_mask(dims, lo, hi):
    bits = np.zeros(dims, dtype=bool)
    bits[lo[0]:hi[0], lo[1]:hi[1], lo[2]:hi[2]] = True
    return mask_from(bits)


def test_replace_identical_pseudo_with_gt():
    gt = box_mask((4, 4, 4), (0, 0, 0), (2, 2, 2))
    out = denoise_replace_with_gt([gt], [gt])
    assert len(out) == 1
    assert np.array_equal(out[0].bits, gt.bits)


def test_replace_high_overlap():
    gt = box_mask((6, 6, 6), (1, 1, 1), (5, 5, 5))
    pseudo_bits = gt.bits.copy()
    pseudo_bits[1, 1, 1] = False
    pseudo = mask_from(pseudo_bits)
    out = denoise_replace_with_gt([pseudo], [gt], overlap_threshold=0.5)
    assert np.array_equal(out[0].bits, gt.bits)


def test_replace_requires_strictly_above_threshold():
    # Dice between these two == 0.5 exactly, so no replacement happens
    pseudo = box_mask((4, 4, 4), (0, 0, 0), (1, 1, 2))
    gt = box_mask((4, 4, 4), (0, 0, 1), (1, 1, 3))
    out = denoise_replace_with_gt([pseudo], [gt], overlap_threshold=0.5)
    assert len(out) == 2
    assert np.array_equal(out[0].bits, pseudo.bits)
    assert np.array_equal(out[1].bits, gt.bits)


def test_disjoint_gt_appended():
    pseudo = box_mask((4, 4, 4), (0, 0, 0), (2, 2, 2))
    gt = box_mask((4, 4, 4), (2, 2, 2), (4, 4, 4))
    out = denoise_replace_with_gt([pseudo], [gt])
    assert len(out) == 2
    assert np.array_equal(out[0].bits, pseudo.bits)
    assert np.array_equal(out[1].bits, gt.bits)


def test_each_pseudo_consumed_once():
    # two GT masks both overlap the same pseudo; only the better match takes it
    pseudo = box_mask((4, 4, 8), (0, 0, 0), (2, 2, 4))
    gt_strong = box_mask((4, 4, 8), (0, 0, 0), (2, 2, 5))
    gt_weak = box_mask((4, 4, 8), (0, 0, 2), (2, 2, 6))
    out = denoise_replace_with_gt([pseudo], [gt_strong, gt_weak])
    assert len(out) == 2
    matched = [np.array_equal(m.bits, gt_strong.bits) for m in out]
    assert any(matched)
    assert any(np.array_equal(m.bits, gt_weak.bits) for m in out)


def test_filter_small_boundary_cases():
    dims = (10, 10, 20)  # N = 2000
    one = box_mask(dims, (0, 0, 0), (1, 1, 1))
    two = box_mask(dims, (5, 5, 5), (1 + 5, 1 + 5, 2 + 5))
    big = box_mask(dims, (0, 0, 10), (10, 10, 20))
    kept = denoise_filter_small([one, two, big])
    assert len(kept) == 2
    assert kept[0] is two
    assert kept[1] is big


def test_filter_small_empty_list():
    assert denoise_filter_small([]) == []


def test_filter_never_removes_at_ratio():
    rng = np.random.default_rng(0)
    dims = (10, 10, 10)
    masks = []
    for _ in range(20):
        bits = np.zeros(dims, dtype=bool)
        n = rng.integers(1, 30)
        idx = rng.choice(1000, size=n, replace=False)
        bits.ravel()[idx] = True
        masks.append(mask_from(bits))
    kept = denoise_filter_small(masks)
    for m in masks:
        ratio = m.num_foreground / 1000
        if ratio >= 0.001:
            assert any(k is m for k in kept)
        else:
            assert not any(k is m for k in kept)


def test_morph_refine_fills_small_hole():
    bits = np.zeros((7, 7, 7), dtype=bool)
    bits[1:6, 1:6, 1:6] = True
    bits[3, 3, 3] = False
    closed = denoise_morph_refine(mask_from(bits), radius=1)
    assert closed.bits[3, 3, 3]


def test_morph_refine_solid_cube_unchanged():
    cube = box_mask((8, 8, 8), (2, 2, 2), (6, 6, 6))
    out = denoise_morph_refine(cube, radius=1)
    assert np.array_equal(out.bits, cube.bits)


def test_morph_refine_idempotent():
    rng = np.random.default_rng(7)
    for _ in range(10):
        bits = rng.uniform(size=(6, 6, 6)) > 0.7
        once = denoise_morph_refine(mask_from(bits), radius=1)
        twice = denoise_morph_refine(once, radius=1)
        assert np.array_equal(once.bits, twice.bits)


def test_morph_refine_zero_padded_border():
    # zero padding means erosion sees background beyond the grid, so a
    # border-hugging blob shrinks to the voxels whose full neighborhood
    # fits inside the dilated set
    bits = np.zeros((5, 5, 5), dtype=bool)
    bits[0:2, 0:2, 0:2] = True
    out = denoise_morph_refine(mask_from(bits), radius=1)
    expected = np.zeros((5, 5, 5), dtype=bool)
    expected[1, 1, 1] = True
    assert np.array_equal(out.bits, expected)
