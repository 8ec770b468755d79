import numpy as np
import pytest
from sklearn.base import clone

from voxelzoom.fh import (
    Felzenszwalb3D,
    FhParams,
    components_to_masks,
    fh_segment,
)
from voxelzoom.volume import Volume

from conftest import make_volume
from oracles import labels_to_partition, ref_fh_partition


def vol_from(values):
    return Volume(np.asarray(values, dtype=np.float32), (1.0, 1.0, 1.0))


def test_params_validation():
    with pytest.raises(ValueError):
        FhParams(k=-1.0)
    with pytest.raises(ValueError):
        FhParams(connectivity=8)
    with pytest.raises(ValueError):
        FhParams(sigma=-0.1)
    with pytest.raises(ValueError):
        FhParams(min_size=-2)


def test_single_plateau_is_one_component():
    v = vol_from(np.full((3, 3, 3), 2.0))
    lab = fh_segment(v, FhParams(k=1.0, sigma=0.0))
    assert lab.num_components == 1
    assert lab.sizes == {0: 27}


def test_two_plateaus_with_small_k_stay_apart():
    vals = np.zeros((2, 2, 4), dtype=np.float32)
    vals[:, :, 2:] = 100.0
    lab = fh_segment(vol_from(vals), FhParams(k=1.0, sigma=0.0))
    assert lab.num_components == 2
    grid = lab.grid
    assert len(set(grid[:, :, :2].ravel())) == 1
    assert len(set(grid[:, :, 2:].ravel())) == 1


def test_large_k_merges_everything():
    v = make_volume((4, 4, 4), seed=5, low=0.0, high=1.0)
    lab = fh_segment(v, FhParams(k=1e9, sigma=0.0))
    assert lab.num_components == 1


def test_labels_dense_and_ordered_by_first_appearance():
    vals = np.zeros((1, 1, 6), dtype=np.float32)
    vals[0, 0, 2:4] = 50.0
    vals[0, 0, 4:] = 100.0
    lab = fh_segment(vol_from(vals), FhParams(k=1.0, sigma=0.0))
    assert lab.grid[0, 0, :].tolist() == [0, 0, 1, 1, 2, 2]


def test_matches_reference_partition_random():
    for seed in range(20):
        v = make_volume((4, 4, 4), seed=seed, low=0.0, high=10.0)
        for k in (0.5, 5.0, 50.0):
            lab = fh_segment(v, FhParams(k=k, sigma=0.0))
            got = labels_to_partition(lab.labels, v.dims)
            want = ref_fh_partition(v.voxels, k=k)
            assert got == want, f"seed {seed} k {k}"


def test_matches_reference_with_smoothing_and_26():
    for seed in (0, 1, 2):
        v = make_volume((4, 4, 4), seed=seed, low=0.0, high=10.0)
        lab = fh_segment(v, FhParams(k=2.0, sigma=0.8, connectivity=26))
        got = labels_to_partition(lab.labels, v.dims)
        want = ref_fh_partition(v.voxels, k=2.0, sigma=0.8, connectivity=26)
        assert got == want


def test_matches_reference_with_min_size():
    for seed in (3, 4):
        v = make_volume((4, 4, 4), seed=seed, low=0.0, high=10.0)
        lab = fh_segment(v, FhParams(k=1.0, sigma=0.0, min_size=5))
        got = labels_to_partition(lab.labels, v.dims)
        want = ref_fh_partition(v.voxels, k=1.0, min_size=5)
        assert got == want
        assert all(s >= 5 for s in lab.sizes.values()) or lab.num_components == 1


def test_intensity_shift_invariance():
    v = make_volume((4, 4, 4), seed=13, low=0.0, high=10.0)
    shifted = Volume(v.voxels + 100.0, v.spacing)
    a = fh_segment(v, FhParams(k=3.0, sigma=0.0))
    b = fh_segment(shifted, FhParams(k=3.0, sigma=0.0))
    assert np.array_equal(a.labels, b.labels)


def test_k_monotonicity():
    for seed in (0, 7):
        v = make_volume((4, 4, 4), seed=seed, low=0.0, high=10.0)
        counts = [fh_segment(v, FhParams(k=k, sigma=0.0)).num_components
                  for k in (0.1, 1.0, 10.0, 100.0)]
        assert counts == sorted(counts, reverse=True)


def test_min_size_enforced():
    vals = np.zeros((1, 1, 5), dtype=np.float32)
    vals[0, 0, 2] = 100.0
    lab = fh_segment(vol_from(vals), FhParams(k=1.0, sigma=0.0, min_size=2))
    assert all(s >= 2 for s in lab.sizes.values())


def test_components_to_masks_partition():
    v = make_volume((4, 4, 4), seed=2, low=0.0, high=10.0)
    lab = fh_segment(v, FhParams(k=5.0, sigma=0.0))
    masks = components_to_masks(lab)
    assert len(masks) == lab.num_components
    total = np.zeros(v.dims, dtype=int)
    for m in masks:
        total += m.bits.astype(int)
    assert np.all(total == 1)
    for cid, m in enumerate(masks):
        assert m.num_foreground == lab.sizes[cid]


def test_sizes_account_for_all_voxels():
    v = make_volume((3, 4, 5), seed=8)
    lab = fh_segment(v, FhParams(k=10.0, sigma=0.0))
    assert sum(lab.sizes.values()) == 60


def test_estimator_facade():
    est = Felzenszwalb3D(k=1.0, sigma=0.0)
    v = make_volume((4, 4, 4), seed=6, low=0.0, high=10.0)
    est.fit(v)
    direct = fh_segment(v, FhParams(k=1.0, sigma=0.0))
    assert np.array_equal(est.labels_, direct.labels)
    assert est.num_components_ == direct.num_components
    cloned = clone(est)
    assert cloned.get_params() == est.get_params()
