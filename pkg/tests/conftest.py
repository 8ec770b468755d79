"""Shared synthetic fixtures."""

from __future__ import annotations

import numpy as np
import pytest

from voxelzoom.volume import MaskVolume, Volume


def make_volume(dims=(4, 4, 4), seed=0, low=-100.0, high=300.0):
    rng = np.random.default_rng(seed)
    vals = rng.uniform(low, high, size=dims).astype(np.float32)
    return Volume(vals, (1.0, 1.0, 1.0))


def sphere_mask(dims, center, radius):
    zz, yy, xx = np.ogrid[:dims[0], :dims[1], :dims[2]]
    dist2 = ((zz - center[0]) ** 2 + (yy - center[1]) ** 2
             + (xx - center[2]) ** 2)
    return MaskVolume(dist2 <= radius * radius, (1.0, 1.0, 1.0))


def sphere_volume(dims, center, radius, fg=10.0, bg=0.0):
    mask = sphere_mask(dims, center, radius)
    vals = np.full(dims, bg, dtype=np.float32)
    vals[mask.bits] = fg
    return Volume(vals, (1.0, 1.0, 1.0)), mask


def two_blob_volume(dims=(16, 24, 24)):
    """Plateau volume with two cubic blobs and a small decoy region.

    The decoy sits at the lowest foreground intensity so that clipping
    during normalization pulls the background onto the decoy's plateau,
    never onto blob A's.
    """
    vals = np.zeros(dims, dtype=np.float32)
    blob_a = np.zeros(dims, dtype=bool)
    blob_b = np.zeros(dims, dtype=bool)
    blob_a[4:10, 4:10, 4:10] = True
    blob_b[4:10, 14:20, 14:20] = True
    vals[blob_a] = 200.0
    vals[blob_b] = 100.0
    vals[12:14, 2:4, 2:4] = 50.0
    volume = Volume(vals, (1.0, 1.0, 1.0))
    return volume, MaskVolume(blob_a, volume.spacing), MaskVolume(blob_b, volume.spacing)


@pytest.fixture
def small_volume():
    return make_volume((4, 4, 4), seed=7)


@pytest.fixture
def two_blobs():
    return two_blob_volume()
