"""Graph-based 3D segmentation over voxel grids and pseudo-mask de-noising.

The segmentation is the classic Felzenszwalb-Huttenlocher predicate on the
voxel adjacency graph: edges carry absolute intensity differences, are
visited in ascending order, and two components merge when the edge weight
does not exceed either component's internal difference plus k/|C|.

De-noising offers the three clean-up strategies used on generated masks:
replacement by reference masks on high overlap, removal of sub-1-per-mille
components, and morphological closing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from sklearn.base import BaseEstimator, ClusterMixin

from .geometry import Triple
from .validation import check_same_dims
from .volume import MaskVolume, Volume

SMALL_MASK_RATIO = 0.001


@dataclass(frozen=True)
class FhParams:
    """Tuning knobs for graph segmentation.

    k scales the merge threshold tau(C) = k / |C|; larger k yields fewer,
    larger components. sigma is Gaussian pre-smoothing in voxels (0 = off).
    Components below min_size are merged into their lowest-weight neighbor.
    """

    k: float = 100.0
    connectivity: int = 6
    sigma: float = 0.8
    min_size: int = 0

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError(f"k must be positive, got {self.k}")
        if self.connectivity not in (6, 26):
            raise ValueError(f"connectivity must be 6 or 26, got {self.connectivity}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be nonnegative, got {self.sigma}")
        if self.min_size < 0:
            raise ValueError(f"min_size must be nonnegative, got {self.min_size}")


@dataclass(frozen=True)
class FhLabeling:
    """Dense component labeling of a voxel grid."""

    labels: np.ndarray
    sizes: dict[int, int]
    num_components: int
    dims: Triple

    def __post_init__(self):
        arr = np.ascontiguousarray(self.labels, dtype=np.int64)
        arr.setflags(write=False)
        object.__setattr__(self, "labels", arr)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))

    @property
    def grid(self) -> np.ndarray:
        return self.labels.reshape(self.dims)


_OFFSETS_6 = ((1, 0, 0), (0, 1, 0), (0, 0, 1))


def _offsets(connectivity: int):
    if connectivity == 6:
        return _OFFSETS_6
    # half-space of the 26-neighborhood: first nonzero step positive,
    # so the flat target index always exceeds the source index
    out = []
    for dz in (0, 1):
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if (dz, dy, dx) == (0, 0, 0):
                    continue
                if dz == 0 and (dy < 0 or (dy == 0 and dx < 0)):
                    continue
                out.append((dz, dy, dx))
    return tuple(out)


def _build_edges(values: np.ndarray, connectivity: int):
    """All adjacency edges as (weight, src_flat, tgt_flat) arrays, sorted
    ascending with (weight, src, tgt) tie-breaking."""
    d, h, w = values.shape
    flat = np.arange(d * h * w, dtype=np.int64).reshape(d, h, w)
    srcs, tgts, weights = [], [], []
    for dz, dy, dx in _offsets(connectivity):
        src_sl = tuple(slice(0, n - o) if o > 0 else slice(-o, n) for n, o in zip((d, h, w), (dz, dy, dx)))
        tgt_sl = tuple(slice(o, n) if o > 0 else slice(0, n + o) for n, o in zip((d, h, w), (dz, dy, dx)))
        a = values[src_sl]
        b = values[tgt_sl]
        srcs.append(flat[src_sl].ravel())
        tgts.append(flat[tgt_sl].ravel())
        weights.append(np.abs(a - b).ravel())
    src = np.concatenate(srcs)
    tgt = np.concatenate(tgts)
    wgt = np.concatenate(weights)
    order = np.lexsort((tgt, src, wgt))
    return wgt[order], src[order], tgt[order]


class _UnionFind:
    """Union-find over voxel indices tracking component size and internal
    difference (max weight of a merged edge)."""

    __slots__ = ("parent", "size", "internal")

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n
        self.internal = [0.0] * n

    def find(self, x: int) -> int:
        parent = self.parent
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a: int, b: int, weight: float) -> int:
        if self.size[a] < self.size[b]:
            a, b = b, a
        self.parent[b] = a
        self.size[a] += self.size[b]
        if weight > self.internal[a]:
            self.internal[a] = weight
        return a


def fh_segment(volume: Volume, params: FhParams = FhParams()) -> FhLabeling:
    """Segment a volume into intensity-coherent connected components."""
    values = volume.voxels.astype(np.float64)
    if params.sigma > 0:
        values = ndimage.gaussian_filter(values, sigma=params.sigma, truncate=3.0, mode="reflect")
    n = values.size
    weights, srcs, tgts = _build_edges(values, params.connectivity)

    uf = _UnionFind(n)
    k = params.k
    find, union = uf.find, uf.union
    size, internal = uf.size, uf.internal
    w_list = weights.tolist()
    s_list = srcs.tolist()
    t_list = tgts.tolist()
    for w, s, t in zip(w_list, s_list, t_list):
        ra = find(s)
        rb = find(t)
        if ra == rb:
            continue
        if w <= min(internal[ra] + k / size[ra], internal[rb] + k / size[rb]):
            union(ra, rb, w)

    if params.min_size > 0:
        ms = params.min_size
        for w, s, t in zip(w_list, s_list, t_list):
            ra = find(s)
            rb = find(t)
            if ra != rb and (size[ra] < ms or size[rb] < ms):
                union(ra, rb, w)

    labels = np.empty(n, dtype=np.int64)
    remap: dict[int, int] = {}
    sizes: dict[int, int] = {}
    for i in range(n):
        root = find(i)
        lbl = remap.get(root)
        if lbl is None:
            lbl = len(remap)
            remap[root] = lbl
            sizes[lbl] = size[root]
        labels[i] = lbl
    return FhLabeling(labels, sizes, len(remap), values.shape)


def components_to_masks(labeling: FhLabeling) -> list[MaskVolume]:
    """One binary mask per component, in component-id order."""
    grid = labeling.grid
    return [MaskVolume(grid == cid) for cid in range(labeling.num_components)]


def _dice(a: np.ndarray, b: np.ndarray) -> float:
    inter = int(np.logical_and(a, b).sum())
    total = int(a.sum()) + int(b.sum())
    if total == 0:
        return 1.0
    return 2.0 * inter / total


def denoise_replace_with_gt(
    pseudo: list[MaskVolume],
    gt: list[MaskVolume],
    overlap_threshold: float = 0.5,
) -> list[MaskVolume]:
    """Swap generated masks for reference masks where they overlap enough.

    Each reference mask claims its best-matching generated mask with Dice
    strictly above the threshold (first listed wins ties, each generated
    mask claimed once); reference masks with no match are appended.
    """
    everything = pseudo + gt
    for m in everything[1:]:
        check_same_dims(everything[0], m)
    out = list(pseudo)
    taken = [False] * len(pseudo)
    for g in gt:
        best_idx, best_dice = -1, overlap_threshold
        for i, p in enumerate(pseudo):
            if taken[i]:
                continue
            d = _dice(p.bits, g.bits)
            if d > best_dice:
                best_idx, best_dice = i, d
        if best_idx >= 0:
            out[best_idx] = g
            taken[best_idx] = True
        else:
            out.append(g)
    return out


def denoise_filter_small(masks: list[MaskVolume]) -> list[MaskVolume]:
    """Drop masks covering strictly less than 1/1000 of the grid."""
    out = []
    for m in masks:
        total = m.dims[0] * m.dims[1] * m.dims[2]
        if m.num_foreground / total >= SMALL_MASK_RATIO:
            out.append(m)
    return out


def denoise_morph_refine(mask: MaskVolume, radius: int = 1) -> MaskVolume:
    """Morphological closing with a cubic element of side 2*radius + 1.

    The grid boundary is treated as zero-padded for both passes.
    """
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    side = 2 * radius + 1
    cube = np.ones((side, side, side), dtype=bool)
    dilated = ndimage.binary_dilation(mask.bits, structure=cube, border_value=0)
    closed = ndimage.binary_erosion(dilated, structure=cube, border_value=0)
    return mask.with_bits(closed)


class Felzenszwalb3D(ClusterMixin, BaseEstimator):
    """Estimator facade over fh_segment.

    fit(X) segments the Volume X and exposes labels_ (flat component ids),
    sizes_, and num_components_. fit_predict returns labels_.
    """

    def __init__(self, k: float = 100.0, connectivity: int = 6,
                 sigma: float = 0.8, min_size: int = 0):
        self.k = k
        self.connectivity = connectivity
        self.sigma = sigma
        self.min_size = min_size

    def fit(self, X: Volume, y=None):
        params = FhParams(k=self.k, connectivity=self.connectivity,
                          sigma=self.sigma, min_size=self.min_size)
        labeling = fh_segment(X, params)
        self.labeling_ = labeling
        self.labels_ = labeling.labels
        self.sizes_ = labeling.sizes
        self.num_components_ = labeling.num_components
        return self
