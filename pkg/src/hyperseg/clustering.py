"""k-medoids clustering (PAM, CLARA) and marker extraction from clusters."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .core import (ConfigError, DataError, HyperCube, StructuringElement, connected_components,
                   disk, square8)
from .gradients import Euclidean
from .morphology import erode, opening

DEFAULT_SEED = 42


def pairwise(A, B, kind=None) -> np.ndarray:
    """Distance matrix between the rows of ``A`` and ``B`` under a fitted ``kind``."""
    kind = kind or Euclidean()
    za, zb = kind.embed(A), kind.embed(B)
    return np.sqrt(np.sum((za[:, None, :] - zb[None, :, :]) ** 2, axis=2))


@dataclass
class Clustering:
    """Result of PAM or CLARA: medoid row indices, labels ``0..k-1``, total cost."""

    medoids: np.ndarray
    labels: np.ndarray
    cost: float


def _assign(D):
    """Nearest column per row; ties go to the lowest medoid position."""
    labels = np.argmin(D, axis=1)
    return labels, D[np.arange(D.shape[0]), labels]


def pam_dissimilarity(D, k: int, max_swaps: Optional[int] = None) -> Clustering:
    """PAM on a precomputed ``n x n`` dissimilarity matrix.

    BUILD adds medoids greedily (first the point of least total distance,
    then whichever lowers the cost most); SWAP then applies the best
    improving (medoid, non-medoid) exchange until none improves. Ties are
    resolved toward the lowest index, making the result a pure function of
    the input order.
    """
    D = np.asarray(D, dtype=np.float64)
    n = D.shape[0]
    if not 1 <= k <= n:
        raise ConfigError(f"need 1 <= k <= n, got k={k}, n={n}")
    eps = 1e-12 * max(float(D.max(initial=0.0)), 1.0)

    # BUILD
    medoids = [int(np.argmin(D.sum(axis=0)))]
    nearest = D[:, medoids[0]].copy()
    while len(medoids) < k:
        gain = np.clip(nearest[:, None] - D, 0.0, None).sum(axis=0)
        gain[medoids] = -np.inf
        best = int(np.argmax(gain))
        medoids.append(best)
        np.minimum(nearest, D[:, best], out=nearest)

    # SWAP
    medoids = np.array(medoids)
    swaps = 0
    while max_swaps is None or swaps < max_swaps:
        Dm = D[:, medoids]
        order = np.argsort(Dm, axis=1, kind="stable")
        d1 = Dm[np.arange(n), order[:, 0]]
        d2 = Dm[np.arange(n), order[:, 1]] if k > 1 else np.full(n, np.inf)
        cost = d1.sum()
        is_med = np.zeros(n, dtype=bool)
        is_med[medoids] = True
        best_delta, best_pair = -eps, None
        for i in range(k):
            # cost after replacing medoid i by each candidate h, for all h at once
            others = np.where(order[:, 0] == i, d2, d1)
            new = np.minimum(others[:, None], D).sum(axis=0)
            new[is_med] = np.inf
            h = int(np.argmin(new))
            delta = new[h] - cost
            if delta < best_delta:
                best_delta, best_pair = delta, (i, h)
        if best_pair is None:
            break
        medoids[best_pair[0]] = best_pair[1]
        swaps += 1
    labels, dmin = _assign(D[:, medoids])
    return Clustering(medoids, labels, float(dmin.sum()))


def pam(points, k: int, kind=None) -> Clustering:
    """PAM k-medoids on the rows of ``points``."""
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    kind = (kind or Euclidean()).fitted(X)
    return pam_dissimilarity(pairwise(X, X, kind), k)


@dataclass(frozen=True)
class ClusteringSpec:
    """CLARA settings; ``sample_size`` defaults to ``min(P, 40 + 2k)``."""

    k: int = 3
    samples: int = 5
    sample_size: Optional[int] = None
    seed: int = DEFAULT_SEED
    distance: object = field(default_factory=Euclidean)

    def resolved_sample_size(self, n_points: int) -> int:
        if self.sample_size is not None:
            return self.sample_size
        return min(n_points, 40 + 2 * self.k)

    def check(self, n_points: int):
        s = self.resolved_sample_size(n_points)
        if not 2 <= self.k <= s <= n_points:
            raise ConfigError(f"need 2 <= k <= sample_size <= P, got k={self.k}, "
                              f"sample_size={s}, P={n_points}")
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")


def clara(points, spec: ClusteringSpec) -> Clustering:
    """CLARA: PAM on random subsamples, every point assigned to the best medoid set.

    Each of ``spec.samples`` draws (without replacement, sorted) is solved by
    PAM; the medoids whose full-data cost is lowest win, ties going to the
    earlier sample.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    spec.check(n)
    size = spec.resolved_sample_size(n)
    kind = spec.distance.fitted(X)
    rng = np.random.default_rng(spec.seed)
    best = None
    for _ in range(spec.samples):
        idx = np.arange(n) if size == n else np.sort(rng.choice(n, size=size, replace=False))
        sub = X[idx]
        local = pam_dissimilarity(pairwise(sub, sub, kind), spec.k)
        medoids = idx[local.medoids]
        D = pairwise(X, X[medoids], kind)
        labels, dmin = _assign(D)
        cost = float(dmin.sum())
        if best is None or cost < best.cost:
            best = Clustering(medoids, labels, cost)
    return best


SelectRule = Union[int, str]


def select_cluster(labels_img: np.ndarray, k: int, rule: SelectRule) -> int:
    """Pick a cluster id from a ``(height, width)`` cluster map.

    ``rule`` is an explicit cluster index, ``"smallest"``, ``"largest"`` or
    ``"center"`` (cluster whose pixel centroid is nearest the image center).
    Ties go to the lowest cluster id.
    """
    if isinstance(rule, (int, np.integer)) and not isinstance(rule, bool):
        if not 0 <= rule < k:
            raise ConfigError(f"selected cluster {rule} outside [0, {k})")
        return int(rule)
    sizes = np.bincount(labels_img.ravel(), minlength=k)
    present = sizes > 0
    if rule == "smallest":
        return int(np.argmin(np.where(present, sizes, np.iinfo(np.int64).max)))
    if rule == "largest":
        return int(np.argmax(sizes))
    if rule == "center":
        h, w = labels_img.shape
        yy, xx = np.mgrid[0:h, 0:w]
        cy, cx = (h - 1) / 2, (w - 1) / 2
        dist = np.full(k, np.inf)
        for c in np.flatnonzero(present):
            m = labels_img == c
            dist[c] = np.hypot(yy[m].mean() - cy, xx[m].mean() - cx)
        return int(np.argmin(dist))
    raise ConfigError(f"unknown cluster selection rule {rule!r}")


@dataclass(frozen=True)
class MarkerSpec:
    """Two-stage cluster-based marker extraction.

    Stage 1 clusters every pixel and keeps one cluster (``select``). When
    ``stage2`` is set, the kept pixels are clustered again, every other pixel
    joins the largest stage-2 cluster, and ``stage2_select`` picks the
    marker cluster. The marker mask is eroded by ``disk(erosion_radius)``,
    opened with ``disk(opening_radius)`` and split into connected
    components. ``background`` is ``"none"`` or ``"eroded_complement"``,
    which appends the complement of the cluster mask eroded by
    ``disk(background_radius)`` (defaults to ``opening_radius``) as one more
    label. ``erosion_radius`` defaults to the background radius so object
    and background seeds stop equally far from the cluster border, leaving
    the boundary to the gradient.
    """

    stage1: ClusteringSpec = field(default_factory=ClusteringSpec)
    select: SelectRule = "smallest"
    stage2: Optional[ClusteringSpec] = None
    stage2_select: SelectRule = "smallest"
    opening_radius: int = 2
    background: str = "eroded_complement"
    background_radius: Optional[int] = None
    erosion_radius: Optional[int] = None
    connectivity: StructuringElement = field(default_factory=square8)

    def __post_init__(self):
        if self.opening_radius < 0:
            raise ConfigError("opening_radius must be >= 0")
        if self.background not in ("none", "eroded_complement"):
            raise ConfigError(f"unknown background mode {self.background!r}")
        for name in ("background_radius", "erosion_radius"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ConfigError(f"{name} must be >= 0")

    @property
    def resolved_background_radius(self) -> int:
        if self.background_radius is not None:
            return self.background_radius
        return self.opening_radius

    @property
    def resolved_erosion_radius(self) -> int:
        if self.erosion_radius is not None:
            return self.erosion_radius
        return self.resolved_background_radius if self.background == "eroded_complement" else 0


@dataclass
class MarkerResult:
    markers: np.ndarray
    clusters: np.ndarray
    marker_mask: np.ndarray
    n_objects: int


def cluster_image(space: HyperCube, spec: ClusteringSpec) -> np.ndarray:
    """CLARA cluster map of a cube, shape ``(height, width)``."""
    return clara(space.pixels(), spec).labels.reshape(space.height, space.width)


def extract_markers(space: HyperCube, spec: MarkerSpec, details: bool = False):
    """Marker label image from spectral clustering of ``space``.

    Raises
    ------
    DataError
        If nothing of the selected cluster survives the opening.
    """
    X = space.pixels()
    h, w = space.height, space.width
    stage1 = clara(X, spec.stage1).labels.reshape(h, w)
    chosen = select_cluster(stage1, spec.stage1.k, spec.select)
    mask = stage1 == chosen
    clusters = stage1
    if spec.stage2 is not None:
        sel = np.flatnonzero(mask.ravel())
        sub = clara(X[sel], spec.stage2).labels
        sizes = np.bincount(sub, minlength=spec.stage2.k)
        merged = np.full(h * w, int(np.argmax(sizes)), dtype=np.int64)
        merged[sel] = sub
        clusters = merged.reshape(h, w)
        mask = clusters == select_cluster(clusters, spec.stage2.k, spec.stage2_select)

    seeds = mask
    e = spec.resolved_erosion_radius
    if e > 0:
        seeds = erode(seeds.astype(np.float64), disk(e)) > 0.5
    if spec.opening_radius > 0:
        seeds = opening(seeds.astype(np.float64), disk(spec.opening_radius)) > 0.5
    if not seeds.any():
        raise DataError(f"no marker pixel survives erosion {e} and opening "
                        f"{spec.opening_radius}; lower the radii")
    markers = connected_components(seeds, spec.connectivity)
    n_obj = int(markers.max())
    if spec.background == "eroded_complement":
        r = spec.resolved_background_radius
        bg = erode((~mask).astype(np.float64), disk(r)) > 0.5 if r > 0 else ~mask
        if not bg.any():
            raise DataError("eroded background seed is empty; lower background_radius")
        markers[bg] = n_obj + 1
    if details:
        return MarkerResult(markers, clusters, mask, n_obj)
    return markers
