"""Symmetry characterization: diagonality scores and map clustering.

The complexity of a symmetry transformation shows up as off-diagonal energy
in its functional map.  An inverted-Gaussian weight matrix (zero on the
diagonal, approaching one far from it) turns that energy into a scalar score;
each map becomes a point on a half-line, and the distance between two maps is
the absolute difference of their scores.  Grouping symmetries is a k-means
problem on the flattened map matrices.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, TooFewMaps

_KMEANS_MAX_ITER = 300
_KMEANS_TOL = 1e-6


@dataclass(frozen=True)
class WeightMatrix:
    """Inverted-Gaussian off-diagonal penalty weights."""

    W: np.ndarray
    gaussian_width: float


@dataclass(frozen=True)
class SymmetryRecord:
    """A map's position in the 1D symmetry space, with its group label."""

    map_id: int
    score: float
    cluster_label: int | None = None


def build_weight_matrix(k_f, gaussian_width):
    """Weights ``W[i, j] = 1 - exp(-(i - j)^2 / (2 w^2))`` (zero diagonal)."""
    if k_f < 1:
        raise ValueError("k_f must be >= 1")
    if gaussian_width <= 0:
        raise ValueError("gaussian_width must be positive")
    idx = np.arange(k_f)
    diff = idx[:, None] - idx[None, :]
    w = 1.0 - np.exp(-(diff * diff) / (2.0 * gaussian_width * gaussian_width))
    w.setflags(write=False)
    return WeightMatrix(W=w, gaussian_width=float(gaussian_width))


def symmetry_score(fmap, weights):
    """Weighted fraction of squared-coefficient energy away from the diagonal.

    ``score = sum(W * C**2) / sum(C**2)`` lies in [0, 1], is zero exactly for
    diagonal maps, and is invariant to nonzero global scaling of C.  An
    all-zero C scores zero by convention (with a warning).
    """
    c = fmap.C if hasattr(fmap, "C") else np.asarray(fmap)
    if c.shape != weights.W.shape:
        raise DimensionMismatch(
            f"map is {c.shape}, weight matrix is {weights.W.shape}"
        )
    energy = c * c
    total = float(energy.sum())
    if total == 0.0:
        warnings.warn("all-zero functional map scored as 0", RuntimeWarning)
        return 0.0
    return float((weights.W * energy).sum() / total)


def symmetry_distance(record_a, record_b):
    """Distance in the 1D symmetry space: ``|score_a - score_b|``."""
    return abs(record_a.score - record_b.score)


def _kmeans(points, k, seed):
    """Deterministic k-means with k-means++ seeding.

    Lloyd iterations stop when no centroid moves more than ``1e-6`` or after
    300 rounds.  An emptied cluster is reseeded at the point farthest from
    its assigned centroid, which keeps the run deterministic.
    """
    n = points.shape[0]
    rng = np.random.default_rng(seed)
    centers = np.empty((k, points.shape[1]))
    first = int(rng.integers(n))
    centers[0] = points[first]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            centers[c] = points[int(rng.integers(n))]
            continue
        r = rng.random() * total
        idx = int(np.searchsorted(np.cumsum(d2), r))
        idx = min(idx, n - 1)
        centers[c] = points[idx]
        d2 = np.minimum(d2, ((points - centers[c]) ** 2).sum(axis=1))

    labels = np.zeros(n, dtype=np.int64)
    for _ in range(_KMEANS_MAX_ITER):
        dist = (
            (points * points).sum(axis=1)[:, None]
            + (centers * centers).sum(axis=1)[None, :]
            - 2.0 * points @ centers.T
        )
        labels = np.argmin(dist, axis=1)
        moved = 0.0
        for c in range(k):
            members = points[labels == c]
            if members.shape[0] == 0:
                far = int(np.argmax(dist[np.arange(n), labels]))
                new_center = points[far]
            else:
                new_center = members.mean(axis=0)
            moved = max(moved, float(np.linalg.norm(new_center - centers[c])))
            centers[c] = new_center
        if moved <= _KMEANS_TOL:
            break
    dist = (
        (points * points).sum(axis=1)[:, None]
        + (centers * centers).sum(axis=1)[None, :]
        - 2.0 * points @ centers.T
    )
    labels = np.argmin(dist, axis=1)
    inertia = float(dist[np.arange(n), labels].clip(min=0.0).sum())
    return labels, centers, inertia


def cluster_maps(maps, k_groups, seed, weights=None):
    """Group functional maps by k-means on their flattened matrices.

    All maps must share ``k_f`` and be flip-canonicalized beforehand.  Labels
    are renumbered by ascending cluster-centroid score, so label 0 is the
    simplest (most diagonal) group.

    Returns
    -------
    (records, centers) : list of SymmetryRecord and the centroid matrices.
    """
    if not maps:
        raise TooFewMaps("no maps to cluster")
    k_f = maps[0].k_f
    for m in maps:
        if m.k_f != k_f:
            raise DimensionMismatch("maps have different sizes")
    if k_groups > len(maps):
        raise TooFewMaps(f"{len(maps)} maps for {k_groups} clusters")
    if weights is None:
        weights = build_weight_matrix(k_f, max(k_f / 10.0, 1.0))

    points = np.stack([m.C.ravel() for m in maps])
    if k_groups == len(maps):
        labels = np.arange(len(maps))
        centers = points.copy()
    else:
        labels, centers, _ = _kmeans(points, k_groups, seed)

    scores = [symmetry_score(m, weights) for m in maps]
    centroid_scores = [
        symmetry_score(centers[c].reshape(k_f, k_f), weights)
        for c in range(centers.shape[0])
    ]
    order = np.argsort(centroid_scores, kind="stable")
    renumber = np.empty_like(order)
    renumber[order] = np.arange(order.size)

    records = [
        SymmetryRecord(map_id=i, score=scores[i], cluster_label=int(renumber[labels[i]]))
        for i in range(len(maps))
    ]
    centers = centers[order].reshape(-1, k_f, k_f)
    return records, centers


def silhouette_sweep(maps, seed, k_min=2, k_max=None):
    """Pick a cluster count by the best mean silhouette over a small sweep."""
    n = len(maps)
    if k_max is None:
        k_max = min(8, n - 1)
    if n < 3 or k_min > k_max:
        return max(1, min(n, k_min))
    points = np.stack([m.C.ravel() for m in maps])
    dists = np.sqrt(
        np.maximum(
            (points * points).sum(axis=1)[:, None]
            + (points * points).sum(axis=1)[None, :]
            - 2.0 * points @ points.T,
            0.0,
        )
    )
    best_k, best_val = k_min, -np.inf
    for k in range(k_min, k_max + 1):
        labels, _, _ = _kmeans(points, k, seed)
        val = _mean_silhouette(dists, labels)
        if val > best_val + 1e-12:
            best_k, best_val = k, val
    return best_k


def _mean_silhouette(dists, labels):
    n = dists.shape[0]
    vals = []
    for i in range(n):
        own = labels[i]
        same = (labels == own) & (np.arange(n) != i)
        if not same.any():
            vals.append(0.0)
            continue
        a = dists[i, same].mean()
        b = np.inf
        for other in np.unique(labels):
            if other == own:
                continue
            members = labels == other
            if members.any():
                b = min(b, dists[i, members].mean())
        if not np.isfinite(b):
            vals.append(0.0)
            continue
        denom = max(a, b)
        vals.append(0.0 if denom == 0 else (b - a) / denom)
    return float(np.mean(vals))
