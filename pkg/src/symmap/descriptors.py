"""Spectral shape descriptors: biharmonic distances, farthest-point sampling
and the wave kernel signature.

The biharmonic distance between vertices x and y is

    d(x, y) = sqrt( sum_i (phi_i(x) - phi_i(y))**2 / lambda_i**2 )

over the nonzero eigenvalues of the basis (the constant mode is skipped, and
the infinite sum is truncated at the basis size).  Equivalently it is the
Euclidean distance between rows of the embedding ``phi_i / lambda_i``, so the
truncated distance satisfies the metric axioms exactly.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpectrum, ZeroEigenvalueDivision


@dataclass(frozen=True)
class SampleSet:
    """Ordered farthest-point sample with coverage radii.

    ``coverage_radii[i]`` is the biharmonic distance of sample ``i`` to the
    previously selected set (infinite for the seed sample); the sequence is
    non-increasing.
    """

    vertex_ids: np.ndarray
    coverage_radii: np.ndarray


@dataclass(frozen=True)
class BiharmonicTable:
    """Dense symmetric biharmonic distances over a sample set.

    ``full_rows`` optionally caches each sample's distances to every vertex;
    region growing and repeatability evaluation reuse those rows.
    """

    sample_ids: np.ndarray
    distances: np.ndarray
    full_rows: np.ndarray | None = None

    @property
    def diameter(self):
        return float(self.distances.max())

    def index_of(self, vertex_id):
        hits = np.nonzero(self.sample_ids == vertex_id)[0]
        if hits.size == 0:
            raise KeyError(f"vertex {vertex_id} is not a sample")
        return int(hits[0])


@dataclass(frozen=True)
class WksField:
    """Per-vertex wave kernel signatures over log-spaced energy bands.

    Rows are L1-normalized so squared-Euclidean comparisons are scale-free
    across meshes.
    """

    energies: np.ndarray
    sigma: float
    signatures: np.ndarray


def _spectral_embedding(basis):
    """Rows ``phi_i(v) / lambda_i`` over nonzero eigenvalues."""
    lam = basis.eigenvalues
    if (lam[1:] <= 0.0).any():
        bad = int(np.nonzero(lam[1:] <= 0.0)[0][0]) + 1
        raise ZeroEigenvalueDivision(
            f"nonconstant eigenvalue {bad} is zero after clamping"
        )
    return basis.eigenvectors[:, 1:] / lam[1:]


def biharmonic_distance(basis, x, y):
    """Truncated biharmonic distance between two vertices."""
    lam = basis.eigenvalues
    if (lam[1:] <= 0.0).any():
        raise ZeroEigenvalueDivision("nonconstant eigenvalue is zero after clamping")
    diff = (basis.eigenvectors[int(x), 1:] - basis.eigenvectors[int(y), 1:]) / lam[1:]
    return float(np.sqrt((diff * diff).sum()))


def biharmonic_rows(basis, vertex_ids):
    """Distances from each listed vertex to every vertex, one row per id."""
    emb = _spectral_embedding(basis)
    ids = np.atleast_1d(np.asarray(vertex_ids, dtype=np.int64))
    rows = np.empty((ids.size, emb.shape[0]))
    for i, vid in enumerate(ids):
        diff = emb - emb[vid]
        rows[i] = np.sqrt((diff * diff).sum(axis=1))
    return rows


def all_pairs_biharmonic(basis, samples, cache_rows=False):
    """Dense symmetric distance table over a sample set.

    The computation is vectorized over source samples; entries (i, j) and
    (j, i) evaluate the same expression, so the table is exactly symmetric
    with an exactly zero diagonal.
    """
    ids = np.asarray(samples.vertex_ids, dtype=np.int64)
    if ids.size == 0:
        raise ValueError("empty sample set")
    emb = _spectral_embedding(basis)
    pts = emb[ids]
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    rows = biharmonic_rows(basis, ids) if cache_rows else None
    return BiharmonicTable(sample_ids=ids, distances=dist, full_rows=rows)


def farthest_point_sample(basis, n, seed):
    """Farthest-point sampling in biharmonic distance space.

    The first vertex is drawn uniformly with the seeded generator; every
    subsequent vertex maximizes the minimum biharmonic distance to the chosen
    set, with ties broken by the lowest vertex id.
    """
    nv = basis.vertex_count
    if not 1 <= n <= nv:
        raise ValueError(f"sample count {n} out of range [1, {nv}]")
    emb = _spectral_embedding(basis)
    rng = np.random.default_rng(seed)
    first = int(rng.integers(nv))

    ids = [first]
    radii = [np.inf]
    diff = emb - emb[first]
    min_dist = np.sqrt((diff * diff).sum(axis=1))
    min_dist[first] = -np.inf
    for _ in range(n - 1):
        nxt = int(np.argmax(min_dist))  # argmax returns the lowest tied id
        radii.append(float(min_dist[nxt]))
        ids.append(nxt)
        diff = emb - emb[nxt]
        dist = np.sqrt((diff * diff).sum(axis=1))
        np.minimum(min_dist, dist, out=min_dist)
        min_dist[nxt] = -np.inf
    return SampleSet(
        vertex_ids=np.array(ids, dtype=np.int64),
        coverage_radii=np.array(radii),
    )


def compute_wks(basis, bands=100, sigma_factor=7.0):
    """Wave kernel signatures with log-normal energy bands.

    Band centers are log-uniform on ``[log l2 + 2s, log lk - 2s]`` where
    ``s = sigma_factor * (log lk - log l2) / bands``; each band's weights over
    the eigenvalues are normalized to sum to one, then every vertex row is
    L1-normalized.
    """
    if bands < 2:
        raise ValueError("at least two bands required")
    lam = basis.eigenvalues
    positive = lam[lam > 0.0]
    if positive.size < 2:
        raise DegenerateSpectrum("need at least two nonzero eigenvalues")
    log_lo = np.log(positive[0])
    log_hi = np.log(positive[-1])
    if log_hi <= log_lo:
        raise DegenerateSpectrum("spectrum has zero logarithmic width")
    sigma = sigma_factor * (log_hi - log_lo) / bands
    e_min = log_lo + 2.0 * sigma
    e_max = log_hi - 2.0 * sigma
    if e_max <= e_min:
        raise DegenerateSpectrum(
            "band range collapsed; increase bands or reduce sigma_factor"
        )
    log_e = np.linspace(e_min, e_max, bands)

    log_lam = np.log(positive)
    gauss = np.exp(-((log_e[None, :] - log_lam[:, None]) ** 2) / (2.0 * sigma * sigma))
    gauss = gauss / gauss.sum(axis=0)

    phi2 = basis.eigenvectors[:, lam > 0.0] ** 2
    sig = phi2 @ gauss
    sig = sig / sig.sum(axis=1)[:, None]
    sig.setflags(write=False)
    return WksField(energies=np.exp(log_e), sigma=float(sigma), signatures=sig)


def wks_distance(field, x, y):
    """Squared Euclidean distance between two signature rows."""
    diff = field.signatures[int(x)] - field.signatures[int(y)]
    return float((diff * diff).sum())


def pairwise_wks_gaps(samples, field):
    """Condensed vector of squared signature distances over all sample pairs."""
    rows = field.signatures[samples.vertex_ids]
    n = rows.shape[0]
    gaps = []
    for i in range(n - 1):
        diff = rows[i + 1 :] - rows[i]
        gaps.append((diff * diff).sum(axis=1))
    if not gaps:
        return np.empty(0)
    return np.concatenate(gaps)


def table_to_csv(table, path):
    """Write a distance table as CSV (header row/column of sample ids)."""
    ids = [str(int(v)) for v in table.sample_ids]
    lines = ["vertex," + ",".join(ids)]
    for i, vid in enumerate(ids):
        row = ",".join(repr(float(x)) for x in table.distances[i])
        lines.append(f"{vid},{row}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def truncation_gap(basis_small, basis_large, sample_ids):
    """Median relative change of sampled pairwise distances between two
    truncation levels; quantifies the tail contribution of the larger basis."""
    ids = np.asarray(sample_ids, dtype=np.int64)
    small = all_pairs_biharmonic(basis_small, SampleSet(ids, np.zeros(ids.size)))
    large = all_pairs_biharmonic(basis_large, SampleSet(ids, np.zeros(ids.size)))
    iu = np.triu_indices(ids.size, k=1)
    a, b = small.distances[iu], large.distances[iu]
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.abs(a - b) / np.where(b > 0, b, 1.0)
    return float(np.median(rel))
