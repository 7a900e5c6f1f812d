"""Functional map estimation, dense correspondence recovery and flip handling.

A detected symmetry is encoded as a ``k_f x k_f`` coefficient matrix C in the
Laplace-Beltrami basis of the mesh.  All maps share the global eigenbasis
(constraint functions are restricted to the source/destination regions), so
maps of different symmetries live in one common matrix space and can be
compared and clustered.
"""

from dataclasses import dataclass

import numpy as np

from .descriptors import biharmonic_rows
from .errors import EmptyRegion, RankDeficient
from .spectral import project
from .voting import distance_vote


@dataclass(frozen=True)
class FunctionalMap:
    """Spectral coefficient matrix of one symmetry, with its seed pairs."""

    C: np.ndarray
    k_f: int
    seed_pairs: tuple
    region_source: np.ndarray
    region_destination: np.ndarray


@dataclass(frozen=True)
class Correspondence:
    """Dense point map: each source-region vertex and its matched vertex."""

    source_ids: np.ndarray
    target_ids: np.ndarray
    residuals: np.ndarray

    def as_dict(self):
        return dict(zip(self.source_ids.tolist(), self.target_ids.tolist()))


def extract_regions(pair_cluster, rows, radius, diameter=None):
    """Union of biharmonic balls around the cluster's endpoints.

    Parameters
    ----------
    pair_cluster : list of VotedPair
    rows : dict
        Vertex id -> distances-to-all-vertices row, covering every endpoint.
    radius : float
        Ball radius as a fraction of the biharmonic diameter.
    diameter : float, optional
        Biharmonic diameter; the maximum of the given rows when omitted.

    Returns
    -------
    (region_source, region_destination) : sorted int arrays.  Regions may
    overlap each other; a tiny radius still yields the endpoints themselves.
    """
    if not pair_cluster:
        raise ValueError("empty pair cluster")
    if not 0.0 < radius <= 1.0:
        raise ValueError("radius must be in (0, 1]")
    if diameter is None:
        diameter = max(float(rows[p.source].max()) for p in pair_cluster)
        diameter = max(diameter, max(float(rows[p.destination].max()) for p in pair_cluster))
    limit = radius * diameter

    def grow(ids):
        mask = np.zeros(next(iter(rows.values())).shape[0], dtype=bool)
        for vid in ids:
            mask |= rows[vid] <= limit
        return np.nonzero(mask)[0].astype(np.int64)

    src = grow([p.source for p in pair_cluster])
    dst = grow([p.destination for p in pair_cluster])
    if src.size == 0 or dst.size == 0:
        raise EmptyRegion("region radius captured no vertices")
    return src, dst


def estimate_map(
    basis,
    wks,
    seed_pairs,
    regions,
    k_f=40,
    mu=1e-2,
    indicator_width=0.05,
    diameter=None,
    rows=None,
):
    """Least-squares functional map from descriptor and seed constraints.

    Constraint function pairs are (i) each signature band restricted to the
    source/destination region and (ii) a mass-normalized Gaussian bump in
    biharmonic distance around each seed endpoint.  C minimizes

        sum_c ||C a_c - b_c||^2  +  mu * ||L C - C L||_F^2

    with L the diagonal of basis eigenvalues (scaled to [0, 1]); the solve is
    closed-form row by row and fully deterministic.

    Parameters
    ----------
    wks : WksField or None
        Omit to use only the seed-bump constraints.
    indicator_width : float
        Bump width as a fraction of the biharmonic diameter.
    diameter : float, optional
        Derived from the seed rows when omitted.
    rows : dict, optional
        Precomputed vertex id -> distance row for the seed endpoints; rows for
        missing endpoints are computed here.

    Raises
    ------
    RankDeficient
        If there are fewer constraints than ``k_f`` (or the normal matrix is
        singular).
    """
    if not seed_pairs:
        raise ValueError("need at least one seed pair")
    if k_f > basis.k:
        raise ValueError(f"k_f={k_f} exceeds basis size {basis.k}")
    region_src, region_dst = regions
    nv = basis.vertex_count
    masses = basis.vertex_masses

    seed_ids = sorted({p.source for p in seed_pairs} | {p.destination for p in seed_pairs})
    row_of = dict(rows) if rows else {}
    missing = [vid for vid in seed_ids if vid not in row_of]
    if missing:
        computed = biharmonic_rows(basis, np.array(missing, dtype=np.int64))
        row_of.update({vid: computed[i] for i, vid in enumerate(missing)})
    if diameter is None:
        diameter = max(float(row_of[vid].max()) for vid in seed_ids)
    width = indicator_width * diameter

    src_mask = np.zeros(nv)
    src_mask[region_src] = 1.0
    dst_mask = np.zeros(nv)
    dst_mask[region_dst] = 1.0

    a_cols, b_cols = [], []
    phi = basis.eigenvectors[:, :k_f]

    def coeff(field):
        return phi.T @ (masses * field)

    if wks is not None:
        sig = wks.signatures
        a_cols.append(phi.T @ (masses[:, None] * (sig * src_mask[:, None])))
        b_cols.append(phi.T @ (masses[:, None] * (sig * dst_mask[:, None])))

    def bump(vid):
        g = np.exp(-(row_of[vid] ** 2) / (2.0 * width * width))
        total = float((masses * g).sum())
        return g / total

    for p in seed_pairs:
        a_cols.append(coeff(bump(p.source))[:, None])
        b_cols.append(coeff(bump(p.destination))[:, None])

    a = np.concatenate(a_cols, axis=1)
    b = np.concatenate(b_cols, axis=1)
    n_constraints = a.shape[1]
    if n_constraints < k_f:
        raise RankDeficient(
            f"{n_constraints} constraints for map size {k_f}"
        )

    # column normalization keeps descriptor and bump constraints commensurate
    norms = np.linalg.norm(a, axis=0)
    norms = np.where(norms > 0.0, norms, 1.0)
    a = a / norms
    b = b / norms

    lam = basis.eigenvalues[:k_f]
    lam_scale = lam[-1] if lam[-1] > 0 else 1.0
    lam_n = lam / lam_scale

    gram = a @ a.T
    rhs = b @ a.T
    c = np.empty((k_f, k_f))
    for i in range(k_f):
        penalty = (lam_n[i] - lam_n) ** 2
        try:
            c[i] = np.linalg.solve(gram + mu * np.diag(penalty), rhs[i])
        except np.linalg.LinAlgError as exc:
            raise RankDeficient(
                f"normal matrix singular at row {i} with {n_constraints} constraints"
            ) from exc
    c.setflags(write=False)
    return FunctionalMap(
        C=c,
        k_f=k_f,
        seed_pairs=tuple(seed_pairs),
        region_source=np.asarray(region_src, dtype=np.int64),
        region_destination=np.asarray(region_dst, dtype=np.int64),
    )


def recover_correspondence(fmap, basis):
    """Dense point map by pushing vertex deltas through the functional map.

    Each source-region vertex's delta coefficients (its eigenvector row) are
    mapped through C and matched to the nearest destination-region vertex in
    the spectral embedding; ties resolve to the lowest vertex id.
    """
    phi = basis.eigenvectors[:, : fmap.k_f]
    src = np.asarray(fmap.region_source, dtype=np.int64)
    dst = np.asarray(fmap.region_destination, dtype=np.int64)
    if src.size == 0 or dst.size == 0:
        raise EmptyRegion("functional map has an empty region")
    mapped = phi[src] @ fmap.C.T
    target = phi[dst]
    d2 = (
        (mapped * mapped).sum(axis=1)[:, None]
        + (target * target).sum(axis=1)[None, :]
        - 2.0 * (mapped @ target.T)
    )
    np.maximum(d2, 0.0, out=d2)
    best = np.argmin(d2, axis=1)  # first (= lowest id) wins ties; dst is sorted
    residuals = np.sqrt(d2[np.arange(src.size), best])
    return Correspondence(
        source_ids=src,
        target_ids=dst[best],
        residuals=residuals,
    )


def refine_map(fmap, basis, iterations=5, coarse_size=16, step=6):
    """Tighten a map by multi-resolution spectral iterative closest point.

    The map is projected onto the nearest orthogonal matrix (the expected
    structure of a near-isometric self-map), truncated to ``coarse_size``,
    and then alternately (a) converted to a nearest-neighbor point map over
    the regions and (b) refit as the mass-weighted pushforward of that point
    map with the same commutativity regularizer as the initial estimate,
    growing the spectral size back to ``k_f`` in increments of ``step``.
    Coarse levels have a wide convergence basin; the final level runs up to
    ``iterations`` extra rounds and stops once the point map is stable.  The
    whole procedure is deterministic.

    Returns
    -------
    (refined FunctionalMap, Correspondence of the final round)
    """
    k_f = fmap.k_f
    masses = basis.vertex_masses
    src = np.asarray(fmap.region_source, dtype=np.int64)
    lam = basis.eigenvalues[:k_f]
    lam_scale = lam[-1] if lam[-1] > 0 else 1.0
    lam_n = lam / lam_scale
    mu = 1e-2

    def submap(c, kk):
        return FunctionalMap(
            C=c[:kk, :kk], k_f=kk, seed_pairs=fmap.seed_pairs,
            region_source=fmap.region_source,
            region_destination=fmap.region_destination,
        )

    # intermediate rounds match a deterministic source subsample; only the
    # final map gets the dense pass
    stride = max(1, src.size // 600)
    probe = src[::stride]

    def refit_sub(sub_src, targets, kk):
        phi = basis.eigenvectors[:, :kk]
        a = phi[sub_src] * masses[sub_src, None]
        gram = phi[sub_src].T @ a
        rhs = phi[targets].T @ a
        norm = np.trace(gram) / kk
        c = np.empty((kk, kk))
        for i in range(kk):
            penalty = (lam_n[i] - lam_n[:kk]) ** 2
            try:
                c[i] = np.linalg.solve(gram / norm + mu * np.diag(penalty), rhs[i] / norm)
            except np.linalg.LinAlgError as exc:
                raise RankDeficient("refinement normal matrix singular") from exc
        return c

    def probe_targets(c, kk):
        phi = basis.eigenvectors[:, :kk]
        dst = np.asarray(fmap.region_destination, dtype=np.int64)
        mapped = phi[probe] @ c.T
        target = phi[dst]
        d2 = (
            (mapped * mapped).sum(axis=1)[:, None]
            + (target * target).sum(axis=1)[None, :]
            - 2.0 * (mapped @ target.T)
        )
        return dst[np.argmin(d2, axis=1)]

    u, _, vt = np.linalg.svd(fmap.C)
    ortho = u @ vt
    k0 = max(2, min(coarse_size, k_f))
    targets = probe_targets(ortho[:k0, :k0], k0)
    c = ortho
    for kk in list(range(k0 + step, k_f, step)) + [k_f]:
        c = refit_sub(probe, targets, kk)
        targets = probe_targets(c, kk)
    for _ in range(max(0, int(iterations))):
        c = refit_sub(probe, targets, k_f)
        new_targets = probe_targets(c, k_f)
        changed = int((new_targets != targets).sum())
        targets = new_targets
        if changed == 0:
            break
    current = submap(refit_sub(probe, targets, k_f), k_f)
    corr = recover_correspondence(current, basis)
    current.C.setflags(write=False)
    return current, corr


def resolve_flip(pairs, table, anchor=None):
    """Canonical pair orientation: the endpoint nearer the anchor is the source.

    ``anchor`` defaults to the first sample of the table.  Exact distance ties
    resolve to the lower vertex id.  The operation is idempotent and must run
    before map estimation so all maps of one cluster share an orientation.
    """
    if anchor is None:
        anchor = int(table.sample_ids[0])
    ai = table.index_of(anchor)
    d = table.distances
    out = []
    for p in pairs:
        ds = d[ai, table.index_of(p.source)]
        dd = d[ai, table.index_of(p.destination)]
        if dd < ds or (dd == ds and p.destination < p.source):
            out.append(p.reversed())
        else:
            out.append(p)
    return out


def count_orientation_flips(pairs, sides, anchor):
    """Pairs whose destination endpoint sits on the anchor's side.

    ``sides`` assigns each vertex -1, 0 or +1 relative to the fixture's
    symmetry plane (0 meaning on the plane).  After canonical orientation
    every source lies on the anchor's side, so a destination on that side
    marks a flipped pair; on-plane endpoints are not counted.
    """
    anchor_side = int(sides[int(anchor)])
    if anchor_side == 0:
        raise ValueError("anchor lies on the symmetry plane; side undefined")
    return sum(
        1 for p in pairs if int(sides[p.destination]) == anchor_side
    )


def group_pairs(pairs, table, eps=0.02):
    """Greedy agglomeration of voted pairs into mutually-voting clusters.

    Pairs are scanned in order; each joins the first existing cluster whose
    members all pass the distance-vote test against it, otherwise it starts a
    new cluster.  Each cluster later yields one functional map.
    """
    clusters = []
    for p in pairs:
        placed = False
        for cluster in clusters:
            if all(
                distance_vote(
                    (p.source, p.destination), (q.source, q.destination), table, eps
                )
                for q in cluster
            ):
                cluster.append(p)
                placed = True
                break
        if not placed:
            clusters.append([p])
    return clusters
