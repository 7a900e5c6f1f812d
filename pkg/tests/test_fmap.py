import numpy as np
import pytest

import symmap
from conftest import ground_truth_pairs, mirror_closed_samples
from symmap.descriptors import all_pairs_biharmonic, biharmonic_rows
from symmap.errors import EmptyRegion, RankDeficient
from symmap.fmap import (
    count_orientation_flips,
    estimate_map,
    extract_regions,
    group_pairs,
    recover_correspondence,
    refine_map,
    resolve_flip,
)
from symmap.voting import VotedPair


def vpair(a, b):
    return VotedPair(source=a, destination=b, votes=0, support_ratio=1.0, supporting_pairs=())


@pytest.fixture(scope="module")
def mirror_gt(blob, blob_basis, blob_perm, blob_wks):
    samples = mirror_closed_samples(blob_basis, blob_perm, 40, seed=42)
    table = all_pairs_biharmonic(blob_basis, samples, cache_rows=True)
    gt = ground_truth_pairs(samples.vertex_ids, blob_perm)
    rows = {int(v): table.full_rows[i] for i, v in enumerate(table.sample_ids)}
    return samples, table, gt, rows


@pytest.fixture(scope="module")
def gt_mirror_map(blob_basis, blob_wks, mirror_gt):
    _, table, gt, rows = mirror_gt
    regions = extract_regions(gt, rows, 0.25, diameter=table.diameter)
    fm = estimate_map(
        blob_basis, blob_wks, gt, regions,
        k_f=40, diameter=table.diameter, rows=rows,
    )
    return fm


def pushforward_map(basis, perm, k_f):
    """Oracle: exact spectral pushforward of a vertex permutation."""
    phi = basis.eigenvectors[:, :k_f]
    return phi.T @ (basis.vertex_masses[:, None] * phi[perm])


def test_region_radius_one_is_everything(blob, mirror_gt):
    _, table, gt, rows = mirror_gt
    src, dst = extract_regions(gt, rows, 1.0, diameter=table.diameter)
    assert src.size == blob.vertex_count
    assert dst.size == blob.vertex_count


def test_region_tiny_radius_keeps_endpoints(blob_basis, mirror_gt):
    _, table, gt, rows = mirror_gt
    pair = [gt[0]]
    src, dst = extract_regions(pair, rows, 1e-9, diameter=table.diameter)
    assert src.tolist() == [gt[0].source]
    assert dst.tolist() == [gt[0].destination]


def test_regions_disjoint_for_small_radius(blob, blob_basis, mirror_gt):
    # oracle: the two balls around one mirror pair live on opposite sides
    _, table, gt, rows = mirror_gt
    wide = sorted(gt, key=lambda p: rows[p.source][p.destination])[-1]
    src, dst = extract_regions([wide], rows, 0.12, diameter=table.diameter)
    assert np.intersect1d(src, dst).size == 0
    x = blob.vertices[:, 0]
    assert np.sign(x[src][np.abs(x[src]) > 1e-9]).std() == 0  # one side only


def test_empty_cluster_rejected(mirror_gt):
    _, table, _, rows = mirror_gt
    with pytest.raises(ValueError):
        extract_regions([], rows, 0.2, diameter=table.diameter)
    with pytest.raises(ValueError):
        extract_regions([vpair(1, 2)], rows, 1.5, diameter=table.diameter)


def test_identity_seeds_give_identity_map(blob, blob_basis, blob_wks, blob_samples):
    pairs = [vpair(int(v), int(v)) for v in blob_samples.vertex_ids[:12]]
    everything = np.arange(blob.vertex_count)
    fm = estimate_map(blob_basis, blob_wks, pairs, (everything, everything), k_f=40)
    off = fm.C - np.diag(np.diag(fm.C))
    assert np.linalg.norm(off) <= 1e-3 * np.linalg.norm(fm.C)
    assert np.abs(np.diag(fm.C) - 1.0).max() <= 1e-3


def test_mirror_map_orthogonal_like(blob_basis, blob_perm, gt_mirror_map):
    fm = gt_mirror_map
    k_f = fm.k_f
    assert np.linalg.norm(fm.C.T @ fm.C - np.eye(k_f)) / np.sqrt(k_f) <= 0.1
    # oracle: exact permutation pushforward
    c_gt = pushforward_map(blob_basis, blob_perm, k_f)
    assert np.abs(np.abs(fm.C) - np.abs(c_gt)).max() <= 0.05


def test_column_norms_bounded(gt_mirror_map):
    norms = np.linalg.norm(gt_mirror_map.C, axis=0)
    assert norms.max() <= 1.0 + 1e-3


def test_rank_deficient_single_pair(blob, blob_basis, mirror_gt):
    _, table, gt, rows = mirror_gt
    everything = np.arange(blob.vertex_count)
    with pytest.raises(RankDeficient):
        estimate_map(
            blob_basis, None, [gt[0]], (everything, everything),
            k_f=40, diameter=table.diameter, rows=rows,
        )


def test_identity_map_correspondence_is_identity(blob, blob_basis):
    everything = np.arange(blob.vertex_count)
    fm = symmap.FunctionalMap(
        C=np.eye(40), k_f=40, seed_pairs=(),
        region_source=everything, region_destination=everything,
    )
    corr = recover_correspondence(fm, blob_basis)
    assert np.array_equal(corr.source_ids, corr.target_ids)
    assert corr.residuals.max() <= 1e-6


def test_mirror_correspondence_accuracy(blob, blob_basis, blob_perm, gt_mirror_map):
    corr = recover_correspondence(gt_mirror_map, blob_basis)
    hits = sum(
        1
        for s, t in zip(corr.source_ids, corr.target_ids)
        if t == blob_perm[s] or t in blob.one_ring(blob_perm[s])
    )
    assert hits / corr.source_ids.size >= 0.95
    # every source vertex appears exactly once
    assert len(np.unique(corr.source_ids)) == corr.source_ids.size


def test_intrinsic_distances_preserved(blob_basis, blob_perm, gt_mirror_map):
    # Eq-style invariant: the recovered map preserves pairwise distances
    corr = recover_correspondence(gt_mirror_map, blob_basis)
    mapping = corr.as_dict()
    rng = np.random.default_rng(12)
    src = rng.choice(corr.source_ids, size=60, replace=False)
    rows = biharmonic_rows(blob_basis, src)
    diam = rows.max()
    # direct evaluation: |d(p, q) - d(T(p), T(q))| / diameter
    residuals = []
    for i, p in enumerate(src):
        q = int(rng.choice(corr.source_ids))
        tp, tq = mapping[int(p)], mapping[q]
        d_pq = rows[i][q]
        d_t = symmap.biharmonic_distance(blob_basis, tp, tq)
        residuals.append(abs(d_pq - d_t) / diam)
    assert np.median(residuals) <= 0.02


def test_seed_pairs_land_on_destination(blob, blob_basis, blob_perm, gt_mirror_map):
    corr = recover_correspondence(gt_mirror_map, blob_basis)
    mapping = corr.as_dict()
    for p in gt_mirror_map.seed_pairs:
        target = mapping[p.source]
        assert target == p.destination or target in blob.one_ring(p.destination)


def test_estimate_map_deterministic(blob_basis, blob_wks, mirror_gt):
    _, table, gt, rows = mirror_gt
    regions = extract_regions(gt, rows, 0.25, diameter=table.diameter)
    a = estimate_map(blob_basis, blob_wks, gt, regions, k_f=30,
                     diameter=table.diameter, rows=rows)
    b = estimate_map(blob_basis, blob_wks, gt, regions, k_f=30,
                     diameter=table.diameter, rows=rows)
    assert np.array_equal(a.C, b.C)


def test_refine_map_recovers_from_perturbation(blob, blob_basis, blob_perm, gt_mirror_map):
    rng = np.random.default_rng(3)
    noisy = gt_mirror_map.C + 0.08 * rng.standard_normal(gt_mirror_map.C.shape)
    fm = symmap.FunctionalMap(
        C=noisy, k_f=gt_mirror_map.k_f, seed_pairs=gt_mirror_map.seed_pairs,
        region_source=gt_mirror_map.region_source,
        region_destination=gt_mirror_map.region_destination,
    )
    refined, corr = refine_map(fm, blob_basis, iterations=6)
    hits = sum(
        1
        for s, t in zip(corr.source_ids, corr.target_ids)
        if t == blob_perm[s] or t in blob.one_ring(blob_perm[s])
    )
    assert hits / corr.source_ids.size >= 0.95


def test_resolve_flip_canonicalizes(blob, blob_basis, blob_perm, mirror_gt):
    samples, table, gt, rows = mirror_gt
    anchors = [int(v) for v in samples.vertex_ids if blob.vertices[v, 0] < -0.3]
    anchor = anchors[0]
    mixed = [p if i % 2 == 0 else p.reversed() for i, p in enumerate(gt)]
    canon = resolve_flip(mixed, table, anchor)
    assert canon == resolve_flip(canon, table, anchor)  # idempotent
    # both orientations of a pair canonicalize identically
    one = resolve_flip([gt[0]], table, anchor)
    two = resolve_flip([gt[0].reversed()], table, anchor)
    assert one == two
    # all sources land on the anchor's side of the plane
    side = np.sign(blob.vertices[:, 0])
    for p in canon:
        assert side[p.source] == side[anchor]


def test_count_orientation_flips(blob, mirror_gt):
    samples, table, gt, _ = mirror_gt
    sides = np.sign(blob.vertices[:, 0]).astype(np.int64)
    anchors = [int(v) for v in samples.vertex_ids if sides[v] != 0]
    anchor = anchors[0]
    mixed = [p if i % 2 == 0 else p.reversed() for i, p in enumerate(gt)]
    canon = resolve_flip(mixed, table, anchor)
    assert count_orientation_flips(canon, sides, anchor) == 0
    assert count_orientation_flips(mixed, sides, anchor) > 0
    on_plane = int(np.nonzero(sides == 0)[0][0])
    with pytest.raises(ValueError):
        count_orientation_flips(canon, sides, on_plane)


def test_group_pairs_mutual_voting(mirror_gt):
    _, table, gt, _ = mirror_gt
    clusters = group_pairs(gt, table, eps=0.02)
    assert len(clusters) == 1  # exact pairs all mutually vote
    assert sum(len(c) for c in clusters) == len(gt)


def test_empty_region_error(blob_basis):
    fm = symmap.FunctionalMap(
        C=np.eye(10), k_f=10, seed_pairs=(),
        region_source=np.array([], dtype=np.int64),
        region_destination=np.array([], dtype=np.int64),
    )
    with pytest.raises(EmptyRegion):
        recover_correspondence(fm, blob_basis)
