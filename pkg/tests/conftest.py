import os
import tempfile

import numpy as np
import pytest

import symmap

# every test run uses an isolated cache directory
_CACHE = tempfile.mkdtemp(prefix="symmap-test-cache-")
os.environ["SYMMAP_CACHE"] = _CACHE


@pytest.fixture(scope="session")
def ico2():
    return symmap.icosphere(2)


@pytest.fixture(scope="session")
def ico2_basis(ico2):
    return symmap.compute_eigenbasis(symmap.build_laplacian(ico2), 150)


@pytest.fixture(scope="session")
def ico3():
    return symmap.icosphere(3)


@pytest.fixture(scope="session")
def ico3_basis(ico3):
    return symmap.compute_eigenbasis(symmap.build_laplacian(ico3), 150)


@pytest.fixture(scope="session")
def blob():
    """Mirror-symmetric composite fixture (~1200 vertices)."""
    return symmap.mirrored_composite()


@pytest.fixture(scope="session")
def blob_perm(blob):
    perm, _ = symmap.vertex_permutation_under_transform(blob, symmap.mirror_matrix(0))
    return perm


@pytest.fixture(scope="session")
def blob_basis(blob):
    return symmap.compute_eigenbasis(symmap.build_laplacian(blob), 150)


@pytest.fixture(scope="session")
def blob_wks(blob_basis):
    return symmap.compute_wks(blob_basis)


@pytest.fixture(scope="session")
def blob_samples(blob_basis):
    return symmap.farthest_point_sample(blob_basis, 50, 42)


@pytest.fixture(scope="session")
def blob_table(blob_basis, blob_samples):
    return symmap.all_pairs_biharmonic(blob_basis, blob_samples, cache_rows=True)


@pytest.fixture(scope="session")
def star():
    return symmap.star_prism(3)


def mirror_closed_samples(basis, perm, n, seed):
    """FPS sample set extended with the mirror partner of every sample."""
    base = symmap.farthest_point_sample(basis, n, seed)
    ids = list(dict.fromkeys(
        int(v) for s in base.vertex_ids for v in (s, perm[s])
    ))
    ids = np.array(sorted(ids), dtype=np.int64)
    return symmap.SampleSet(vertex_ids=ids, coverage_radii=np.full(ids.size, np.inf))


@pytest.fixture(scope="session")
def star_planted_maps(star):
    """Maps planted from the star's three symmetry types (four instances
    each, estimated from disjoint ground-truth seed subsets), plus labels."""
    basis = symmap.compute_eigenbasis(symmap.build_laplacian(star), 120)
    wks = symmap.compute_wks(basis)
    transforms = {
        "front_back": np.diag([1.0, 1.0, -1.0]),
        "mirror": symmap.mirror_matrix(0),
        "rotation": symmap.rotation_z(120.0),
    }
    maps, labels = [], []
    samples = symmap.farthest_point_sample(basis, 36, seed=13)
    table = symmap.all_pairs_biharmonic(basis, samples, cache_rows=True)
    rows = {int(x): table.full_rows[i] for i, x in enumerate(table.sample_ids)}
    for label, name in enumerate(sorted(transforms)):
        perm, _ = symmap.vertex_permutation_under_transform(star, transforms[name])
        pairs = [
            symmap.VotedPair(source=int(v), destination=int(perm[v]), votes=0,
                             support_ratio=1.0, supporting_pairs=())
            for v in samples.vertex_ids if int(perm[v]) != int(v)
        ]
        extra = sorted({p.destination for p in pairs} - set(rows))
        if extra:
            more = symmap.biharmonic_rows(basis, np.array(extra, dtype=np.int64))
            rows.update({vid: more[i] for i, vid in enumerate(extra)})
        for inst in range(4):
            subset = pairs[inst::4]
            regions = symmap.extract_regions(subset, rows, 0.3, diameter=table.diameter)
            fm = symmap.estimate_map(basis, wks, subset, regions, k_f=40,
                                     diameter=table.diameter, rows=rows)
            maps.append(fm)
            labels.append(label)
    return maps, np.array(labels)


def adjusted_rand_index(a, b):
    """Pair-counting adjusted Rand index (oracle implementation)."""
    from scipy.special import comb

    a, b = np.asarray(a), np.asarray(b)
    classes, class_idx = np.unique(a, return_inverse=True)
    clusters, cluster_idx = np.unique(b, return_inverse=True)
    table = np.zeros((classes.size, clusters.size), dtype=np.int64)
    for i, j in zip(class_idx, cluster_idx):
        table[i, j] += 1
    sum_comb_c = comb(table.sum(axis=1), 2).sum()
    sum_comb_k = comb(table.sum(axis=0), 2).sum()
    sum_comb = comb(table, 2).sum()
    total = comb(a.size, 2)
    expected = sum_comb_c * sum_comb_k / total
    max_index = 0.5 * (sum_comb_c + sum_comb_k)
    return float((sum_comb - expected) / (max_index - expected))


def ground_truth_pairs(sample_ids, perm):
    """Unordered exact mirror pairs within a sample set (off-plane only)."""
    sample_set = set(int(v) for v in sample_ids)
    pairs = []
    for v in sorted(sample_set):
        m = int(perm[v])
        if m == v or m not in sample_set or m < v:
            continue
        pairs.append(symmap.VotedPair(
            source=v, destination=m, votes=0, support_ratio=1.0, supporting_pairs=()
        ))
    return pairs
