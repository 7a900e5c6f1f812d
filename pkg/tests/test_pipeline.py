import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

import symmap
from symmap.errors import InvalidSpec, ParseError
from symmap.pipeline import (
    PipelineConfig,
    StageError,
    detect,
    evaluate_repeatability,
    perturb_mesh,
    profile_table,
    write_artifacts,
)


@pytest.fixture(scope="module")
def blob_detect(blob):
    return detect(PipelineConfig(mesh="(memory)"), mesh=blob)


def tree_hashes(root, skip=("timings.json",)):
    out = {}
    for path in sorted(Path(root).rglob("*")):
        if path.is_file() and path.name not in skip:
            out[str(path.relative_to(root))] = hashlib.sha256(path.read_bytes()).hexdigest()
    return out


def test_config_validation():
    with pytest.raises(InvalidSpec):
        PipelineConfig(mesh="m", eps=0.7).validate()
    with pytest.raises(InvalidSpec):
        PipelineConfig(mesh="m", t_wks_percentile=0.0).validate()
    with pytest.raises(InvalidSpec):
        PipelineConfig(mesh="m", n_samples=0).validate()
    with pytest.raises(InvalidSpec):
        PipelineConfig.from_dict({"mesh": "m", "bogus_knob": 1})
    cfg = PipelineConfig.from_dict({"mesh": "m", "eps": 0.03})
    assert cfg.eps == 0.03
    assert cfg.seed == 42


def test_detect_finds_mirror_map(blob, blob_perm, blob_detect):
    # defaults on the mirror fixture: at least one near-diagonal map whose
    # dense correspondence matches the planted reflection
    res = blob_detect
    assert res.maps
    weights = symmap.build_weight_matrix(
        res.derived["k_f_effective"], res.derived["gaussian_width_effective"]
    )
    winners = 0
    for fm, corr in zip(res.maps, res.correspondences):
        score = symmap.symmetry_score(fm, weights)
        hits = sum(
            1
            for s, t in zip(corr.source_ids, corr.target_ids)
            if t == blob_perm[s] or t in blob.one_ring(blob_perm[s])
        )
        if score <= 0.1 and hits / corr.source_ids.size >= 0.95:
            winners += 1
    assert winners >= 1


def test_detect_on_sphere_completes(ico2):
    res = detect(PipelineConfig(mesh="(memory)"), mesh=ico2)
    assert len(res.voted) >= 10  # the sphere pairs up everywhere
    assert res.derived["n_candidates"] > len(res.voted)
    assert res.maps


def test_detect_missing_mesh(tmp_path):
    cfg = PipelineConfig(mesh=str(tmp_path / "missing.off"))
    with pytest.raises(StageError) as err:
        detect(cfg)
    assert err.value.stage == "load"
    assert isinstance(err.value.cause, ParseError)


def test_artifact_tree(tmp_path, blob_detect):
    out = write_artifacts(blob_detect, tmp_path / "run")
    names = {p.name for p in out.iterdir()}
    assert {"manifest.json", "pairs.json", "samples.json", "scores.csv",
            "clusters.json", "samples.ply", "timings.json", "maps"} <= names
    manifest = json.loads((out / "manifest.json").read_text())
    derived = manifest["derived"]
    for key in ("t_wks", "biharmonic_diameter", "anchor", "k_effective",
                "k_f_effective", "gaussian_width_effective", "k_groups_effective"):
        assert key in derived
    pairs = json.loads((out / "pairs.json").read_text())
    assert pairs and {"source", "destination", "votes", "support_ratio",
                      "supporting_pairs"} <= set(pairs[0])
    scores = (out / "scores.csv").read_text().splitlines()
    assert scores[0] == "map_id,score,cluster_label"
    assert len(scores) == 1 + len(blob_detect.maps)
    map_files = sorted((out / "maps").glob("map_???.json"))
    assert len(map_files) == len(blob_detect.maps)
    payload = json.loads(map_files[0].read_text())
    assert {"k_f", "coefficients", "seed_pairs", "region_source",
            "region_destination", "score"} <= set(payload)
    assert len(payload["coefficients"]) == payload["k_f"] ** 2


def test_detect_deterministic_artifacts(tmp_path, blob):
    cfg = PipelineConfig(mesh="(memory)", output_dir="out")
    a = write_artifacts(detect(cfg, mesh=blob), tmp_path / "a")
    b = write_artifacts(detect(cfg, mesh=blob), tmp_path / "b")
    assert tree_hashes(a) == tree_hashes(b)
    assert (Path(a) / "timings.json").exists()


def test_perturb_noise_zero_is_identity(blob):
    same = perturb_mesh(blob, "noise", 0.0, seed=1)
    assert same is blob


def test_perturb_scale_invariance_of_detection(blob, blob_detect):
    scaled = perturb_mesh(blob, "scale", 2.0)
    res = detect(PipelineConfig(mesh="(memory)"), mesh=scaled)
    base_pairs = [(p.source, p.destination, p.votes) for p in blob_detect.voted]
    scaled_pairs = [(p.source, p.destination, p.votes) for p in res.voted]
    assert base_pairs == scaled_pairs


def test_perturb_micro_holes(blob):
    holed = perturb_mesh(blob, "micro_holes", 5, seed=2)
    assert holed.vertex_count == blob.vertex_count
    assert holed.face_count == blob.face_count - 5
    assert holed.boundary_edge_count == 15


def test_perturb_bend_keeps_mirror_map(blob):
    bent = perturb_mesh(blob, "isometry_bend", 30.0)
    assert bent.vertex_count == blob.vertex_count
    res = detect(PipelineConfig(mesh="(memory)"), mesh=bent)
    weights = symmap.build_weight_matrix(
        res.derived["k_f_effective"], res.derived["gaussian_width_effective"]
    )
    best = min(symmap.symmetry_score(m, weights) for m in res.maps)
    assert best <= 0.2


def test_perturb_validation(blob):
    with pytest.raises(InvalidSpec):
        perturb_mesh(blob, "scale", 0.0)
    with pytest.raises(InvalidSpec):
        perturb_mesh(blob, "warp", 1.0)
    with pytest.raises(InvalidSpec):
        perturb_mesh(blob, "micro_holes", 0)


def test_repeatability_identity(blob):
    cfg = PipelineConfig(mesh="(memory)")
    report = evaluate_repeatability(cfg, "noise", 0.0, mesh=blob)
    assert all(f == 1.0 for f in report.fractions)
    assert report.base_pair_count == report.perturbed_pair_count


def test_repeatability_monotone_in_overlap(blob):
    cfg = PipelineConfig(mesh="(memory)")
    report = evaluate_repeatability(cfg, "noise", 0.005, mesh=blob)
    assert all(0.0 <= f <= 1.0 for f in report.fractions)
    assert all(
        a >= b - 1e-12 for a, b in zip(report.fractions, report.fractions[1:])
    )


def test_extreme_noise_degrades(blob):
    cfg = PipelineConfig(mesh="(memory)")
    small = evaluate_repeatability(cfg, "noise", 0.005, mesh=blob)
    big = evaluate_repeatability(cfg, "noise", 0.10, mesh=blob)
    assert all(b <= s + 1e-12 for b, s in zip(big.fractions, small.fractions))
    assert sum(big.fractions) < sum(small.fractions)


def test_profile_table_shape(blob_detect):
    table = profile_table(blob_detect)
    assert table["points"] == blob_detect.mesh.vertex_count
    assert table["total"] == pytest.approx(
        table["biharmonic"] + table["fmap"] + table["extraction"]
    )
    assert 0.0 <= table["distance_fraction"] <= 1.0


def test_warm_cache_speeds_distance_stage(blob, tmp_path):
    cfg = PipelineConfig(mesh="(memory)", cache_dir=str(tmp_path / "cache"))
    cold = detect(cfg, mesh=blob)
    warm = detect(cfg, mesh=blob)
    assert warm.cache_hits["distance_table"]
    cold_d = sum(cold.timings.get(s, 0.0) for s in ("fps", "distance_table"))
    warm_d = sum(warm.timings.get(s, 0.0) for s in ("fps", "distance_table"))
    assert warm_d < cold_d


def test_distances_csv_artifact(tmp_path, blob_detect):
    out = write_artifacts(blob_detect, tmp_path / "csvrun")
    rows = (out / "distances.csv").read_text().splitlines()
    n = blob_detect.samples.vertex_ids.size
    assert len(rows) == n + 1
    header = rows[0].split(",")
    assert header[0] == "vertex"
    assert len(header) == n + 1
    first = rows[1].split(",")
    assert float(first[1]) == 0.0
    clusters = json.loads((out / "clusters.json").read_text())
    if clusters["k_groups"]:
        k_f = blob_detect.derived["k_f_effective"]
        assert len(clusters["centroids"]) == clusters["k_groups"]
        assert len(clusters["centroids"][0]) == k_f * k_f


def test_cache_dir_resolution(tmp_path, monkeypatch):
    from symmap import cache

    explicit = tmp_path / "explicit"
    assert cache.cache_dir(explicit) == explicit
    monkeypatch.setenv(cache.ENV_CACHE_DIR, str(tmp_path / "from-env"))
    assert cache.cache_dir(None) == tmp_path / "from-env"
