"""symmap: detection, mapping and characterization of intrinsic symmetries
on 2-manifold triangle meshes.

The pipeline samples surface points farthest-first in biharmonic distance
space, pairs up points with matching wave kernel signatures, lets the pair
population vote on global intrinsic-distance consistency, encodes each
surviving symmetry as a functional map in the Laplace-Beltrami eigenbasis,
and finally scores and clusters the maps by their off-diagonal complexity.
"""

from . import errors
from .descriptors import (
    BiharmonicTable,
    SampleSet,
    WksField,
    all_pairs_biharmonic,
    biharmonic_distance,
    biharmonic_rows,
    compute_wks,
    farthest_point_sample,
    pairwise_wks_gaps,
    table_to_csv,
    wks_distance,
)
from .fmap import (
    Correspondence,
    FunctionalMap,
    count_orientation_flips,
    estimate_map,
    extract_regions,
    group_pairs,
    recover_correspondence,
    refine_map,
    resolve_flip,
)
from .mesh import MeshStats, TriangleMesh, mesh_stats
from .meshio import export_colored_mesh, load_mesh, save_mesh
from .pipeline import (
    DetectResult,
    PipelineConfig,
    RepeatabilityReport,
    detect,
    evaluate_repeatability,
    perturb_mesh,
    profile_table,
    write_artifacts,
    write_repeatability,
)
from .primitives import (
    generate_primitive,
    icosphere,
    mirror_matrix,
    mirror_tube,
    mirrored_composite,
    rotation_z,
    star_prism,
    vertex_permutation_under_transform,
)
from .spectral import (
    LaplacianPair,
    SpectralBasis,
    build_laplacian,
    compute_eigenbasis,
    project,
    reconstruct,
)
from .symmetry_space import (
    SymmetryRecord,
    WeightMatrix,
    build_weight_matrix,
    cluster_maps,
    silhouette_sweep,
    symmetry_distance,
    symmetry_score,
)
from .voting import (
    CandidatePair,
    VotedPair,
    distance_vote,
    generate_good_voters,
    run_voting,
    wks_gap_threshold,
)

__version__ = "0.1.0"

__all__ = [
    "BiharmonicTable",
    "CandidatePair",
    "Correspondence",
    "DetectResult",
    "FunctionalMap",
    "LaplacianPair",
    "MeshStats",
    "PipelineConfig",
    "RepeatabilityReport",
    "SampleSet",
    "SpectralBasis",
    "SymmetryRecord",
    "TriangleMesh",
    "VotedPair",
    "WeightMatrix",
    "WksField",
    "all_pairs_biharmonic",
    "biharmonic_distance",
    "biharmonic_rows",
    "build_laplacian",
    "build_weight_matrix",
    "cluster_maps",
    "compute_eigenbasis",
    "compute_wks",
    "count_orientation_flips",
    "detect",
    "distance_vote",
    "errors",
    "estimate_map",
    "evaluate_repeatability",
    "export_colored_mesh",
    "extract_regions",
    "farthest_point_sample",
    "generate_good_voters",
    "generate_primitive",
    "group_pairs",
    "icosphere",
    "load_mesh",
    "mesh_stats",
    "mirror_matrix",
    "mirror_tube",
    "mirrored_composite",
    "pairwise_wks_gaps",
    "perturb_mesh",
    "profile_table",
    "project",
    "reconstruct",
    "recover_correspondence",
    "refine_map",
    "resolve_flip",
    "rotation_z",
    "run_voting",
    "save_mesh",
    "silhouette_sweep",
    "star_prism",
    "symmetry_distance",
    "symmetry_score",
    "table_to_csv",
    "vertex_permutation_under_transform",
    "wks_distance",
    "wks_gap_threshold",
    "write_artifacts",
    "write_repeatability",
]
