"""Command line interface.

Subcommands: info, spectrum, sample, detect, eval-repeatability, perturb,
profile.  Exit codes: 0 ok, 2 input error, 3 numerical failure.  The cache
directory resolves from --cache-dir, then the SYMMAP_CACHE environment
variable, then ~/.cache/symmap.

Heavy imports happen after argument parsing so that --threads can cap the
BLAS worker count through the environment before NumPy loads.
"""

import argparse
import json
import os
import sys

_THREAD_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)


def _apply_threads(argv):
    if "--threads" in argv:
        idx = argv.index("--threads")
        if idx + 1 < len(argv):
            for var in _THREAD_VARS:
                os.environ.setdefault(var, argv[idx + 1])


def _add_config_flags(parser):
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("--mesh", help="input mesh (off/obj/ply)")
    parser.add_argument("--k", type=int, help="eigenbasis size (default min(150, V-2))")
    parser.add_argument("--samples", type=int, dest="n_samples", help="sample count")
    parser.add_argument("--wks-bands", type=int, dest="wks_bands")
    parser.add_argument("--wks-sigma-factor", type=float, dest="wks_sigma_factor")
    parser.add_argument("--t-wks-percentile", type=float, dest="t_wks_percentile")
    parser.add_argument("--eps", type=float)
    parser.add_argument("--min-support", type=float, dest="min_support")
    parser.add_argument("--region-radius", type=float, dest="region_radius")
    parser.add_argument("--kf", type=int, dest="k_f")
    parser.add_argument("--mu", type=float)
    parser.add_argument("--indicator-width", type=float, dest="indicator_width")
    parser.add_argument("--gaussian-width", type=float, dest="gaussian_width")
    parser.add_argument("--k-groups", type=int, dest="k_groups")
    parser.add_argument("--no-flip-canonicalization", action="store_true")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", dest="output_dir", help="output directory")
    parser.add_argument("--cache-dir", dest="cache_dir")
    parser.add_argument("--threads", type=int, help="cap BLAS worker threads")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="symmap",
        description="Detect, map and characterize intrinsic symmetries of triangle meshes.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("info", help="validate a mesh and print its stats")
    p.add_argument("mesh_path")

    p = sub.add_parser("spectrum", help="eigenvalues of the Laplace-Beltrami operator")
    _add_config_flags(p)
    p.add_argument("mesh_path", nargs="?")

    p = sub.add_parser("sample", help="farthest-point sample in biharmonic space")
    _add_config_flags(p)
    p.add_argument("mesh_path", nargs="?")

    p = sub.add_parser("detect", help="run the full symmetry detection pipeline")
    _add_config_flags(p)
    p.add_argument("mesh_path", nargs="?")

    p = sub.add_parser("eval-repeatability", help="detection repeatability under perturbation")
    _add_config_flags(p)
    p.add_argument("mesh_path", nargs="?")
    p.add_argument("--kind", required=True,
                   choices=["noise", "scale", "micro_holes", "isometry_bend"])
    p.add_argument("--param", type=float, required=True)
    p.add_argument("--overlap-grid", default="0.5:1.0:0.05",
                   help="start:stop:step overlap thresholds")

    p = sub.add_parser("perturb", help="write a perturbed copy of a mesh")
    p.add_argument("mesh_path")
    p.add_argument("--kind", required=True,
                   choices=["noise", "scale", "micro_holes", "isometry_bend"])
    p.add_argument("--param", type=float, required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True, dest="out_path")

    p = sub.add_parser("profile", help="per-stage timing of a detection run")
    _add_config_flags(p)
    p.add_argument("mesh_path", nargs="?")
    return parser


def _resolve_config(args):
    from .errors import InvalidSpec
    from .pipeline import PipelineConfig

    data = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidSpec(f"cannot read config {args.config}: {exc}") from exc
    fields = (
        "mesh", "k", "n_samples", "wks_bands", "wks_sigma_factor",
        "t_wks_percentile", "eps", "min_support", "region_radius", "k_f",
        "mu", "indicator_width", "gaussian_width", "k_groups", "seed",
        "output_dir", "cache_dir", "threads",
    )
    for name in fields:
        value = getattr(args, name, None)
        if value is not None:
            data[name] = value
    if getattr(args, "mesh_path", None):
        data["mesh"] = args.mesh_path
    if getattr(args, "no_flip_canonicalization", False):
        data["flip_canonicalization"] = False
    if not data.get("mesh"):
        raise InvalidSpec("no mesh given (positional path, --mesh, or config file)")
    return PipelineConfig.from_dict(data)


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    _apply_threads(argv)
    args = _build_parser().parse_args(argv)

    import logging

    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    from .errors import MeshError, NumericalError, SymmapError
    from .pipeline import StageError

    try:
        return _dispatch(args)
    except StageError as exc:
        print(f"error in {exc.stage}: {exc.cause}", file=sys.stderr)
        return 3 if isinstance(exc.cause, NumericalError) else 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (MeshError, SymmapError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args):
    import dataclasses

    import numpy as np

    from . import cache as cache_mod
    from .mesh import mesh_stats
    from .meshio import load_mesh, save_mesh
    from .pipeline import (
        detect,
        evaluate_repeatability,
        perturb_mesh,
        profile_table,
        write_artifacts,
        write_repeatability,
        _dump_json,
        _jsonable,
    )
    from .spectral import build_laplacian, compute_eigenbasis

    if args.command == "info":
        stats = mesh_stats(load_mesh(args.mesh_path))
        print(json.dumps(_jsonable(dataclasses.asdict(stats)), indent=2, sort_keys=True))
        return 0

    if args.command == "perturb":
        mesh = load_mesh(args.mesh_path)
        out = perturb_mesh(mesh, args.kind, args.param, seed=args.seed)
        save_mesh(out, args.out_path)
        print(args.out_path)
        return 0

    config = _resolve_config(args)

    if args.command == "spectrum":
        mesh = load_mesh(config.mesh)
        k = config.k if config.k is not None else min(150, mesh.vertex_count - 2)
        cdir = cache_mod.cache_dir(config.cache_dir)
        basis = cache_mod.load_basis(mesh.content_hash(), k, cdir)
        if basis is None:
            basis = compute_eigenbasis(build_laplacian(mesh), k)
        print(json.dumps(_jsonable({"k": k, "eigenvalues": basis.eigenvalues}),
                         indent=2, sort_keys=True))
        return 0

    if args.command == "sample":
        from .descriptors import farthest_point_sample

        mesh = load_mesh(config.mesh)
        k = config.k if config.k is not None else min(150, mesh.vertex_count - 2)
        cdir = cache_mod.cache_dir(config.cache_dir)
        basis = cache_mod.load_basis(mesh.content_hash(), k, cdir)
        if basis is None:
            basis = compute_eigenbasis(build_laplacian(mesh), k)
        samples = farthest_point_sample(basis, config.n_samples, config.seed)
        print(json.dumps(_jsonable({
            "vertex_ids": samples.vertex_ids,
            "coverage_radii": samples.coverage_radii,
        }), indent=2, sort_keys=True))
        return 0

    if args.command == "detect":
        result = detect(config)
        outdir = write_artifacts(result)
        print(outdir)
        return 0

    if args.command == "eval-repeatability":
        start, stop, step = (float(tok) for tok in args.overlap_grid.split(":"))
        overlaps = list(np.round(np.arange(start, stop + step / 2, step), 6))
        report = evaluate_repeatability(config, args.kind, args.param, overlaps=overlaps)
        outdir = write_repeatability(report, config.output_dir)
        for o, f in zip(report.overlaps, report.fractions):
            print(f"overlap {o:.2f}: repeatability {f:.3f}")
        print(outdir)
        return 0

    if args.command == "profile":
        result = detect(config)
        write_artifacts(result)
        table = profile_table(result)
        print(f"points      {table['points']}")
        for key in ("biharmonic", "fmap", "extraction", "total", "preprocess"):
            print(f"{key:<11} {table[key]:.3f} s")
        print(f"distance fraction of total: {table['distance_fraction']:.2f}")
        if not table["distance_dominant"]:
            print("note: distance stage was not the largest stage on this run")
        _dump_json(table, f"{config.output_dir}/profile.json")
        return 0

    raise ValueError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
