"""Binary on-disk cache for spectral bases, descriptors and sample sets.

Cache entries are NumPy ``.npz`` archives keyed by the mesh content hash plus
the parameters that determine the object, so a repeated CLI invocation on the
same mesh skips the eigensolve and distance computation.  The directory
resolves from, in order: an explicit argument, the ``SYMMAP_CACHE``
environment variable, and ``~/.cache/symmap``.
"""

import os
from pathlib import Path

import numpy as np

from .descriptors import BiharmonicTable, SampleSet, WksField
from .spectral import SpectralBasis

ENV_CACHE_DIR = "SYMMAP_CACHE"


def cache_dir(explicit=None):
    if explicit:
        path = Path(explicit)
    elif os.environ.get(ENV_CACHE_DIR):
        path = Path(os.environ[ENV_CACHE_DIR])
    else:
        path = Path.home() / ".cache" / "symmap"
    path.mkdir(parents=True, exist_ok=True)
    return path


def _path(directory, kind, mesh_hash, tag):
    return Path(directory) / f"{kind}_{mesh_hash[:32]}_{tag}.npz"


def save_basis(basis, mesh_hash, directory):
    path = _path(directory, "basis", mesh_hash, f"k{basis.k}")
    np.savez(
        path,
        eigenvalues=basis.eigenvalues,
        eigenvectors=basis.eigenvectors,
        vertex_masses=basis.vertex_masses,
        k=basis.k,
        mesh_hash=mesh_hash,
    )
    return path


def load_basis(mesh_hash, k, directory):
    path = _path(directory, "basis", mesh_hash, f"k{k}")
    if not path.exists():
        return None
    with np.load(path, allow_pickle=False) as data:
        if str(data["mesh_hash"]) != mesh_hash or int(data["k"]) != k:
            return None
        vals = data["eigenvalues"]
        vecs = data["eigenvectors"]
        masses = data["vertex_masses"]
    for arr in (vals, vecs, masses):
        arr.setflags(write=False)
    return SpectralBasis(
        eigenvalues=vals, eigenvectors=vecs, vertex_masses=masses,
        k=k, mesh_hash=mesh_hash,
    )


def save_wks(field, mesh_hash, k, directory):
    tag = f"k{k}_d{field.signatures.shape[1]}_{field.sigma:.6g}"
    path = _path(directory, "wks", mesh_hash, tag)
    np.savez(path, energies=field.energies, sigma=field.sigma,
             signatures=field.signatures)
    return path


def load_wks(mesh_hash, k, bands, sigma, directory):
    tag = f"k{k}_d{bands}_{sigma:.6g}"
    path = _path(directory, "wks", mesh_hash, tag)
    if not path.exists():
        return None
    with np.load(path, allow_pickle=False) as data:
        sig = data["signatures"]
        energies = data["energies"]
        s = float(data["sigma"])
    sig.setflags(write=False)
    return WksField(energies=energies, sigma=s, signatures=sig)


def save_samples(samples, mesh_hash, k, seed, directory):
    tag = f"k{k}_n{samples.vertex_ids.size}_s{seed}"
    path = _path(directory, "fps", mesh_hash, tag)
    np.savez(path, vertex_ids=samples.vertex_ids, coverage_radii=samples.coverage_radii)
    return path


def load_samples(mesh_hash, k, n, seed, directory):
    path = _path(directory, "fps", mesh_hash, f"k{k}_n{n}_s{seed}")
    if not path.exists():
        return None
    with np.load(path, allow_pickle=False) as data:
        return SampleSet(
            vertex_ids=data["vertex_ids"], coverage_radii=data["coverage_radii"]
        )


def save_table(table, mesh_hash, k, seed, directory):
    tag = f"k{k}_n{table.sample_ids.size}_s{seed}"
    path = _path(directory, "bdm", mesh_hash, tag)
    payload = {
        "sample_ids": table.sample_ids,
        "distances": table.distances,
    }
    if table.full_rows is not None:
        payload["full_rows"] = table.full_rows
    np.savez(path, **payload)
    return path


def load_table(mesh_hash, k, n, seed, directory):
    path = _path(directory, "bdm", mesh_hash, f"k{k}_n{n}_s{seed}")
    if not path.exists():
        return None
    with np.load(path, allow_pickle=False) as data:
        rows = data["full_rows"] if "full_rows" in data.files else None
        return BiharmonicTable(
            sample_ids=data["sample_ids"], distances=data["distances"], full_rows=rows
        )
