"""Cotangent Laplace-Beltrami operator and its low-frequency eigenbasis.

The stiffness matrix uses the cotangent scheme (one cotangent term per
incident face, so boundary edges get a single term); the mass matrix is the
lumped one-third barycentric vertex area.  The generalized eigenproblem
``stiffness @ phi = lambda * mass @ phi`` is solved with shift-invert around
zero because the smallest eigenvalues cluster near zero.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from .errors import (
    ConvergenceFailure,
    InsufficientRank,
    LengthMismatch,
    NumericalDegeneracy,
)

_COT_LIMIT = 1e10
_EIG_CLAMP_REL = 1e-10
_DENSE_CUTOFF = 600
_ARPACK_SEED = 987654321  # fixed Lanczos start vector => reproducible solves


@dataclass(frozen=True)
class LaplacianPair:
    """Sparse symmetric cotangent stiffness and diagonal lumped mass."""

    stiffness: sparse.csr_matrix
    mass: np.ndarray  # diagonal entries, strictly positive

    @property
    def n(self):
        return self.mass.shape[0]

    def mass_matrix(self):
        return sparse.diags(self.mass)


@dataclass(frozen=True)
class SpectralBasis:
    """First ``k`` eigenpairs of the Laplace-Beltrami operator.

    ``eigenvalues`` ascend and are mass-orthonormal:
    ``eigenvectors.T @ diag(vertex_masses) @ eigenvectors == I``.
    Each eigenvector is scaled so its entry of largest magnitude is positive,
    which pins the sign and makes downstream maps deterministic.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    vertex_masses: np.ndarray
    k: int
    mesh_hash: str = field(default="", compare=False)

    @property
    def vertex_count(self):
        return self.eigenvectors.shape[0]


def build_laplacian(mesh):
    """Assemble the cotangent stiffness matrix and lumped mass vector.

    The off-diagonal stiffness entry for edge (i, j) is
    ``-(cot(alpha) + cot(beta)) / 2`` over the angles opposite the edge (one
    term for boundary edges); the diagonal is the negated off-diagonal row
    sum, so rows sum to zero.  ``mass[v]`` is one third of the area of the
    faces incident to ``v``.
    """
    v, f = mesh.vertices, mesh.faces
    n = mesh.vertex_count
    tri = v[f]

    rows, cols, vals = [], [], []
    for corner in range(3):
        a, b = (corner + 1) % 3, (corner + 2) % 3
        u = tri[:, a] - tri[:, corner]
        w = tri[:, b] - tri[:, corner]
        cross = np.linalg.norm(np.cross(u, w), axis=1)
        cot = (u * w).sum(axis=1) / cross
        if np.abs(cot).max() > _COT_LIMIT:
            bad = int(np.argmax(np.abs(cot)))
            raise NumericalDegeneracy(
                f"cotangent overflow on face {bad} (near-zero angle)"
            )
        half = 0.5 * cot
        rows += [f[:, a], f[:, b]]
        cols += [f[:, b], f[:, a]]
        vals += [half, half]
    weights = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()
    diag = np.asarray(weights.sum(axis=1)).ravel()
    stiffness = (sparse.diags(diag) - weights).tocsr()

    areas = mesh.face_areas()
    mass = np.zeros(n)
    np.add.at(mass, f.ravel(), np.repeat(areas / 3.0, 3))
    return LaplacianPair(stiffness=stiffness, mass=mass)


def compute_eigenbasis(lap, k, method="auto", maxiter=None):
    """Solve for the ``k`` smallest eigenpairs of the generalized problem.

    Parameters
    ----------
    lap : LaplacianPair
    k : int
        Basis size; requires ``2 <= k <= n - 1``.
    method : {"auto", "sparse", "dense"}
        "sparse" uses ARPACK shift-invert with a fixed start vector;
        "dense" uses a full LAPACK solve.  "auto" picks dense for small
        problems or when ``k`` is a large fraction of ``n``.

    Raises
    ------
    InsufficientRank
        If ``k`` is out of range.
    ConvergenceFailure
        If the iterative solver exhausts its budget.
    """
    n = lap.n
    if not 2 <= k <= n - 1:
        raise InsufficientRank(f"k={k} out of range [2, {n - 1}]")

    if method == "dense" or (method == "auto" and (n <= _DENSE_CUTOFF or 3 * k > n)):
        vals, vecs = scipy.linalg.eigh(
            lap.stiffness.toarray(),
            np.diag(lap.mass),
            subset_by_index=(0, k - 1),
        )
    elif method in ("sparse", "auto"):
        scale = lap.stiffness.diagonal().mean() / lap.mass.mean()
        sigma = -1e-3 * scale  # negative shift keeps K - sigma*M positive definite
        v0 = np.random.default_rng(_ARPACK_SEED).standard_normal(n)
        try:
            vals, vecs = spla.eigsh(
                lap.stiffness,
                k=k,
                M=sparse.diags(lap.mass).tocsc(),
                sigma=sigma,
                which="LM",
                v0=v0,
                maxiter=maxiter,
            )
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceFailure(f"eigensolver did not converge: {exc}") from exc
    else:
        raise ValueError(f"unknown method {method!r}")

    order = np.argsort(vals, kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]
    vals, vecs = _break_exact_ties(vals, vecs)

    clamp = _EIG_CLAMP_REL * max(vals[-1], 0.0)
    vals = np.where(np.abs(vals) < clamp, 0.0, vals)

    # sign convention: largest-magnitude entry of each eigenvector positive
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    vecs = vecs * signs

    vals.setflags(write=False)
    vecs = np.ascontiguousarray(vecs)
    vecs.setflags(write=False)
    masses = lap.mass.copy()
    masses.setflags(write=False)
    return SpectralBasis(eigenvalues=vals, eigenvectors=vecs, vertex_masses=masses, k=k)


def _break_exact_ties(vals, vecs):
    """Order exactly-equal eigenvalues by the first differing vector entry."""
    i = 0
    while i < len(vals) - 1:
        j = i + 1
        while j < len(vals) and vals[j] == vals[i]:
            j += 1
        if j - i > 1:
            block = sorted(range(i, j), key=lambda c: tuple(vecs[:, c]))
            vecs[:, i:j] = vecs[:, block]
        i = j
    return vals, vecs


def project(basis, field):
    """Mass-weighted spectral coefficients of a per-vertex field.

    ``a[i] = sum_v mass[v] * field[v] * phi_i[v]``.
    """
    field = np.asarray(field, dtype=np.float64)
    if field.shape != (basis.vertex_count,):
        raise LengthMismatch(
            f"field length {field.shape} does not match vertex count {basis.vertex_count}"
        )
    return basis.eigenvectors.T @ (basis.vertex_masses * field)


def reconstruct(basis, coefficients):
    """Per-vertex field from spectral coefficients (inverse of ``project``)."""
    coefficients = np.asarray(coefficients, dtype=np.float64)
    if coefficients.shape != (basis.k,):
        raise LengthMismatch(
            f"expected {basis.k} coefficients, got {coefficients.shape}"
        )
    return basis.eigenvectors @ coefficients


def with_mesh_hash(basis, mesh_hash):
    """Copy of ``basis`` tagged with the content hash of its source mesh."""
    return SpectralBasis(
        eigenvalues=basis.eigenvalues,
        eigenvectors=basis.eigenvectors,
        vertex_masses=basis.vertex_masses,
        k=basis.k,
        mesh_hash=mesh_hash,
    )
