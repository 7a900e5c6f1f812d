import numpy as np
import pytest
import scipy.linalg

import symmap
from symmap.errors import InsufficientRank, LengthMismatch
from symmap.mesh import TriangleMesh
from symmap.spectral import build_laplacian, compute_eigenbasis, project, reconstruct


def grid_mesh(n):
    """Right-triangle grid over the unit square, (n+1)^2 vertices."""
    xs = np.linspace(0.0, 1.0, n + 1)
    verts = [(x, y, 0.0) for y in xs for x in xs]
    faces = []
    for j in range(n):
        for i in range(n):
            a = j * (n + 1) + i
            b = a + 1
            c = a + n + 1
            d = c + 1
            faces += [(a, b, d), (a, d, c)]
    return TriangleMesh(verts, faces)


def test_equilateral_triangle_weights():
    edge = 1.0
    verts = [(0, 0, 0), (edge, 0, 0), (edge / 2, edge * np.sqrt(3) / 2, 0)]
    lap = build_laplacian(TriangleMesh(verts, [(0, 1, 2)]))
    k = lap.stiffness.toarray()
    expected = -1.0 / (2.0 * np.sqrt(3.0))  # -cot(60 deg)/2
    for i in range(3):
        for j in range(3):
            if i != j:
                assert k[i, j] == pytest.approx(expected, rel=1e-12)


def test_row_sums_zero(ico2):
    lap = build_laplacian(ico2)
    rows = np.asarray(lap.stiffness.sum(axis=1)).ravel()
    scale = np.abs(lap.stiffness.data).max()
    assert np.abs(rows).max() <= 1e-9 * scale


def test_stiffness_exactly_symmetric(blob):
    lap = build_laplacian(blob)
    assert (lap.stiffness != lap.stiffness.T).nnz == 0


def test_mass_sums_to_area(ico2):
    lap = build_laplacian(ico2)
    assert lap.mass.sum() == pytest.approx(ico2.surface_area, rel=1e-9)
    assert (lap.mass > 0).all()


def test_sphere_eigenvalues_match_dense_oracle(ico2):
    lap = build_laplacian(ico2)
    basis = compute_eigenbasis(lap, 10)
    # independent oracle: full dense generalized eigendecomposition
    dense_vals = scipy.linalg.eigh(
        lap.stiffness.toarray(), np.diag(lap.mass), eigvals_only=True
    )
    assert basis.eigenvalues[0] <= 1e-8 * basis.eigenvalues[1]
    np.testing.assert_allclose(basis.eigenvalues[1:], dense_vals[1:10], rtol=1e-8)
    # l=1 triple of the sphere: three eigenvalues within 2 percent
    lo, hi = basis.eigenvalues[1], basis.eigenvalues[3]
    assert (hi - lo) / lo <= 0.02


def test_first_eigenvector_constant(ico2_basis):
    phi1 = ico2_basis.eigenvectors[:, 0]
    assert np.abs(phi1 - phi1.mean()).max() <= 1e-6 * np.abs(phi1.mean())


def test_mass_orthonormality(ico2_basis):
    g = ico2_basis.eigenvectors.T @ (
        ico2_basis.vertex_masses[:, None] * ico2_basis.eigenvectors
    )
    assert np.abs(g - np.eye(ico2_basis.k)).max() <= 1e-6


def test_rayleigh_residual(blob, blob_basis):
    lap = build_laplacian(blob)
    phi = blob_basis.eigenvectors
    lam = blob_basis.eigenvalues
    m_phi = lap.mass[:, None] * phi
    res = lap.stiffness @ phi - m_phi * lam
    bound = 1e-6 * np.linalg.norm(m_phi, axis=0) * max(lam[-1], 1.0)
    assert (np.linalg.norm(res, axis=0) <= bound).all()


def test_square_grid_neumann_spectrum():
    mesh = grid_mesh(32)
    basis = compute_eigenbasis(build_laplacian(mesh), 6)
    # continuum Neumann eigenvalues pi^2 (m^2 + n^2) as the oracle
    expected = np.pi**2 * np.array([0.0, 1.0, 1.0, 2.0, 4.0, 4.0])
    assert basis.eigenvalues[0] <= 1e-8 * basis.eigenvalues[1]
    np.testing.assert_allclose(basis.eigenvalues[1:], expected[1:], rtol=0.10)


def test_project_unit_vector(ico2_basis):
    coeffs = project(ico2_basis, ico2_basis.eigenvectors[:, 2])
    expected = np.zeros(ico2_basis.k)
    expected[2] = 1.0
    assert np.abs(coeffs - expected).max() <= 1e-6


def test_project_constant_field(ico2_basis):
    coeffs = project(ico2_basis, np.ones(ico2_basis.vertex_count))
    assert np.abs(coeffs[1:]).max() <= 1e-6 * abs(coeffs[0])


def test_project_linearity(ico2_basis):
    field = 2.0 * ico2_basis.eigenvectors[:, 1] + 3.0 * ico2_basis.eigenvectors[:, 4]
    coeffs = project(ico2_basis, field)
    expected = np.zeros(ico2_basis.k)
    expected[1], expected[4] = 2.0, 3.0
    assert np.abs(coeffs - expected).max() <= 1e-6


def test_project_reconstruct_identity(ico2_basis):
    rng = np.random.default_rng(7)
    coeffs = rng.standard_normal(ico2_basis.k)
    field = reconstruct(ico2_basis, coeffs)
    back = project(ico2_basis, field)
    assert np.abs(back - coeffs).max() <= 1e-6


def test_project_length_mismatch(ico2_basis):
    with pytest.raises(LengthMismatch):
        project(ico2_basis, np.zeros(3))


def test_rigid_motion_invariance(ico2):
    angle = 0.7
    rot = np.array([
        (np.cos(angle), -np.sin(angle), 0.0),
        (np.sin(angle), np.cos(angle), 0.0),
        (0.0, 0.0, 1.0),
    ])
    moved = ico2.with_vertices(ico2.vertices @ rot.T + np.array([0.3, -1.2, 2.0]))
    a = compute_eigenbasis(build_laplacian(ico2), 12).eigenvalues
    b = compute_eigenbasis(build_laplacian(moved), 12).eigenvalues
    assert np.abs(a[1:] - b[1:]).max() <= 1e-8 * a[1:].max()


def test_uniform_scaling(ico2):
    scaled = ico2.with_vertices(ico2.vertices * 2.0)
    a = compute_eigenbasis(build_laplacian(ico2), 12).eigenvalues
    b = compute_eigenbasis(build_laplacian(scaled), 12).eigenvalues
    np.testing.assert_allclose(b[1:], a[1:] / 4.0, rtol=1e-8)


def test_k_out_of_range(ico2):
    lap = build_laplacian(ico2)
    with pytest.raises(InsufficientRank):
        compute_eigenbasis(lap, 1)
    with pytest.raises(InsufficientRank):
        compute_eigenbasis(lap, ico2.vertex_count)


def test_sparse_dense_agree(blob):
    lap = build_laplacian(blob)
    sparse_basis = compute_eigenbasis(lap, 20, method="sparse")
    dense_basis = compute_eigenbasis(lap, 20, method="dense")
    np.testing.assert_allclose(
        sparse_basis.eigenvalues[1:], dense_basis.eigenvalues[1:], rtol=1e-8
    )


def test_eigensolve_deterministic(blob):
    lap = build_laplacian(blob)
    a = compute_eigenbasis(lap, 30)
    b = compute_eigenbasis(lap, 30)
    assert np.array_equal(a.eigenvalues, b.eigenvalues)
    assert np.array_equal(a.eigenvectors, b.eigenvectors)


def test_sign_convention(blob_basis):
    for col in blob_basis.eigenvectors.T:
        assert col[np.argmax(np.abs(col))] > 0


def test_basis_cache_roundtrip(tmp_path, ico2, ico2_basis):
    from symmap import cache

    h = ico2.content_hash()
    basis = symmap.spectral.with_mesh_hash(ico2_basis, h)
    cache.save_basis(basis, h, tmp_path)
    back = cache.load_basis(h, basis.k, tmp_path)
    assert np.array_equal(back.eigenvalues, basis.eigenvalues)
    assert np.array_equal(back.eigenvectors, basis.eigenvectors)
    assert np.array_equal(back.vertex_masses, basis.vertex_masses)
    assert cache.load_basis(h, basis.k + 1, tmp_path) is None
