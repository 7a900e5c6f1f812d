"""The Laplace-Beltrami eigenbasis behind every descriptor and map.

Shows the cotangent construction, the sphere's degenerate eigenvalue ladder,
mass-orthonormality, and the invariance of the spectrum under rigid motion
and scaling.
"""

import numpy as np

import symmap

mesh = symmap.icosphere(2)
lap = symmap.build_laplacian(mesh)
print(f"stiffness: {lap.stiffness.shape} with {lap.stiffness.nnz} nonzeros")
print(f"mass sum {lap.mass.sum():.6f} vs surface area {mesh.surface_area:.6f}")

basis = symmap.compute_eigenbasis(lap, 16)
print("\nsmallest eigenvalues (unit sphere ladder is l(l+1) = 0, 2, 6, 12...):")
print(np.round(basis.eigenvalues, 3))

gram = basis.eigenvectors.T @ (lap.mass[:, None] * basis.eigenvectors)
print(f"mass-orthonormality residual: {np.abs(gram - np.eye(16)).max():.2e}")

# spectral coefficients: project picks out basis directions exactly
field = 2.0 * basis.eigenvectors[:, 1] + 3.0 * basis.eigenvectors[:, 4]
coeffs = symmap.project(basis, field)
print(f"project(2*phi_2 + 3*phi_5) -> {np.round(coeffs[:6], 6)}")

rot = np.array([(0.0, -1.0, 0.0), (1.0, 0.0, 0.0), (0.0, 0.0, 1.0)])
moved = mesh.with_vertices(mesh.vertices @ rot.T + 5.0)
moved_vals = symmap.compute_eigenbasis(symmap.build_laplacian(moved), 16).eigenvalues
print(f"\nrigid motion: max eigenvalue change "
      f"{np.abs(moved_vals[1:] - basis.eigenvalues[1:]).max():.2e}")

scaled = mesh.with_vertices(mesh.vertices * 2.0)
scaled_vals = symmap.compute_eigenbasis(symmap.build_laplacian(scaled), 16).eigenvalues
print(f"scaling by 2: eigenvalues shrink by 4 "
      f"(ratio {basis.eigenvalues[1] / scaled_vals[1]:.6f})")
