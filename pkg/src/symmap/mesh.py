"""Triangle mesh container with validation, orientation and basic queries.

A :class:`TriangleMesh` is immutable after construction and safe to share
across workers.  Construction validates that the mesh is an edge-manifold,
single-component triangle mesh with no degenerate faces, and rewinds faces so
adjacent triangles are consistently oriented.
"""

import hashlib
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import DegenerateFace, Disconnected, NonManifold, ParseError

# Faces with area below this fraction of bbox_diagonal^2 are rejected rather
# than repaired: silent repair perturbs the Laplacian spectrum unpredictably.
DEGENERATE_AREA_REL = 1e-12


@dataclass(frozen=True)
class MeshStats:
    """Combinatorial and metric summary of a mesh."""

    vertex_count: int
    face_count: int
    boundary_edge_count: int
    surface_area: float
    bounding_box_diagonal: float
    euler_characteristic: int


class TriangleMesh:
    """An oriented, connected, edge-manifold triangle mesh.

    Parameters
    ----------
    vertices : (n, 3) array_like of float
        Vertex positions. Stored as float64; all downstream numerics run at
        64-bit because the eigensolver is ill-conditioned at 32-bit.
    faces : (m, 3) array_like of int
        Vertex index triples. Faces are rewound during construction so that
        adjacent faces share each interior edge in opposite directions.
    attributes : dict, optional
        Optional per-vertex scalar/label fields carried along for export.
    """

    def __init__(self, vertices, faces, attributes=None):
        v = np.ascontiguousarray(vertices, dtype=np.float64)
        f = np.ascontiguousarray(faces, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ParseError(f"vertices must be (n, 3), got {v.shape}")
        if f.ndim != 2 or f.shape[1] != 3:
            raise ParseError(f"faces must be (m, 3), got {f.shape}")
        if f.shape[0] == 0:
            raise ParseError("mesh has no faces")
        if not np.isfinite(v).all():
            raise ParseError("vertex positions contain NaN or infinity")
        if f.min() < 0 or f.max() >= v.shape[0]:
            raise ParseError(
                f"face index out of range: max index {f.max()} for {v.shape[0]} vertices"
            )

        self._validate_faces(v, f)
        f = self._orient(v, f)

        v.setflags(write=False)
        f.setflags(write=False)
        self.vertices = v
        self.faces = f
        self.attributes = dict(attributes) if attributes else {}

        self._adj = self._edge_face_counts()
        if self._adj.data.max() > 2:
            raise NonManifold("an edge borders more than two faces")
        self._check_connected()
        self._hash = None

    # -- construction checks -------------------------------------------------

    @staticmethod
    def _validate_faces(v, f):
        if (f[:, 0] == f[:, 1]).any() or (f[:, 1] == f[:, 2]).any() or (f[:, 0] == f[:, 2]).any():
            bad = int(np.nonzero(
                (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])
            )[0][0])
            raise DegenerateFace(f"face {bad} repeats a vertex index")
        bbox = v.max(axis=0) - v.min(axis=0)
        diag2 = float(bbox @ bbox)
        if diag2 <= 0.0:
            raise DegenerateFace("all vertices coincide")
        areas = _face_areas(v, f)
        tol = DEGENERATE_AREA_REL * diag2
        if (areas < tol).any():
            bad = int(np.argmin(areas))
            raise DegenerateFace(
                f"face {bad} has area {areas[bad]:.3e} below tolerance {tol:.3e}"
            )

    @staticmethod
    def _orient(v, f):
        """Rewind faces so each interior edge is traversed once per direction.

        Breadth-first propagation over the face adjacency graph; a conflict
        means the surface is not orientable.
        """
        m = f.shape[0]
        edge_faces = {}
        for fi in range(m):
            a, b, c = f[fi]
            for u, w in ((a, b), (b, c), (c, a)):
                key = (u, w) if u < w else (w, u)
                edge_faces.setdefault(key, []).append(fi)

        out = f.copy()
        state = np.zeros(m, dtype=np.int8)  # 0 unseen, 1 kept, -1 flipped
        for start in range(m):
            if state[start]:
                continue
            state[start] = 1
            stack = [start]
            while stack:
                fi = stack.pop()
                fa, fb, fc = out[fi]
                for u, w in ((fa, fb), (fb, fc), (fc, fa)):
                    key = (u, w) if u < w else (w, u)
                    for fj in edge_faces[key]:
                        if fj == fi:
                            continue
                        ga, gb, gc = out[fj]
                        other = {(ga, gb), (gb, gc), (gc, ga)}
                        consistent = (u, w) not in other  # opposite direction expected
                        if state[fj] == 0:
                            if not consistent:
                                out[fj] = out[fj][::-1]
                            state[fj] = 1
                            stack.append(fj)
                        elif not consistent:
                            raise NonManifold(
                                "orientation conflict: surface is not orientable"
                            )
        return out

    def _edge_face_counts(self):
        """Symmetric vertex adjacency; entry (i, j) counts faces on edge (i, j)."""
        f = self.faces
        i = np.concatenate([f[:, 0], f[:, 1], f[:, 2], f[:, 1], f[:, 2], f[:, 0]])
        j = np.concatenate([f[:, 1], f[:, 2], f[:, 0], f[:, 0], f[:, 1], f[:, 2]])
        n = self.vertex_count
        adj = sparse.csr_matrix(
            (np.ones(i.shape, dtype=np.int32), (i, j)), shape=(n, n)
        )
        return adj

    def _check_connected(self):
        n_comp, labels = csgraph.connected_components(self._adj, directed=False)
        used = np.zeros(self.vertex_count, dtype=bool)
        used[self.faces.ravel()] = True
        if not used.all():
            raise Disconnected(
                f"{int((~used).sum())} vertices belong to no face"
            )
        if n_comp != 1:
            raise Disconnected(f"mesh has {n_comp} connected components, expected 1")

    # -- basic queries -------------------------------------------------------

    @property
    def vertex_count(self):
        return self.vertices.shape[0]

    @property
    def face_count(self):
        return self.faces.shape[0]

    @property
    def edge_count(self):
        return int(self._adj.nnz // 2)

    @property
    def boundary_edge_count(self):
        return int((self._adj.data == 1).sum() // 2)

    @property
    def euler_characteristic(self):
        return self.vertex_count - self.edge_count + self.face_count

    def face_areas(self):
        return _face_areas(self.vertices, self.faces)

    @property
    def surface_area(self):
        return float(self.face_areas().sum())

    @property
    def bounding_box_diagonal(self):
        span = self.vertices.max(axis=0) - self.vertices.min(axis=0)
        return float(np.linalg.norm(span))

    def one_ring(self, vertex):
        """Vertex ids adjacent to ``vertex`` (its 1-ring), ascending."""
        row = self._adj.getrow(int(vertex))
        return row.indices.copy()

    def content_hash(self):
        """SHA-256 of positions and connectivity; keys the on-disk caches."""
        if self._hash is None:
            h = hashlib.sha256()
            h.update(b"v")
            h.update(self.vertices.tobytes())
            h.update(b"f")
            h.update(self.faces.tobytes())
            self._hash = h.hexdigest()
        return self._hash

    def with_vertices(self, vertices):
        """A new validated mesh with the same faces and new positions."""
        return TriangleMesh(vertices, np.array(self.faces), self.attributes)

    def __repr__(self):
        return (
            f"TriangleMesh(vertices={self.vertex_count}, faces={self.face_count}, "
            f"boundary_edges={self.boundary_edge_count})"
        )


def _face_areas(v, f):
    p0, p1, p2 = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
    return 0.5 * np.linalg.norm(np.cross(p1 - p0, p2 - p0), axis=1)


def mesh_stats(mesh):
    """Exact combinatorial counts plus area and bounding-box diagonal."""
    return MeshStats(
        vertex_count=mesh.vertex_count,
        face_count=mesh.face_count,
        boundary_edge_count=mesh.boundary_edge_count,
        surface_area=mesh.surface_area,
        bounding_box_diagonal=mesh.bounding_box_diagonal,
        euler_characteristic=mesh.euler_characteristic,
    )
