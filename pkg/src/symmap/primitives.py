"""Deterministic mesh generators used as fixtures and demo inputs.

All generators return validated :class:`TriangleMesh` objects and produce
bitwise-identical output on repeated calls.  ``mirrored_composite`` and
``star_prism`` are built so that their planted symmetries are exact vertex
permutations: symmetric positions are produced by negating coordinates of a
half/sector template, which is exact in floating point.
"""

import numpy as np
from scipy.spatial import cKDTree

from .errors import InvalidSpec
from .mesh import TriangleMesh

_SQ3_2 = np.sqrt(3.0) / 2.0


def generate_primitive(kind, **params):
    """Generate a named primitive mesh.

    Parameters
    ----------
    kind : {"icosphere", "cylinder", "mirrored_composite", "star_prism"}
        ``icosphere(subdivisions)`` has ``20 * 4**s`` faces;
        ``cylinder(segments, rings)`` is a closed capped tube;
        ``mirrored_composite(...)`` is a connected solid of revolution made of
        axial lobes, exactly mirror-symmetric across the plane x = 0;
        ``star_prism(subdivisions)`` is a three-armed star prism with exact
        120-degree rotational, arm-mirror and top-bottom symmetries.
    """
    generators = {
        "icosphere": icosphere,
        "cylinder": cylinder,
        "mirrored_composite": mirrored_composite,
        "star_prism": star_prism,
    }
    if kind not in generators:
        raise InvalidSpec(f"unknown primitive kind {kind!r}")
    return generators[kind](**params)


def icosphere(subdivisions=0):
    """Unit icosphere: an icosahedron with `subdivisions` midpoint refinements.

    Vertices come in exact antipodal pairs at every subdivision level because
    the icosahedron is centrally symmetric and midpoint + normalization
    commute with negation exactly.
    """
    if subdivisions < 0:
        raise InvalidSpec("subdivisions must be >= 0")
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ], dtype=np.float64)
    verts /= np.linalg.norm(verts[0])
    faces = np.array([
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ], dtype=np.int64)
    for _ in range(subdivisions):
        verts, faces = _subdivide(verts, faces)
        verts = verts / np.linalg.norm(verts, axis=1)[:, None]
    return TriangleMesh(verts, faces)


def _subdivide(verts, faces):
    """One 4-to-1 midpoint subdivision; midpoints are plain edge averages."""
    verts = list(map(np.asarray, verts))
    cache = {}

    def midpoint(a, b):
        key = (a, b) if a < b else (b, a)
        if key not in cache:
            cache[key] = len(verts)
            verts.append((verts[a] + verts[b]) / 2.0)
        return cache[key]

    out = []
    for a, b, c in faces:
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        out += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
    return np.array(verts), np.array(out, dtype=np.int64)


def cylinder(segments=24, rings=8, radius=1.0, height=2.0):
    """Closed cylinder with `segments` angular and `rings` axial subdivisions."""
    if segments < 3 or rings < 1:
        raise InvalidSpec("cylinder needs segments >= 3 and rings >= 1")
    if radius <= 0 or height <= 0:
        raise InvalidSpec("cylinder needs positive radius and height")
    theta = 2.0 * np.pi * np.arange(segments) / segments
    zs = np.linspace(-height / 2.0, height / 2.0, rings + 1)
    verts = [
        (radius * np.cos(t), radius * np.sin(t), z) for z in zs for t in theta
    ]
    bottom = len(verts)
    verts.append((0.0, 0.0, -height / 2.0))
    top = len(verts)
    verts.append((0.0, 0.0, height / 2.0))

    faces = []
    for r in range(rings):
        for s in range(segments):
            a = r * segments + s
            b = r * segments + (s + 1) % segments
            c = (r + 1) * segments + (s + 1) % segments
            d = (r + 1) * segments + s
            faces += [(a, b, c), (a, c, d)]
    for s in range(segments):
        faces.append((bottom, (s + 1) % segments, s))
        faces.append((top, rings * segments + s, rings * segments + (s + 1) % segments))
    return TriangleMesh(np.array(verts), np.array(faces, dtype=np.int64))


def mirrored_composite(
    lobes=((0.85, 0.45, 0.35),),
    neck=0.22,
    half_length=1.3,
    rings=33,
    segments=18,
    mod_cos=0.15,
    mod_sin3=0.05,
):
    """Connected, bilaterally mirror-symmetric composite of axial lobes.

    The surface is a closed tube of revolution around the x axis whose radius
    profile is built from Gaussian ``lobes`` (center, width, amplitude — the
    parts of the composite, placed on the positive half-axis and mirrored)
    on top of a ``neck`` baseline that keeps the parts connected.  The angular
    modulation ``1 + mod_cos*cos(t) + mod_sin3*sin(3t)`` removes all
    rotational and front/back symmetries, so the reflection across the plane
    x = 0 is the unique planted symmetry and it permutes vertices exactly.
    """
    if not lobes:
        raise InvalidSpec("at least one lobe required")
    if neck <= 0 or half_length <= 0:
        raise InvalidSpec("neck and half_length must be positive")
    if rings < 3 or segments < 3:
        raise InvalidSpec("rings >= 3 and segments >= 3 required")
    for c, w, a in lobes:
        if w <= 0:
            raise InvalidSpec("lobe width must be positive")
    if abs(mod_cos) + abs(mod_sin3) >= 1.0:
        raise InvalidSpec("modulation amplitudes must sum below 1")
    if rings % 2 == 0:
        rings += 1  # odd ring count keeps one ring exactly on the mirror plane

    half = (rings - 1) // 2
    # interior ring stations on (0, L), cosine-spaced toward the poles
    pos = half_length * np.cos(np.pi * np.arange(half, 0, -1) / (rings + 1))
    xs = np.concatenate([-pos[::-1], [0.0], pos])  # exact negation symmetry

    def profile(x):
        r = neck * np.ones_like(x)
        for c, w, a in lobes:
            r = r + a * np.exp(-(((np.abs(x) - c) / w) ** 2))
        return r * np.sqrt(np.maximum(0.0, 1.0 - (x / half_length) ** 2))

    theta = 2.0 * np.pi * np.arange(segments) / segments
    mod = 1.0 + mod_cos * np.cos(theta) + mod_sin3 * np.sin(3.0 * theta)

    radii = profile(np.abs(xs))  # equal for +-x by construction
    verts = []
    for i, x in enumerate(xs):
        rho = radii[i] * mod
        for j in range(segments):
            verts.append((x, rho[j] * np.cos(theta[j]), rho[j] * np.sin(theta[j])))
    base_centers = len(verts)
    # quad centers between consecutive rings; plain corner average keeps the
    # mirror symmetry exact (averages of mirrored corners mirror bitwise)
    for i in range(rings - 1):
        for j in range(segments):
            jj = (j + 1) % segments
            quad = np.array([verts[i * segments + j], verts[i * segments + jj],
                             verts[(i + 1) * segments + jj], verts[(i + 1) * segments + j]])
            verts.append(tuple(quad.mean(axis=0)))
    pole_lo = len(verts)
    verts.append((-half_length, 0.0, 0.0))
    pole_hi = len(verts)
    verts.append((half_length, 0.0, 0.0))

    faces = []
    for i in range(rings - 1):
        for j in range(segments):
            jj = (j + 1) % segments
            a = i * segments + j
            b = i * segments + jj
            c = (i + 1) * segments + jj
            d = (i + 1) * segments + j
            m = base_centers + i * segments + j
            faces += [(a, b, m), (b, c, m), (c, d, m), (d, a, m)]
    for j in range(segments):
        jj = (j + 1) % segments
        faces.append((pole_lo, jj, j))
        faces.append((pole_hi, (rings - 1) * segments + j, (rings - 1) * segments + jj))
    return TriangleMesh(np.array(verts), np.array(faces, dtype=np.int64))


def star_prism(subdivisions=3, outer_radius=1.0, inner_radius=0.45, half_height=0.35):
    """Three-armed star prism with exact D3-plus-z-flip symmetry.

    The coarse star section uses hard-coded orbit coordinates so that rotation
    by 120 degrees, reflection across the x = 0 plane and the z-flip are exact
    vertex permutations; midpoint subdivision preserves all three.
    """
    if subdivisions < 0:
        raise InvalidSpec("subdivisions must be >= 0")
    if not 0 < inner_radius < outer_radius or half_height <= 0:
        raise InvalidSpec("need 0 < inner_radius < outer_radius and half_height > 0")
    ro, ri, h = outer_radius, inner_radius, half_height
    # section angles 90/210/330 (arm tips) and 30/150/270 (notches)
    section = np.array([
        (0.0, ro),            # tip, 90
        (-_SQ3_2 * ri, 0.5 * ri),   # notch, 150
        (-_SQ3_2 * ro, -0.5 * ro),  # tip, 210
        (0.0, -ri),           # notch, 270
        (_SQ3_2 * ro, -0.5 * ro),   # tip, 330
        (_SQ3_2 * ri, 0.5 * ri),    # notch, 30
    ])
    verts = []
    for z in (h, -h):
        for x, y in section:
            verts.append((x, y, z))
    top_c = len(verts)
    verts.append((0.0, 0.0, h))
    bot_c = len(verts)
    verts.append((0.0, 0.0, -h))
    side_c0 = len(verts)
    for j in range(6):
        jj = (j + 1) % 6
        x = (section[j, 0] + section[jj, 0]) / 2.0
        y = (section[j, 1] + section[jj, 1]) / 2.0
        verts.append((x, y, 0.0))

    faces = []
    for j in range(6):
        jj = (j + 1) % 6
        faces.append((top_c, j, jj))            # top fan
        faces.append((bot_c, 6 + jj, 6 + j))    # bottom fan
        m = side_c0 + j
        faces += [(j, 6 + j, m), (6 + j, 6 + jj, m), (6 + jj, jj, m), (jj, j, m)]

    verts = np.array(verts)
    faces = np.array(faces, dtype=np.int64)
    for _ in range(subdivisions):
        verts, faces = _subdivide(verts, faces)
    return TriangleMesh(verts, faces)


def mirror_tube(rings=141, segments=12):
    """Elongated thin mirrored composite (~3400 vertices at the defaults).

    Same construction as :func:`mirrored_composite` but with a high aspect
    ratio, which packs farthest-point samples densely along the axis; used
    where a few-thousand-vertex fixture is needed.
    """
    return mirrored_composite(
        lobes=((0.8, 0.5, 0.12),), neck=0.10, half_length=1.6,
        rings=rings, segments=segments, mod_cos=0.15, mod_sin3=0.05,
    )


def vertex_permutation_under_transform(mesh, matrix, tol=1e-9):
    """Vertex permutation realizing the rigid/reflective transform ``matrix``.

    Matches each transformed vertex position to its nearest mesh vertex and
    verifies the match is a permutation with displacement below ``tol`` times
    the bounding-box diagonal.

    Returns
    -------
    perm : (n,) int array with ``positions[perm[v]] == matrix @ positions[v]``
    max_mismatch : float, worst displacement relative to the bbox diagonal
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    moved = mesh.vertices @ matrix.T
    tree = cKDTree(mesh.vertices)
    dist, perm = tree.query(moved)
    scale = mesh.bounding_box_diagonal
    max_mismatch = float(dist.max() / scale)
    if max_mismatch > tol or len(np.unique(perm)) != mesh.vertex_count:
        raise InvalidSpec(
            f"transform is not a vertex permutation (max mismatch {max_mismatch:.3e})"
        )
    return perm.astype(np.int64), max_mismatch


def mirror_matrix(axis=0):
    """Reflection matrix across the coordinate plane normal to ``axis``."""
    m = np.eye(3)
    m[axis, axis] = -1.0
    return m


def rotation_z(degrees):
    """Rotation about the z axis."""
    t = np.deg2rad(degrees)
    c, s = np.cos(t), np.sin(t)
    return np.array([(c, -s, 0.0), (s, c, 0.0), (0.0, 0.0, 1.0)])
