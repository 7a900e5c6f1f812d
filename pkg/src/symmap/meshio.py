"""Mesh file readers (OFF, OBJ, PLY) and deterministic writers.

PLY is read in both ASCII and binary-little-endian form.  The colored-PLY
writer emits binary little-endian files with float64 positions and uint8
colors and is byte-identical for identical inputs.
"""

import struct

import numpy as np

from .errors import InvalidSpec, LengthMismatch, ParseError
from .mesh import TriangleMesh

_PLY_DTYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}

# Fixed diverging colormap for scalar fields (position, RGB).
_SCALAR_STOPS = (
    (0.00, (33, 102, 172)),
    (0.25, (103, 169, 207)),
    (0.50, (247, 247, 247)),
    (0.75, (239, 138, 98)),
    (1.00, (178, 24, 43)),
)

# Fixed categorical palette for integer label fields, cycled modulo 10.
_LABEL_PALETTE = (
    (31, 119, 180), (255, 127, 14), (44, 160, 44), (214, 39, 40),
    (148, 103, 189), (140, 86, 75), (227, 119, 194), (127, 127, 127),
    (188, 189, 34), (23, 190, 207),
)


def load_mesh(path, format=None):
    """Load and validate a triangle mesh.

    Parameters
    ----------
    path : str or Path
        File to read.
    format : {"off", "obj", "ply"}, optional
        Explicit format; inferred from the extension when omitted.

    Returns
    -------
    TriangleMesh
    """
    path = str(path)
    if format is None:
        format = path.rsplit(".", 1)[-1].lower() if "." in path else ""
    format = format.lower()
    if format not in ("off", "obj", "ply"):
        raise ParseError(f"unsupported mesh format {format!r} for {path}")
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if format == "off":
        v, f = _parse_off(data, path)
    elif format == "obj":
        v, f = _parse_obj(data, path)
    else:
        v, f = _parse_ply(data, path)
    return TriangleMesh(v, f)


def save_mesh(mesh, path, format=None):
    """Write a mesh as ASCII OFF or binary PLY (chosen by extension)."""
    path = str(path)
    if format is None:
        format = path.rsplit(".", 1)[-1].lower() if "." in path else ""
    format = format.lower()
    if format == "off":
        _write_off(mesh, path)
    elif format == "ply":
        _write_ply(mesh, path, colors=None)
    else:
        raise InvalidSpec(f"unsupported output format {format!r}")


def export_colored_mesh(mesh, per_vertex_values, path):
    """Write a binary PLY with per-vertex colors from the fixed colormap.

    Integer-typed fields are treated as labels and colored with a fixed
    10-color palette (cycled); float fields are min-max normalized and mapped
    through a fixed diverging blue-white-red gradient (constant fields map to
    the midpoint color).  Output bytes depend only on the inputs.
    """
    values = np.asarray(per_vertex_values)
    if values.shape != (mesh.vertex_count,):
        raise LengthMismatch(
            f"field has shape {values.shape}, expected ({mesh.vertex_count},)"
        )
    if np.issubdtype(values.dtype, np.integer) or values.dtype == bool:
        colors = label_colors(values.astype(np.int64))
    else:
        colors = scalar_colors(values.astype(np.float64))
    _write_ply(mesh, str(path), colors=colors)


def scalar_colors(values):
    """Map a float field to RGB through the fixed diverging gradient."""
    lo, hi = float(values.min()), float(values.max())
    if hi > lo:
        t = (values - lo) / (hi - lo)
    else:
        t = np.full(values.shape, 0.5)
    pos = np.array([s[0] for s in _SCALAR_STOPS])
    rgb = np.array([s[1] for s in _SCALAR_STOPS], dtype=np.float64)
    out = np.stack([np.interp(t, pos, rgb[:, c]) for c in range(3)], axis=1)
    return np.rint(out).astype(np.uint8)


def label_colors(labels):
    """Map integer labels to the fixed categorical palette (cycled)."""
    palette = np.array(_LABEL_PALETTE, dtype=np.uint8)
    return palette[np.mod(labels, len(palette))]


# -- OFF ----------------------------------------------------------------------


def _data_lines(data, path):
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not a text mesh file") from exc
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    return lines


def _parse_off(data, path):
    lines = _data_lines(data, path)
    if not lines:
        raise ParseError(f"{path}: empty OFF file")
    head = lines[0]
    if not head.startswith("OFF"):
        raise ParseError(f"{path}: missing OFF header")
    rest = head[3:].split()
    idx = 1
    if len(rest) >= 3:
        counts = rest
    else:
        if len(lines) < 2:
            raise ParseError(f"{path}: truncated OFF header")
        counts = lines[1].split()
        idx = 2
    try:
        nv, nf = int(counts[0]), int(counts[1])
    except (ValueError, IndexError) as exc:
        raise ParseError(f"{path}: bad OFF count line") from exc
    if len(lines) < idx + nv + nf:
        raise ParseError(f"{path}: truncated OFF body")
    try:
        verts = np.array(
            [[float(t) for t in lines[idx + i].split()[:3]] for i in range(nv)]
        )
    except ValueError as exc:
        raise ParseError(f"{path}: bad vertex line") from exc
    faces = []
    for i in range(nf):
        toks = lines[idx + nv + i].split()
        try:
            cnt = int(toks[0])
            ids = [int(t) for t in toks[1 : 1 + cnt]]
        except (ValueError, IndexError) as exc:
            raise ParseError(f"{path}: bad face line {i}") from exc
        if cnt != 3 or len(ids) != 3:
            raise ParseError(f"{path}: face {i} has {cnt} vertices, only triangles supported")
        faces.append(ids)
    return verts, np.array(faces, dtype=np.int64)


def _write_off(mesh, path):
    parts = ["OFF", f"{mesh.vertex_count} {mesh.face_count} 0"]
    for p in mesh.vertices:
        parts.append(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}")
    for f in mesh.faces:
        parts.append(f"3 {f[0]} {f[1]} {f[2]}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")


# -- OBJ ----------------------------------------------------------------------


def _parse_obj(data, path):
    verts, faces = [], []
    for line in _data_lines(data, path):
        toks = line.split()
        if toks[0] == "v":
            if len(toks) < 4:
                raise ParseError(f"{path}: bad vertex line {line!r}")
            verts.append([float(toks[1]), float(toks[2]), float(toks[3])])
        elif toks[0] == "f":
            ids = []
            for tok in toks[1:]:
                try:
                    ids.append(int(tok.split("/")[0]))
                except ValueError as exc:
                    raise ParseError(f"{path}: bad face token {tok!r}") from exc
            if len(ids) != 3:
                raise ParseError(f"{path}: only triangle faces supported")
            faces.append([i - 1 if i > 0 else len(verts) + i for i in ids])
    if not verts or not faces:
        raise ParseError(f"{path}: OBJ file has no geometry")
    return np.array(verts), np.array(faces, dtype=np.int64)


# -- PLY ----------------------------------------------------------------------


def _parse_ply(data, path):
    marker = b"end_header"
    pos = data.find(marker)
    if not data.startswith(b"ply") or pos < 0:
        raise ParseError(f"{path}: missing PLY header")
    header_end = data.find(b"\n", pos) + 1
    header = data[:header_end].decode("ascii", errors="replace")
    body = data[header_end:]

    fmt = None
    elements = []  # (name, count, [(prop_name, dtype) or ("list", count_t, idx_t, name)])
    for line in header.splitlines():
        toks = line.strip().split()
        if not toks:
            continue
        if toks[0] == "format":
            fmt = toks[1]
        elif toks[0] == "element":
            elements.append((toks[1], int(toks[2]), []))
        elif toks[0] == "property":
            if not elements:
                raise ParseError(f"{path}: property before element")
            if toks[1] == "list":
                elements[-1][2].append(("list", toks[2], toks[3], toks[4]))
            else:
                elements[-1][2].append((toks[2], toks[1]))
    if fmt not in ("ascii", "binary_little_endian"):
        raise ParseError(f"{path}: unsupported PLY format {fmt!r}")

    if fmt == "ascii":
        return _parse_ply_ascii(body, elements, path)
    return _parse_ply_binary(body, elements, path)


def _take_vertex_faces(vertex_rows, face_rows, vprops, path):
    names = [p[0] for p in vprops]
    try:
        ix, iy, iz = names.index("x"), names.index("y"), names.index("z")
    except ValueError as exc:
        raise ParseError(f"{path}: vertex element lacks x/y/z") from exc
    verts = np.stack(
        [vertex_rows[:, ix], vertex_rows[:, iy], vertex_rows[:, iz]], axis=1
    ).astype(np.float64)
    faces = np.asarray(face_rows, dtype=np.int64)
    if faces.ndim != 2 or faces.shape[1] != 3:
        raise ParseError(f"{path}: only triangle faces supported")
    return verts, faces


def _parse_ply_ascii(body, elements, path):
    lines = [ln.split() for ln in body.decode("ascii").splitlines() if ln.strip()]
    cursor = 0
    vertex_rows = face_rows = vprops = None
    for name, count, props in elements:
        rows = lines[cursor : cursor + count]
        if len(rows) < count:
            raise ParseError(f"{path}: truncated PLY body")
        cursor += count
        if name == "vertex":
            vprops = props
            vertex_rows = np.array([[float(t) for t in r[: len(props)]] for r in rows])
        elif name == "face":
            face_rows = []
            for r in rows:
                cnt = int(r[0])
                if cnt != 3:
                    raise ParseError(f"{path}: only triangle faces supported")
                face_rows.append([int(r[1]), int(r[2]), int(r[3])])
    if vertex_rows is None or face_rows is None:
        raise ParseError(f"{path}: PLY lacks vertex or face element")
    return _take_vertex_faces(vertex_rows, face_rows, vprops, path)


def _parse_ply_binary(body, elements, path):
    offset = 0
    vertex_rows = face_rows = vprops = None
    for name, count, props in elements:
        if all(p[0] != "list" for p in props):
            dtype = np.dtype([(f"p{i}", "<" + _PLY_DTYPES[p[1]]) for i, p in enumerate(props)])
            rows = np.frombuffer(body, dtype=dtype, count=count, offset=offset)
            offset += dtype.itemsize * count
            if name == "vertex":
                vprops = props
                vertex_rows = np.stack(
                    [rows[f"p{i}"].astype(np.float64) for i in range(len(props))], axis=1
                )
        else:
            rows = []
            for _ in range(count):
                row = []
                for p in props:
                    if p[0] == "list":
                        cdt = np.dtype("<" + _PLY_DTYPES[p[1]])
                        idt = np.dtype("<" + _PLY_DTYPES[p[2]])
                        (cnt,) = np.frombuffer(body, dtype=cdt, count=1, offset=offset)
                        offset += cdt.itemsize
                        ids = np.frombuffer(body, dtype=idt, count=int(cnt), offset=offset)
                        offset += idt.itemsize * int(cnt)
                        row.append(ids.astype(np.int64))
                    else:
                        dt = np.dtype("<" + _PLY_DTYPES[p[1]])
                        offset += dt.itemsize
                rows.append(row)
            if name == "face":
                face_rows = []
                for row in rows:
                    ids = row[0]
                    if len(ids) != 3:
                        raise ParseError(f"{path}: only triangle faces supported")
                    face_rows.append(list(ids))
    if vertex_rows is None or face_rows is None:
        raise ParseError(f"{path}: PLY lacks vertex or face element")
    return _take_vertex_faces(vertex_rows, face_rows, vprops, path)


def _write_ply(mesh, path, colors):
    nv, nf = mesh.vertex_count, mesh.face_count
    header = ["ply", "format binary_little_endian 1.0", "comment symmap mesh export",
              f"element vertex {nv}",
              "property double x", "property double y", "property double z"]
    if colors is not None:
        header += ["property uchar red", "property uchar green", "property uchar blue"]
    header += [f"element face {nf}", "property list uchar int vertex_indices", "end_header"]

    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        if colors is None:
            fh.write(mesh.vertices.astype("<f8").tobytes())
        else:
            vdt = np.dtype([("xyz", "<f8", 3), ("rgb", "u1", 3)])
            rec = np.empty(nv, dtype=vdt)
            rec["xyz"] = mesh.vertices
            rec["rgb"] = colors
            fh.write(rec.tobytes())
        fdt = np.dtype([("n", "u1"), ("ids", "<i4", 3)])
        rec = np.empty(nf, dtype=fdt)
        rec["n"] = 3
        rec["ids"] = mesh.faces
        fh.write(rec.tobytes())
