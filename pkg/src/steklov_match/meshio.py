"""Mesh and landmark file I/O.

Supported mesh formats: OFF, OBJ and PLY (ASCII; PLY also reads
binary_little_endian). Vertex indices are 0-based internally; OBJ's 1-based
indices are converted at the boundary. Landmark files are plain text with one
0-based vertex index per line; line i of the source file corresponds to line i
of the target file.
"""

import struct
from pathlib import Path

import numpy as np

from .errors import MeshError
from .mesh import TriangleMesh


def load_mesh(path, fmt=None):
    """Load a triangle mesh from OFF, OBJ or PLY.

    Parameters
    ----------
    path : str or Path
    fmt : str, optional
        One of "off", "obj", "ply". Inferred from the suffix when omitted.

    Returns
    -------
    TriangleMesh

    Raises
    ------
    MeshError
        On parse failure or invalid connectivity.
    FileNotFoundError
        If the file does not exist.
    """
    path = Path(path)
    if fmt is None:
        fmt = path.suffix.lower().lstrip(".")
    fmt = fmt.lower()
    if fmt == "off":
        v, f = _read_off(path)
    elif fmt == "obj":
        v, f = _read_obj(path)
    elif fmt == "ply":
        v, f = _read_ply(path)
    else:
        raise MeshError(f"unsupported mesh format '{fmt}' for {path}")
    try:
        return TriangleMesh(v, f)
    except MeshError as exc:
        raise MeshError(f"{path}: {exc}") from exc


def save_mesh(mesh, path, fmt=None):
    """Write a mesh as ASCII OFF, OBJ or PLY (format from suffix unless given)."""
    path = Path(path)
    if fmt is None:
        fmt = path.suffix.lower().lstrip(".")
    fmt = fmt.lower()
    if fmt == "off":
        _write_off(mesh, path)
    elif fmt == "obj":
        _write_obj(mesh, path)
    elif fmt == "ply":
        _write_ply(mesh, path)
    else:
        raise MeshError(f"unsupported mesh format '{fmt}' for {path}")


def load_landmarks(path, n_vertices=None):
    """Read one 0-based vertex index per line; blank lines and # comments skipped."""
    indices = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            indices.append(int(line))
        except ValueError as exc:
            raise MeshError(f"{path}:{lineno}: expected a vertex index, got {raw!r}") from exc
    out = np.array(indices, dtype=np.int64)
    if n_vertices is not None and len(out) and (out.min() < 0 or out.max() >= n_vertices):
        raise MeshError(f"{path}: landmark index out of range for mesh with {n_vertices} vertices")
    return out


def save_landmarks(indices, path):
    Path(path).write_text("".join(f"{int(i)}\n" for i in indices))


# -- OFF ---------------------------------------------------------------------


def _tokens(path):
    """Non-empty, comment-stripped whitespace tokens of a text file."""
    for raw in path.read_text().splitlines():
        line = raw.split("#", 1)[0]
        for tok in line.split():
            yield tok


def _read_off(path):
    toks = _tokens(path)
    try:
        first = next(toks)
    except StopIteration:
        raise MeshError(f"{path}: empty file") from None
    if first.upper() != "OFF":
        raise MeshError(f"{path}: missing OFF header")
    try:
        nv, nf, _ne = (int(next(toks)) for _ in range(3))
        v = np.array([float(next(toks)) for _ in range(3 * nv)]).reshape(nv, 3)
        faces = []
        for _ in range(nf):
            cnt = int(next(toks))
            poly = [int(next(toks)) for _ in range(cnt)]
            faces.extend(_fan(poly))
    except (StopIteration, ValueError) as exc:
        raise MeshError(f"{path}: truncated or malformed OFF data") from exc
    return v, np.array(faces, dtype=np.int64).reshape(-1, 3)


def _write_off(mesh, path):
    lines = ["OFF", f"{mesh.n_vertices} {mesh.n_faces} 0"]
    for p in mesh.vertices:
        lines.append(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}")
    for f in mesh.faces:
        lines.append(f"3 {f[0]} {f[1]} {f[2]}")
    Path(path).write_text("\n".join(lines) + "\n")


# -- OBJ ---------------------------------------------------------------------


def _read_obj(path):
    verts = []
    faces = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        parts = raw.split("#", 1)[0].split()
        if not parts:
            continue
        tag = parts[0]
        try:
            if tag == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif tag == "f":
                poly = [int(p.split("/", 1)[0]) for p in parts[1:]]
                # OBJ indices are 1-based; negatives count from the end.
                poly = [i - 1 if i > 0 else len(verts) + i for i in poly]
                faces.extend(_fan(poly))
        except (ValueError, IndexError) as exc:
            raise MeshError(f"{path}:{lineno}: malformed OBJ line {raw!r}") from exc
    if not verts:
        raise MeshError(f"{path}: no vertices found")
    return np.array(verts), np.array(faces, dtype=np.int64).reshape(-1, 3)


def _write_obj(mesh, path):
    lines = []
    for p in mesh.vertices:
        lines.append(f"v {p[0]:.17g} {p[1]:.17g} {p[2]:.17g}")
    for f in mesh.faces:
        lines.append(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}")
    Path(path).write_text("\n".join(lines) + "\n")


# -- PLY ---------------------------------------------------------------------

_PLY_TYPES = {
    "char": "b", "int8": "b", "uchar": "B", "uint8": "B",
    "short": "h", "int16": "h", "ushort": "H", "uint16": "H",
    "int": "i", "int32": "i", "uint": "I", "uint32": "I",
    "float": "f", "float32": "f", "double": "d", "float64": "d",
}


def _read_ply(path):
    blob = Path(path).read_bytes()
    header_end = blob.find(b"end_header")
    if not blob.startswith(b"ply") or header_end < 0:
        raise MeshError(f"{path}: missing PLY header")
    header_end = blob.index(b"\n", header_end) + 1
    header = blob[:header_end].decode("ascii", errors="replace").splitlines()
    fmt = None
    elements = []  # (name, count, [(proptype, name) or ("list", counttype, itemtype, name)])
    for line in header[1:]:
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "format":
            fmt = parts[1]
        elif parts[0] == "element":
            elements.append((parts[1], int(parts[2]), []))
        elif parts[0] == "property":
            if not elements:
                raise MeshError(f"{path}: property before element in PLY header")
            if parts[1] == "list":
                elements[-1][2].append(("list", parts[2], parts[3], parts[4]))
            else:
                elements[-1][2].append((parts[1], parts[2]))
    if fmt == "ascii":
        return _read_ply_ascii(path, blob[header_end:].decode("ascii"), elements)
    if fmt == "binary_little_endian":
        return _read_ply_binary(path, blob[header_end:], elements, "<")
    raise MeshError(f"{path}: unsupported PLY format '{fmt}'")


def _read_ply_ascii(path, body, elements):
    toks = iter(body.split())
    verts, faces = [], []
    try:
        for name, count, props in elements:
            for _ in range(count):
                values = {}
                for p in props:
                    if p[0] == "list":
                        cnt = int(float(next(toks)))
                        values[p[3]] = [int(float(next(toks))) for _ in range(cnt)]
                    else:
                        values[p[1]] = float(next(toks))
                if name == "vertex":
                    verts.append([values["x"], values["y"], values["z"]])
                elif name == "face":
                    poly = values.get("vertex_indices", values.get("vertex_index"))
                    faces.extend(_fan(poly))
    except (StopIteration, KeyError, ValueError) as exc:
        raise MeshError(f"{path}: truncated or malformed PLY data") from exc
    return np.array(verts), np.array(faces, dtype=np.int64).reshape(-1, 3)


def _read_ply_binary(path, body, elements, endian):
    offset = 0
    verts, faces = [], []
    try:
        for name, count, props in elements:
            for _ in range(count):
                values = {}
                for p in props:
                    if p[0] == "list":
                        cfmt = endian + _PLY_TYPES[p[1]]
                        (cnt,) = struct.unpack_from(cfmt, body, offset)
                        offset += struct.calcsize(cfmt)
                        ifmt = endian + str(int(cnt)) + _PLY_TYPES[p[2]]
                        values[p[3]] = list(struct.unpack_from(ifmt, body, offset))
                        offset += struct.calcsize(ifmt)
                    else:
                        vfmt = endian + _PLY_TYPES[p[0]]
                        (values[p[1]],) = struct.unpack_from(vfmt, body, offset)
                        offset += struct.calcsize(vfmt)
                if name == "vertex":
                    verts.append([values["x"], values["y"], values["z"]])
                elif name == "face":
                    poly = values.get("vertex_indices", values.get("vertex_index"))
                    faces.extend(_fan(poly))
    except (struct.error, KeyError) as exc:
        raise MeshError(f"{path}: truncated or malformed binary PLY data") from exc
    return np.array(verts), np.array(faces, dtype=np.int64).reshape(-1, 3)


def _write_ply(mesh, path):
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {mesh.n_vertices}",
        "property double x",
        "property double y",
        "property double z",
        f"element face {mesh.n_faces}",
        "property list uchar int vertex_indices",
        "end_header",
    ]
    for p in mesh.vertices:
        lines.append(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}")
    for f in mesh.faces:
        lines.append(f"3 {f[0]} {f[1]} {f[2]}")
    Path(path).write_text("\n".join(lines) + "\n")


def _fan(poly):
    """Fan-triangulate polygon index list; passthrough for triangles."""
    if len(poly) < 3:
        raise MeshError("face with fewer than 3 vertices")
    return [(poly[0], poly[i], poly[i + 1]) for i in range(1, len(poly) - 1)]
