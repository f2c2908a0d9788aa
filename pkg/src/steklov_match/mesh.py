"""Triangle mesh data model and geometric primitives.

The central class is :class:`TriangleMesh`, an immutable vertex/face container
with lazily computed connectivity (edges, adjacency, boundary loops) and
geometry (face areas, edge lengths). Meshes are expected to be orientable
manifolds-with-boundary: every edge borders one or two faces and the two
incident faces induce opposite orientations on a shared edge.
"""

import warnings

import numpy as np
from scipy import sparse

from .errors import MeshError


class BoundaryLoop:
    """A closed boundary cycle of a mesh.

    Parameters
    ----------
    vertices : array_like of int
        Loop vertex indices, ordered counter-clockwise around the enclosed
        hole as seen from outside the shape (i.e. against the direction the
        incident faces traverse the boundary edges).
    positions : ndarray
        Coordinates of the loop vertices, shape (len(vertices), 3).

    Attributes
    ----------
    vertices : ndarray of int
    edge_lengths : ndarray
        ``edge_lengths[i]`` is the length of the edge from ``vertices[i]`` to
        ``vertices[i+1]`` (cyclically).
    length : float
        Total loop length.
    """

    def __init__(self, vertices, positions):
        self.vertices = np.asarray(vertices, dtype=np.int64)
        if self.vertices.size < 3:
            raise MeshError("a boundary loop needs at least 3 vertices")
        pos = np.asarray(positions, dtype=np.float64)
        self.edge_lengths = np.linalg.norm(np.roll(pos, -1, axis=0) - pos, axis=1)
        self.length = float(self.edge_lengths.sum())
        if np.any(self.edge_lengths <= 0.0):
            raise MeshError("boundary loop contains a zero-length edge")

    def __len__(self):
        return len(self.vertices)

    def __repr__(self):
        return f"BoundaryLoop({len(self)} vertices, length={self.length:.4g})"


class TriangleMesh:
    """An oriented triangle mesh in 3D.

    Parameters
    ----------
    vertices : array_like
        Vertex positions, shape (n, 3). 2D input (n, 2) is padded with z=0.
    faces : array_like of int
        Vertex index triples, shape (m, 3), counter-clockwise with respect to
        the outward normal.
    validate : bool
        Run connectivity and geometry validation (default True).

    Raises
    ------
    MeshError
        On out-of-range or repeated face indices, edges with more than two
        incident faces, inconsistently oriented faces, or zero total area.
    """

    def __init__(self, vertices, faces, validate=True):
        v = np.asarray(vertices, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] not in (2, 3):
            raise MeshError("vertices must have shape (n, 2) or (n, 3)")
        if v.shape[1] == 2:
            v = np.column_stack([v, np.zeros(len(v))])
        f = np.asarray(faces, dtype=np.int64)
        if f.size == 0:
            f = f.reshape(0, 3)
        if f.ndim != 2 or f.shape[1] != 3:
            raise MeshError("faces must have shape (m, 3)")
        self.vertices = v
        self.faces = f
        self.vertices.setflags(write=False)
        self.faces.setflags(write=False)
        self._cache = {}
        if validate:
            self._validate()

    # -- basic counts ------------------------------------------------------

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_faces(self):
        return self.faces.shape[0]

    def __repr__(self):
        return f"TriangleMesh({self.n_vertices} vertices, {self.n_faces} faces)"

    # -- validation --------------------------------------------------------

    def _validate(self):
        f = self.faces
        if f.size == 0:
            raise MeshError("empty mesh: no faces")
        if f.min(initial=0) < 0 or f.max(initial=-1) >= self.n_vertices:
            raise MeshError("invalid face index: face references a vertex out of range")
        degenerate = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 2] == f[:, 0])
        if degenerate.any():
            raise MeshError(f"degenerate face with repeated vertex indices (face {int(np.where(degenerate)[0][0])})")
        # Each directed edge may appear at most once; each undirected edge at
        # most twice. Violations mean non-manifold or inconsistent orientation.
        he = self._halfedges()
        keys = he[:, 0] * self.n_vertices + he[:, 1]
        uniq, counts = np.unique(keys, return_counts=True)
        if (counts > 1).any():
            u = int(uniq[counts > 1][0])
            raise MeshError(
                "non-manifold or inconsistently oriented faces at edge "
                f"({u // self.n_vertices}, {u % self.n_vertices})"
            )
        if self.total_area <= 0.0:
            raise MeshError("total surface area must be positive")
        referenced = np.zeros(self.n_vertices, dtype=bool)
        referenced[f.reshape(-1)] = True
        n_unref = int((~referenced).sum())
        if n_unref:
            warnings.warn(f"mesh has {n_unref} unreferenced vertices", stacklevel=3)

    def _halfedges(self):
        """Directed edges of all faces, shape (3m, 2)."""
        f = self.faces
        return np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]], axis=0)

    # -- derived geometry (cached) ------------------------------------------

    def _cached(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    @property
    def edges(self):
        """Unique undirected edges as sorted index pairs, shape (e, 2)."""

        def build():
            he = self._halfedges()
            und = np.sort(he, axis=1)
            return np.unique(und, axis=0)

        return self._cached("edges", build)

    @property
    def edge_lengths(self):
        def build():
            e = self.edges
            return np.linalg.norm(self.vertices[e[:, 1]] - self.vertices[e[:, 0]], axis=1)

        return self._cached("edge_lengths", build)

    @property
    def face_areas(self):
        def build():
            v = self.vertices
            f = self.faces
            c = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
            return 0.5 * np.linalg.norm(c, axis=1)

        return self._cached("face_areas", build)

    @property
    def total_area(self):
        return float(self.face_areas.sum())

    @property
    def adjacency(self):
        """Symmetric vertex adjacency (csr, entries = edge multiplicity)."""

        def build():
            he = self._halfedges()
            n = self.n_vertices
            data = np.ones(len(he))
            a = sparse.csr_matrix((data, (he[:, 0], he[:, 1])), shape=(n, n))
            return a + a.T

        return self._cached("adjacency", build)

    @property
    def vertex_rings(self):
        """List of neighbor index arrays, one per vertex."""

        def build():
            a = self.adjacency.tocsr()
            return [a.indices[a.indptr[i]:a.indptr[i + 1]] for i in range(self.n_vertices)]

        return self._cached("vertex_rings", build)

    @property
    def edge_face_count(self):
        """Number of incident faces per undirected edge (matches `edges` order)."""

        def build():
            he = np.sort(self._halfedges(), axis=1)
            e = self.edges
            keys = he[:, 0] * self.n_vertices + he[:, 1]
            ekeys = e[:, 0] * self.n_vertices + e[:, 1]  # sorted by construction
            counts = np.zeros(len(e), dtype=np.int64)
            np.add.at(counts, np.searchsorted(ekeys, keys), 1)
            return counts

        return self._cached("edge_face_count", build)

    @property
    def boundary_edges(self):
        """Undirected edges with exactly one incident face."""
        return self.edges[self.edge_face_count == 1]

    @property
    def is_closed(self):
        return len(self.boundary_edges) == 0

    @property
    def boundary_vertices(self):
        def build():
            mask = np.zeros(self.n_vertices, dtype=bool)
            be = self.boundary_edges
            if len(be):
                mask[be.reshape(-1)] = True
            return mask

        return self._cached("boundary_vertices", build)

    @property
    def boundary_loops(self):
        """All boundary loops, each counter-clockwise around its hole.

        The orientation reverses the direction in which the unique incident
        face traverses each boundary edge, which yields counter-clockwise
        order around the removed region as seen from outside.
        """

        def build():
            he = self._halfedges()
            und = np.sort(he, axis=1)
            keys = und[:, 0] * self.n_vertices + und[:, 1]
            uniq, counts = np.unique(keys, return_counts=True)
            boundary_keys = set(uniq[counts == 1].tolist())
            # next_on_loop[v] = u for each boundary halfedge (u -> v): walking
            # v -> u traverses the loop against the face direction.
            next_on_loop = {}
            for u, w in he:
                k = min(u, w) * self.n_vertices + max(u, w)
                if k in boundary_keys:
                    if int(w) in next_on_loop:
                        raise MeshError(f"non-manifold boundary vertex {int(w)}")
                    next_on_loop[int(w)] = int(u)
            loops = []
            seen = set()
            for start in sorted(next_on_loop):
                if start in seen:
                    continue
                cycle = [start]
                seen.add(start)
                cur = next_on_loop[start]
                while cur != start:
                    if cur in seen:
                        raise MeshError("open boundary chain: mesh boundary is not a union of cycles")
                    cycle.append(cur)
                    seen.add(cur)
                    cur = next_on_loop[cur]
                cycle = np.array(cycle, dtype=np.int64)
                shift = int(np.argmin(cycle))
                cycle = np.roll(cycle, -shift)
                loops.append(BoundaryLoop(cycle, self.vertices[cycle]))
            return loops

        return self._cached("boundary_loops", build)

    def connected_components(self):
        """Vertex component labels and component count."""

        def build():
            n_comp, labels = sparse.csgraph.connected_components(self.adjacency, directed=False)
            return n_comp, labels

        return self._cached("components", build)

    def vertex_areas(self):
        """One third of incident face area per vertex (lumped area share)."""

        def build():
            areas = np.zeros(self.n_vertices)
            np.add.at(areas, self.faces.reshape(-1), np.repeat(self.face_areas / 3.0, 3))
            return areas

        return self._cached("vertex_areas", build)

    def min_incident_edge_length(self, vertex):
        """Length of the shortest edge incident to `vertex`."""
        ring = self.vertex_rings[int(vertex)]
        if len(ring) == 0:
            raise MeshError(f"vertex {int(vertex)} has no incident edges")
        d = np.linalg.norm(self.vertices[ring] - self.vertices[int(vertex)], axis=1)
        dmin = float(d.min())
        if dmin <= 0.0:
            raise MeshError(f"zero-length edge incident to vertex {int(vertex)}")
        return dmin

    def scaled(self, factor):
        """Uniformly scaled copy (positions times `factor`)."""
        return TriangleMesh(self.vertices * float(factor), self.faces, validate=False)


def normalize_pair_area(mesh_a, mesh_b):
    """Scale two meshes so each has unit total surface area.

    Scaling is uniform on vertex positions; area scales with the square of
    the factor. Raises MeshError on a zero-area input.
    """
    out = []
    for m in (mesh_a, mesh_b):
        area = m.total_area
        if area <= 0.0:
            raise MeshError("cannot area-normalize a zero-area mesh")
        if abs(area - 1.0) <= 1e-14:
            out.append(m)
        else:
            out.append(m.scaled(1.0 / np.sqrt(area)))
    return out[0], out[1]
