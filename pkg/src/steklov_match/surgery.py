"""Landmark surgery: turning pointwise landmarks into boundary circles.

Each landmark vertex is removed together with a small disk of radius ``r``
built inside its one-ring: every incident triangle is split into ``wedges``
equal-angle sectors, new vertices are placed at distance ``r`` from the
landmark along the sector rays, and the far parts of the triangles are
re-triangulated so the disk can be dropped without touching any geometry
outside the landmark's two-ring. The result is a :class:`CutMesh` carrying
the new boundary circles, their circular coordinates and a provenance map
back to the original vertices.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import dijkstra as _dijkstra

from .errors import LandmarkError, MeshError
from .mesh import BoundaryLoop, TriangleMesh

MIN_RING_SEPARATION = 4


@dataclass
class CutMesh:
    """A mesh after landmark surgery.

    Attributes
    ----------
    mesh : TriangleMesh
        The refined mesh with landmark disks removed.
    loops : list of BoundaryLoop
        One landmark circle per landmark, in landmark order, oriented
        counter-clockwise as seen from outside.
    thetas : list of ndarray
        Circular coordinate in [0, 1) per loop vertex (cumulative arc
        length, origin at the loop's first stored vertex).
    neumann_loops : list of BoundaryLoop
        Pre-existing boundary loops; no boundary condition is attached to
        them downstream (natural/Neumann).
    source_vertex : ndarray of int
        For each cut-mesh vertex, the original vertex index, or -1 for
        vertices inserted by the surgery.
    landmarks : ndarray of int
        The removed landmark vertices (original indexing).
    original_vertex_count : int
    """

    mesh: TriangleMesh
    loops: list = field(default_factory=list)
    thetas: list = field(default_factory=list)
    neumann_loops: list = field(default_factory=list)
    source_vertex: np.ndarray = None
    landmarks: np.ndarray = None
    original_vertex_count: int = 0

    @property
    def original_rows(self):
        """Cut-mesh indices of surviving original vertices."""
        return np.flatnonzero(self.source_vertex >= 0)

    def loop_vertex_mask(self):
        mask = np.zeros(self.mesh.n_vertices, dtype=bool)
        for loop in self.loops:
            mask[loop.vertices] = True
        return mask


def circle_radius(mesh_a, mesh_b, landmark_a, landmark_b, radius_factor):
    """Disk radius for one landmark pair.

    The radius is ``radius_factor`` times the shortest edge incident to the
    landmark, minimized over both (area-normalized) shapes.
    """
    if not 0.0 < radius_factor < 1.0:
        raise LandmarkError(f"radius factor must lie in (0, 1), got {radius_factor}")
    s = min(
        mesh_a.min_incident_edge_length(landmark_a),
        mesh_b.min_incident_edge_length(landmark_b),
    )
    return radius_factor * s


def circular_coordinates(loop):
    """Coordinate in [0, 1) per loop vertex, proportional to arc length.

    The origin sits at the loop's first stored vertex and the coordinate
    increases along the stored (counter-clockwise) order.
    """
    cum = np.concatenate([[0.0], np.cumsum(loop.edge_lengths[:-1])])
    return cum / loop.length


def ring_separations(mesh, landmarks):
    """Pairwise hop distance between landmarks on the vertex graph."""
    landmarks = np.asarray(landmarks, dtype=np.int64)
    if len(landmarks) < 2:
        return np.zeros((len(landmarks), len(landmarks)))
    d = _dijkstra(
        mesh.adjacency,
        directed=False,
        indices=landmarks,
        unweighted=True,
        limit=MIN_RING_SEPARATION + 1,
    )
    return d[:, landmarks]


def validate_landmarks(mesh, landmarks):
    """Check the landmark set invariants, raising LandmarkError on failure."""
    landmarks = np.asarray(landmarks, dtype=np.int64)
    if len(landmarks) == 0:
        return landmarks
    if landmarks.min() < 0 or landmarks.max() >= mesh.n_vertices:
        raise LandmarkError("landmark index out of range")
    if len(np.unique(landmarks)) != len(landmarks):
        raise LandmarkError("duplicate landmark indices")
    on_boundary = mesh.boundary_vertices[landmarks]
    if on_boundary.any():
        bad = int(landmarks[on_boundary][0])
        raise LandmarkError(f"landmark {bad} lies on a pre-existing boundary")
    sep = ring_separations(mesh, landmarks)
    np.fill_diagonal(sep, np.inf)
    if (sep < MIN_RING_SEPARATION).any():
        i, j = np.unravel_index(int(np.argmin(sep)), sep.shape)
        raise LandmarkError(
            f"landmarks too close: vertices {int(landmarks[i])} and "
            f"{int(landmarks[j])} are {int(sep[i, j])} rings apart "
            f"(minimum {MIN_RING_SEPARATION})"
        )
    return landmarks


def cut_landmark(mesh, landmark, radius, wedges=3):
    """Cut a single landmark disk; convenience wrapper around `cut_all`."""
    return cut_all(mesh, [landmark], [radius], wedges=wedges)


def cut_all(mesh, landmarks, radii, wedges=3):
    """Cut all landmark disks sequentially (in landmark list order).

    Parameters
    ----------
    mesh : TriangleMesh
    landmarks : sequence of int
    radii : sequence of float
        Disk radius per landmark; each must be smaller than the shortest
        incident edge.
    wedges : int
        Equal-angle sectors per incident triangle (>= 1).

    Returns
    -------
    CutMesh
    """
    landmarks = validate_landmarks(mesh, landmarks)
    radii = np.asarray(radii, dtype=np.float64)
    if len(radii) != len(landmarks):
        raise LandmarkError("need one radius per landmark")
    if wedges < 1:
        raise LandmarkError("wedge count must be >= 1")

    if len(landmarks) == 0:
        n = mesh.n_vertices
        return CutMesh(
            mesh=mesh,
            loops=[],
            thetas=[],
            neumann_loops=list(mesh.boundary_loops),
            source_vertex=np.arange(n, dtype=np.int64),
            landmarks=landmarks,
            original_vertex_count=n,
        )

    builder = _Builder(mesh)
    rings = []
    for lm, r in zip(landmarks, radii):
        rings.append(builder.cut_one(int(lm), float(r), int(wedges)))

    cut_mesh, old_to_new, source_vertex = builder.finalize(landmarks)
    loops = []
    thetas = []
    for ring in rings:
        ids = old_to_new[np.array(ring, dtype=np.int64)]
        start = int(np.argmin(ids))  # smallest creation index as origin
        ids = np.roll(ids, -start)
        loop = BoundaryLoop(ids, cut_mesh.vertices[ids])
        loops.append(loop)
        thetas.append(circular_coordinates(loop))

    gamma_vertices = set()
    for loop in loops:
        gamma_vertices.update(loop.vertices.tolist())
    neumann = [
        bl for bl in cut_mesh.boundary_loops
        if not gamma_vertices.intersection(bl.vertices.tolist())
    ]
    return CutMesh(
        mesh=cut_mesh,
        loops=loops,
        thetas=thetas,
        neumann_loops=neumann,
        source_vertex=source_vertex,
        landmarks=landmarks,
        original_vertex_count=mesh.n_vertices,
    )


class _Builder:
    """Mutable mesh state for sequential landmark cuts."""

    def __init__(self, mesh):
        self.positions = [p for p in mesh.vertices]
        self.faces = [list(f) for f in mesh.faces]  # removed faces become None
        self.removed_vertices = set()
        self.n_original = mesh.n_vertices

    # -- low-level helpers ---------------------------------------------------

    def _add_vertex(self, pos):
        self.positions.append(np.asarray(pos, dtype=np.float64))
        return len(self.positions) - 1

    def _add_face(self, a, b, c):
        self.faces.append([int(a), int(b), int(c)])

    def _edge_map(self):
        """Undirected edge -> list of live face ids."""
        emap = {}
        for fid, f in enumerate(self.faces):
            if f is None:
                continue
            for u, v in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
                emap.setdefault((min(u, v), max(u, v)), []).append(fid)
        return emap

    # -- one landmark ----------------------------------------------------------

    def cut_one(self, landmark, radius, wedges):
        if landmark in self.removed_vertices:
            raise LandmarkError(f"landmark {landmark} was already removed")
        self._clamped_rays = 0
        emap = self._edge_map()
        fan = self._ordered_fan(landmark, emap)
        gamma = self.positions[landmark]

        # Shortest incident edge bounds the disk.
        ring_ids = [a for a, _b, _fid in fan]
        incident_len = {
            a: float(np.linalg.norm(self.positions[a] - gamma)) for a in ring_ids
        }
        shortest = min(incident_len.values())
        if radius >= shortest:
            raise LandmarkError(
                f"disk radius {radius:.4g} is not smaller than the shortest "
                f"edge ({shortest:.4g}) at landmark {landmark}"
            )

        # Vertices on the original incident edges, shared between fan faces.
        edge_vertex = {}
        for a in ring_ids:
            direction = (self.positions[a] - gamma) / incident_len[a]
            edge_vertex[a] = self._add_vertex(gamma + radius * direction)

        ring = []
        pending = {}  # across-face candidate edge -> inserted point ids (canonical order)
        for a, b, fid in fan:
            ring_part, opp = self._refine_incident_face(
                landmark, a, b, fid, radius, wedges, edge_vertex
            )
            ring.extend(ring_part)
            if opp is not None:
                pending[opp[0]] = opp[1]

        for edge, points in sorted(pending.items()):
            self._refine_across(edge, points, emap, landmark)

        if self._clamped_rays:
            warnings.warn(
                f"circle at landmark {landmark}: {self._clamped_rays} wedge "
                f"rays shorter than the requested radius {radius:.4g}; those "
                "boundary vertices were pulled inside their triangles",
                stacklevel=4,
            )
        self.removed_vertices.add(landmark)
        return ring

    def _ordered_fan(self, landmark, emap):
        """Incident faces ordered around the landmark, as (a, b, face_id).

        Each entry is a face (landmark, a, b) in stored orientation; walking
        the list follows the face fan counter-clockwise as seen from outside.
        """
        succ = {}
        for fid, f in enumerate(self.faces):
            if f is None or landmark not in f:
                continue
            k = f.index(landmark)
            a, b = f[(k + 1) % 3], f[(k + 2) % 3]
            if a in succ:
                raise MeshError(f"non-manifold fan at landmark {landmark}")
            succ[a] = (b, fid)
        if len(succ) < 3:
            raise LandmarkError(
                f"landmark {landmark} has valence {len(succ)} (need >= 3 interior)"
            )
        start = min(succ, key=lambda a: succ[a][1])  # deterministic: lowest face id
        fan = []
        a = start
        for _ in range(len(succ)):
            b, fid = succ[a]
            fan.append((a, b, fid))
            a = b
        if a != start or len(fan) != len(succ):
            raise LandmarkError(f"landmark {landmark} is not interior (open fan)")
        return fan

    def _refine_incident_face(self, landmark, a, b, fid, radius, wedges, edge_vertex):
        """Split one incident triangle into wedge sectors and far triangles.

        Returns the ring vertex ids contributed by this face (the sector arc
        without its last vertex, which the next fan face owns) and, for
        wedges >= 2, the opposite edge with its inserted point ids.
        """
        gamma = self.positions[landmark]
        pa = self.positions[a]
        pb = self.positions[b]
        e1 = pa - gamma
        e2 = pb - gamma
        n1 = np.linalg.norm(e1)
        u = e1 / n1
        w_raw = e2 - np.dot(e2, u) * u
        nw = np.linalg.norm(w_raw)
        if nw <= 1e-14 * np.linalg.norm(e2):
            raise MeshError(f"degenerate (collinear) triangle at landmark {landmark}")
        w = w_raw / nw
        phi = float(np.arctan2(np.dot(e2, w), np.dot(e2, u)))

        # 2D coordinates in the triangle plane (gamma at the origin).
        a2 = np.array([n1, 0.0])
        b2 = np.array([np.dot(e2, u), np.dot(e2, w)])

        ring_c = [edge_vertex[a]]
        opp_pts = []
        for j in range(1, wedges):
            t = j / wedges
            d2 = np.array([np.cos(t * phi), np.sin(t * phi)])
            # Ray gamma + s*d meets segment a + sprime*(b - a).
            mat = np.column_stack([d2, a2 - b2])
            try:
                s, sprime = np.linalg.solve(mat, a2)
            except np.linalg.LinAlgError as exc:
                raise MeshError(f"degenerate wedge geometry at landmark {landmark}") from exc
            # A wedge ray can be shorter than the requested radius (thin
            # triangles, or any triangle once the radius factor approaches
            # 1). Containment and triangle quality win over the exact circle
            # radius on such rays: cap at 95% of the ray length.
            r_eff = min(radius, 0.95 * s)
            if r_eff < radius:
                self._clamped_rays += 1
            d3 = np.cos(t * phi) * u + np.sin(t * phi) * w
            ring_c.append(self._add_vertex(gamma + r_eff * d3))
            opp_pts.append(self._add_vertex(pa + sprime * (pb - pa)))
        ring_c.append(edge_vertex[b])

        chain = [a] + opp_pts + [b]
        for j in range(wedges):
            c0, c1 = ring_c[j], ring_c[j + 1]
            w0, w1 = chain[j], chain[j + 1]
            self._add_face(c0, w0, w1)
            self._add_face(c0, w1, c1)
        self.faces[fid] = None

        opp = None
        if opp_pts:
            if a < b:
                opp = ((a, b), list(opp_pts))
            else:
                opp = ((b, a), list(reversed(opp_pts)))
        return ring_c[:-1], opp

    def _refine_across(self, edge, points, emap, landmark):
        """Fan-split the neighbor across `edge` so its subdivision matches."""
        fids = [f for f in emap.get(edge, []) if self.faces[f] is not None]
        if not fids:
            return  # opposite edge on a pre-existing boundary: nothing across
        if len(fids) > 1:
            raise MeshError(f"edge {edge} still borders {len(fids)} faces after refinement")
        fid = fids[0]
        face = self.faces[fid]
        if landmark in face:
            raise MeshError(
                f"across-edge face {fid} touches landmark {landmark}; mesh too coarse"
            )
        self.faces[fid] = None
        for tri in self._split_face(face, {edge: points}):
            self._add_face(*tri)

    def _split_face(self, face, pending):
        """Recursively split `face` along all subdivided edges in `pending`.

        `pending` maps undirected edges (lo, hi) to point ids ordered lo->hi.
        Points are connected to the vertex opposite their edge; sub-triangles
        containing further subdivided edges are split recursively.
        """
        edge = min(pending)
        points = pending[edge]
        rest = {e: p for e, p in pending.items() if e != edge}
        lo, hi = edge
        directed = [(face[i], face[(i + 1) % 3]) for i in range(3)]
        if (lo, hi) in directed:
            k = directed.index((lo, hi))
            chain = [lo] + points + [hi]
        elif (hi, lo) in directed:
            k = directed.index((hi, lo))
            chain = [hi] + list(reversed(points)) + [lo]
        else:
            raise MeshError(f"edge {edge} not found in face {face}")
        d = face[(k + 2) % 3]
        out = []
        for t in range(len(chain) - 1):
            sub = (chain[t], chain[t + 1], d)
            sub_edges = {tuple(sorted(e)) for e in ((sub[0], sub[1]), (sub[1], sub[2]), (sub[2], sub[0]))}
            sub_pending = {e: p for e, p in rest.items() if e in sub_edges}
            if sub_pending:
                out.extend(self._split_face(list(sub), sub_pending))
            else:
                out.append(sub)
        return out

    # -- assembly ---------------------------------------------------------------

    def finalize(self, landmarks):
        """Compact vertices, drop removed landmarks, build the final mesh."""
        n_total = len(self.positions)
        keep = np.ones(n_total, dtype=bool)
        keep[list(self.removed_vertices)] = False
        old_to_new = np.cumsum(keep) - 1
        old_to_new[~keep] = -1
        positions = np.array([self.positions[i] for i in range(n_total) if keep[i]])
        faces = np.array(
            [f for f in self.faces if f is not None], dtype=np.int64
        )
        if (~keep[faces.reshape(-1)]).any():
            raise MeshError("internal error: a removed vertex is still referenced")
        faces = old_to_new[faces]
        mesh = TriangleMesh(positions, faces)
        source_vertex = np.full(mesh.n_vertices, -1, dtype=np.int64)
        original = np.flatnonzero(keep[: self.n_original])
        source_vertex[old_to_new[original]] = original
        return mesh, old_to_new, source_vertex
