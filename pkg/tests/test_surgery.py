import numpy as np
import pytest
from numpy.testing import assert_allclose

from fixtures_meshes import icosphere, sphere_landmarks, square_grid
from steklov_match.errors import LandmarkError
from steklov_match.mesh import BoundaryLoop, TriangleMesh
from steklov_match.surgery import (
    circle_radius,
    circular_coordinates,
    cut_all,
    cut_landmark,
    validate_landmarks,
)


def hexagon_fan(radius=1.0):
    """Flat valence-6 vertex: center plus a hexagon ring, plus an outer ring
    so the across-edge refinement has somewhere to go."""
    verts = [(0.0, 0.0)]
    for i in range(6):
        a = np.pi * i / 3.0
        verts.append((radius * np.cos(a), radius * np.sin(a)))
    for i in range(6):
        a = np.pi * i / 3.0 + np.pi / 6.0
        verts.append((2.0 * radius * np.cos(a), 2.0 * radius * np.sin(a)))
    faces = []
    for i in range(6):
        faces.append((0, 1 + i, 1 + (i + 1) % 6))
        faces.append((1 + i, 7 + i, 1 + (i + 1) % 6))
        faces.append((7 + i, 7 + (i + 1) % 6, 1 + (i + 1) % 6))
    return TriangleMesh(verts, faces)


def test_circle_radius_min_over_both_shapes():
    a = hexagon_fan(0.2)
    b = hexagon_fan(0.1)
    assert_allclose(circle_radius(a, b, 0, 0, 0.5), 0.05, rtol=1e-12)


def test_circle_radius_equilateral_default():
    m = hexagon_fan(1.0)
    assert_allclose(circle_radius(m, m, 0, 0, 0.5), 0.5, rtol=1e-12)


def test_circle_radius_validates_factor():
    m = hexagon_fan()
    with pytest.raises(LandmarkError):
        circle_radius(m, m, 0, 0, 1.5)


@pytest.mark.parametrize("wedges", [1, 2, 3, 5])
def test_loop_size_is_valence_times_wedges(wedges):
    m = hexagon_fan()
    cut = cut_landmark(m, 0, 0.3, wedges=wedges)
    loop = cut.loops[0]
    assert len(loop) == 6 * wedges
    d = np.linalg.norm(cut.mesh.vertices[loop.vertices] - m.vertices[0], axis=1)
    assert_allclose(d, 0.3, atol=1e-12)


def test_loop_matches_mesh_boundary():
    m = icosphere(2)
    cut = cut_landmark(m, 20, 0.4 * m.min_incident_edge_length(20), wedges=3)
    boundary_sets = [frozenset(bl.vertices.tolist()) for bl in cut.mesh.boundary_loops]
    assert frozenset(cut.loops[0].vertices.tolist()) in boundary_sets


def test_loop_orientation_counter_clockwise():
    # Flat fan in the z=0 plane, normals +z: the loop must run CCW from +z.
    m = hexagon_fan()
    cut = cut_landmark(m, 0, 0.3, wedges=2)
    pos = cut.mesh.vertices[cut.loops[0].vertices]
    angles = np.unwrap(np.arctan2(pos[:, 1], pos[:, 0]))
    assert (np.diff(angles) > 0).all()


def test_radius_must_fit_one_ring():
    m = hexagon_fan()
    with pytest.raises(LandmarkError, match="not smaller"):
        cut_landmark(m, 0, 1.0, wedges=3)


def test_landmark_on_boundary_rejected():
    m = square_grid(6)
    with pytest.raises(LandmarkError, match="boundary"):
        validate_landmarks(m, [0])


def test_landmarks_too_close():
    m = icosphere(3)
    lm = 20
    neighbor3 = None
    from scipy.sparse.csgraph import dijkstra

    hops = dijkstra(m.adjacency, directed=False, indices=[lm], unweighted=True)[0]
    neighbor3 = int(np.flatnonzero(hops == 3)[0])
    with pytest.raises(LandmarkError, match="too close"):
        validate_landmarks(m, [lm, neighbor3])
    # 4 rings apart is allowed
    neighbor4 = int(np.flatnonzero(hops == 4)[0])
    validate_landmarks(m, [lm, neighbor4])


def test_cut_all_zero_landmarks_passthrough():
    m = icosphere(1)
    cut = cut_all(m, [], [])
    assert cut.mesh is m
    assert cut.loops == []
    assert np.array_equal(cut.source_vertex, np.arange(m.n_vertices))


def test_euler_characteristic_audit():
    m = icosphere(2)
    lms = sphere_landmarks(m, 6)
    radii = [0.5 * m.min_incident_edge_length(l) for l in lms]
    cut = cut_all(m, lms, radii, wedges=3)
    chi_old = m.n_vertices - len(m.edges) + m.n_faces
    chi_new = cut.mesh.n_vertices - len(cut.mesh.edges) + cut.mesh.n_faces
    assert chi_old == 2
    assert chi_new == chi_old - len(lms)
    assert len(cut.loops) == len(lms)


def test_preexisting_boundary_flagged_neumann():
    m = square_grid(8)
    inner = 4 * 9 + 4  # center vertex of the 9x9 grid
    assert not m.boundary_vertices[inner]
    r = 0.4 * m.min_incident_edge_length(inner)
    cut = cut_landmark(m, inner, r, wedges=2)
    assert len(cut.loops) == 1
    assert len(cut.neumann_loops) == 1
    # the Neumann loop is the original square outline
    assert_allclose(cut.neumann_loops[0].length, 4.0, atol=1e-9)


def test_geometry_preservation():
    m = icosphere(2)
    lms = sphere_landmarks(m, 4)
    radii = [0.5 * m.min_incident_edge_length(l) for l in lms]
    cut = cut_all(m, lms, radii)
    survivors = cut.source_vertex >= 0
    orig = cut.source_vertex[survivors]
    assert np.array_equal(cut.mesh.vertices[survivors], m.vertices[orig])
    assert not np.isin(lms, orig).any()


def _barycentric_in_some_face(mesh, point):
    v = mesh.vertices
    for a, b, c in mesh.faces:
        m = np.column_stack([v[b] - v[a], v[c] - v[a]])
        rhs = point - v[a]
        sol, res, _rank, _sv = np.linalg.lstsq(m, rhs, rcond=None)
        u, w = sol
        inside = -1e-9 <= u <= 1 + 1e-9 and -1e-9 <= w <= 1 + 1e-9 and u + w <= 1 + 1e-9
        planar = np.linalg.norm(m @ sol - rhs) <= 1e-9
        if inside and planar:
            return True
    return False


def test_inserted_vertices_contained_in_original_triangles():
    m = icosphere(2)
    lm = 20
    cut = cut_landmark(m, lm, 0.5 * m.min_incident_edge_length(lm), wedges=3)
    inserted = np.flatnonzero(cut.source_vertex < 0)
    for vid in inserted:
        assert _barycentric_in_some_face(m, cut.mesh.vertices[vid])


def test_determinism():
    m = icosphere(2)
    lms = sphere_landmarks(m, 5)
    radii = [0.5 * m.min_incident_edge_length(l) for l in lms]
    c1 = cut_all(m, lms, radii)
    c2 = cut_all(m, lms, radii)
    assert np.array_equal(c1.mesh.vertices, c2.mesh.vertices)
    assert np.array_equal(c1.mesh.faces, c2.mesh.faces)
    for l1, l2 in zip(c1.loops, c2.loops):
        assert np.array_equal(l1.vertices, l2.vertices)


def test_circular_coordinates_uniform():
    square = BoundaryLoop([0, 1, 2, 3], [(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0)])
    assert_allclose(circular_coordinates(square), [0.0, 0.25, 0.5, 0.75])


def test_circular_coordinates_cumulative():
    tri = BoundaryLoop([0, 1, 2], [(0, 0, 0), (1, 0, 0), (2, 0, 1e-9)])
    # edge lengths 1, 1, 2 (up to the epsilon keeping the loop non-degenerate)
    theta = circular_coordinates(tri)
    assert_allclose(theta, [0.0, 0.25, 0.5], atol=1e-9)


def test_circular_coordinates_orientation_flip():
    pos = np.array([(np.cos(a), np.sin(a), 0.0) for a in np.linspace(0, 2 * np.pi, 7)[:-1]])
    fwd = BoundaryLoop(np.arange(6), pos)
    # reversed traversal with the same origin vertex: [0, 5, 4, 3, 2, 1]
    order = np.array([0, 5, 4, 3, 2, 1])
    rev = BoundaryLoop(order, pos[order])
    tf = circular_coordinates(fwd)
    tr = circular_coordinates(rev)
    theta_rev = np.empty(6)
    theta_rev[order] = tr  # coordinate per vertex id
    assert_allclose(theta_rev, np.mod(1.0 - tf, 1.0), atol=1e-12)


def test_cut_theta_strictly_increasing():
    m = icosphere(2)
    cut = cut_landmark(m, 20, 0.4 * m.min_incident_edge_length(20))
    theta = cut.thetas[0]
    assert theta[0] == 0.0
    assert (np.diff(theta) > 0).all()
    assert theta[-1] < 1.0
