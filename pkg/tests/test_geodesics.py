import numpy as np
import pytest
from numpy.testing import assert_allclose

from fixtures_meshes import antipodal_pair, collinear_strip, icosphere, single_triangle
from steklov_match.geodesics import geodesic_diameter, geodesic_distances
from steklov_match.mesh import TriangleMesh


def test_distance_to_self_is_zero():
    m = icosphere(1)
    d = geodesic_distances(m, [5])[0]
    assert d[5] == 0.0
    assert (d >= 0).all()


def test_collinear_strip_distance():
    m = collinear_strip()
    d = geodesic_distances(m, [0])[0]
    assert_allclose(d[2], 2.0, rtol=1e-12)


def test_icosphere_antipodal_distance():
    m = icosphere(3)
    i, j = antipodal_pair(m)
    d = geodesic_distances(m, [i])[0][j]
    # edge-graph Dijkstra with unfolded diagonals overestimates slightly
    assert abs(d - np.pi) / np.pi < 0.05


def test_icosphere_diameter():
    m = icosphere(3)
    diam = geodesic_diameter(m)
    assert abs(diam - np.pi) / np.pi < 0.05


def test_single_triangle_diameter():
    m = single_triangle()
    # longest edge-graph path: the hypotenuse
    assert_allclose(geodesic_diameter(m), np.sqrt(2.0), rtol=1e-12)


def test_disconnected_component_distances_infinite():
    a = single_triangle()
    verts = np.vstack([a.vertices, a.vertices + [10, 0, 0]])
    faces = np.vstack([a.faces, a.faces + 3])
    m = TriangleMesh(verts, faces)
    d = geodesic_distances(m, [0])[0]
    assert np.isinf(d[3:]).all()
    assert np.isfinite(d[:3]).all()


def test_disconnected_diameter_warns():
    a = icosphere(1)
    b = single_triangle()
    verts = np.vstack([a.vertices, b.vertices + [10, 0, 0]])
    faces = np.vstack([a.faces, b.faces + a.n_vertices])
    m = TriangleMesh(verts, faces)
    with pytest.warns(UserWarning, match="largest component"):
        diam = geodesic_diameter(m)
    assert abs(diam - np.pi) / np.pi < 0.06


def _midpoint_subdivide(mesh):
    verts = [tuple(p) for p in mesh.vertices]
    cache = {}

    def mid(i, j):
        key = (min(i, j), max(i, j))
        if key not in cache:
            verts.append(tuple((np.asarray(verts[i]) + np.asarray(verts[j])) / 2.0))
            cache[key] = len(verts) - 1
        return cache[key]

    faces = []
    for a, b, c in mesh.faces:
        ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
        faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
    return TriangleMesh(np.asarray(verts), faces)


def test_subdivision_never_increases_distance():
    m = icosphere(1)
    i, j = antipodal_pair(m)
    d0 = geodesic_distances(m, [i])[0][: m.n_vertices]
    fine = _midpoint_subdivide(m)
    d1 = geodesic_distances(fine, [i])[0][: m.n_vertices]
    assert (d1 <= d0 + 1e-9).all()
    assert d1[j] <= d0[j]


def test_triangle_inequality_sample():
    m = icosphere(2)
    d = geodesic_distances(m, [0, 17, 42])
    d01 = geodesic_distances(m, [17])[0]
    # d(0, v) <= d(0, 17) + d(17, v)
    assert (d[0] <= d[0][17] + d01 + 1e-9).all()


def test_all_pairs_symmetry_on_component():
    m = icosphere(1)
    idx = np.arange(m.n_vertices)
    d = geodesic_distances(m, idx)
    assert_allclose(d, d.T, atol=1e-12)


def test_diameter_deterministic():
    m = icosphere(2)
    assert geodesic_diameter(m, seed=0) == geodesic_diameter(m, seed=0)
