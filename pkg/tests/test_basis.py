import numpy as np
import pytest
from numpy.testing import assert_allclose

from fixtures_meshes import annulus_mesh, icosphere, sphere_landmarks
from steklov_match.basis import (
    build_basis,
    cross_block_orthogonality_report,
    max_cross_block,
    orthonormality_warning,
    w_gram,
    write_gram_report,
)
from steklov_match.errors import SolverError
from steklov_match.fem import (
    FemOperators,
    assemble_lumped_mass,
    assemble_steklov_mass,
    assemble_stiffness,
)
from steklov_match.mesh import normalize_pair_area
from steklov_match.spectral import dirichlet_laplacian_eigs, dirichlet_steklov_eigs
from steklov_match.surgery import cut_all


def annulus_ops(r_inner=0.5, n_rings=16, n_theta=64):
    ann = annulus_mesh(r_inner, 1.0, n_rings, n_theta)
    loops = sorted(ann.boundary_loops, key=lambda l: l.length)
    return FemOperators(
        mesh=ann,
        stiffness=assemble_stiffness(ann),
        mass=assemble_lumped_mass(ann),
        boundary_mass=[assemble_steklov_mass(l, ann.n_vertices) for l in loops],
        loops=loops,
    )


def sphere_basis(level=2, count=4, n_lap=15, n_ds=5):
    m, _ = normalize_pair_area(icosphere(level), icosphere(level))
    lms = sphere_landmarks(m, count)
    radii = [0.5 * m.min_incident_edge_length(l) for l in lms]
    cut = cut_all(m, lms, radii)
    ops = FemOperators.build(cut)
    return cut, ops, build_basis(cut, ops, n_lap, n_ds)


def test_dimension_formula():
    _cut, _ops, b = sphere_basis(count=4, n_lap=15, n_ds=5)
    assert b.dim == 15 + 4 * 5
    assert b.functions.shape[1] == b.dim
    assert b.block_dims() == [15, 5, 5, 5, 5]


def test_columns_unit_w_norm():
    _cut, ops, b = sphere_basis()
    W = ops.stiffness
    norms = np.einsum("ij,ij->j", b.functions, W @ b.functions)
    assert_allclose(norms, 1.0, atol=1e-9)


def test_normalization_routes_agree():
    # dividing by the Dirichlet norm equals dividing by sqrt(eigenvalue)
    ops = annulus_ops()
    lap = dirichlet_laplacian_eigs(ops, 5)
    W = ops.stiffness
    by_norm = lap.vectors / np.sqrt(np.einsum("ij,ij->j", lap.vectors, W @ lap.vectors))
    by_value = lap.vectors / np.sqrt(lap.values)
    assert_allclose(by_norm, by_value, atol=1e-9)
    stek = dirichlet_steklov_eigs(ops, 1, 5)
    by_norm = stek.vectors / np.sqrt(np.einsum("ij,ij->j", stek.vectors, W @ stek.vectors))
    by_value = stek.vectors / np.sqrt(stek.values)
    assert_allclose(by_norm, by_value, atol=1e-9)


def test_laplacian_block_orthogonal_to_circle_blocks():
    _cut, _ops, b = sphere_basis()
    gram = w_gram(b)
    s = b.block_slices()
    for j in range(1, len(s)):
        assert np.abs(gram[s[0], s[j]]).max() < 1e-6


def test_within_block_gram_is_identity():
    _cut, _ops, b = sphere_basis()
    gram = w_gram(b)
    for s in b.block_slices():
        block = gram[s, s]
        assert np.abs(block - np.eye(block.shape[0])).max() < 1e-6


def test_sphere_circle_blocks_nearly_orthogonal():
    # The first function of each circle pair carries a large mutual inner
    # product (they are close to the harmonic indicator functions, whose sum
    # is constant); beyond those, cross-block products are tiny.
    _cut, _ops, b = sphere_basis(level=3, count=6, n_lap=20, n_ds=6)
    gram = np.abs(w_gram(b))
    slices = b.block_slices()
    firsts = [slices[j + 1].start for j in range(b.k)]
    trimmed = gram.copy()
    for f0 in firsts:
        trimmed[f0, :] = 0.0
        trimmed[:, f0] = 0.0
    mask = np.ones(gram.shape, dtype=bool)
    for s in slices:
        mask[s, s] = False
    assert trimmed[mask].max() <= 0.1
    assert gram[mask].mean() <= 0.02


def test_annulus_orthogonality_improves_with_smaller_circle():
    stats = []
    for r_inner in (0.8, 0.5, 0.1):
        ops = annulus_ops(r_inner=r_inner, n_rings=24, n_theta=96)
        b = build_basis(None, ops, 10, 8)
        gram = np.abs(w_gram(b))
        s = b.block_slices()
        cross = gram[s[1], s[2]].copy()
        first_pair = cross[0, 0]
        cross[0, 0] = 0.0
        stats.append((first_pair, cross.max(), gram[s[1], s[2]].mean()))
    # the first eigenfunctions of the two circles are exactly parallel in the
    # Dirichlet inner product (both extend the same radial mode), at every
    # radius; orthogonality of everything else improves as the circle shrinks
    for first_pair, _max_rest, _mean in stats:
        assert first_pair > 0.999
    assert stats[0][1] > stats[1][1] > stats[2][1]
    assert stats[0][2] > stats[1][2] > stats[2][2]


def test_single_block_basis_is_identity_gram():
    ops = annulus_ops()
    b = build_basis(None, ops, 6, 4)
    gram = w_gram(b, g_size=0)  # circle blocks only
    s = b.block_slices(0)
    for sl in s:
        block = gram[sl, sl]
        if block.size:
            assert np.abs(block - np.eye(block.shape[0])).max() < 1e-6


def test_matrix_truncation():
    _cut, _ops, b = sphere_basis(count=3, n_lap=12, n_ds=4)
    phi = b.matrix(5)
    assert phi.shape[1] == 5 + 3 * 4
    assert_allclose(phi[:, :5], b.functions[:, :5])
    assert_allclose(phi[:, 5:], b.functions[:, 12:])
    with pytest.raises(ValueError):
        b.matrix(100)


def test_steklov_exceeding_loop_size_rejected():
    ops = annulus_ops(n_rings=8, n_theta=16)
    with pytest.raises(SolverError, match="circle"):
        build_basis(None, ops, 5, 17)


def test_projection_pythagoras_and_truncation_decay():
    # Projecting onto the span splits the energy exactly (any subspace does);
    # the residual of a smooth function shrinks as the Laplacian block grows.
    ops = annulus_ops(n_rings=16, n_theta=64)
    b = build_basis(None, ops, 60, 8)
    W = ops.stiffness
    x = ops.mesh.vertices
    f = np.sin(2.0 * x[:, 0]) * x[:, 1] + 0.3 * x[:, 0]
    residuals = []
    for g_size in (10, 30, 60):
        phi = b.matrix(g_size)
        gram = phi.T @ (W @ phi)
        coef = np.linalg.solve(gram, phi.T @ (W @ f))
        proj = phi @ coef
        res = f - proj
        e_f = float(f @ (W @ f))
        e_p = float(proj @ (W @ proj))
        e_r = float(res @ (W @ res))
        assert abs(e_f - (e_p + e_r)) < 1e-9 * e_f
        residuals.append(e_r / e_f)
    assert residuals[0] > residuals[1] > residuals[2]


def test_report_rows_and_csv(tmp_path):
    _cut, _ops, b = sphere_basis(count=3)
    rows = cross_block_orthogonality_report(b)
    names = {(r["block_a"], r["block_b"]) for r in rows}
    assert ("laplacian", "laplacian") in names
    assert ("laplacian", "circle_1") in names
    assert ("circle_1", "circle_2") in names
    lap_circle = [r for r in rows if r["block_a"] == "laplacian" and r["block_b"] != "laplacian"]
    assert all(r["max_abs"] < 1e-6 for r in lap_circle)
    diag = [r for r in rows if r["block_a"] == r["block_b"]]
    assert all(r["max_abs"] < 1e-6 for r in diag)
    out = tmp_path / "gram.csv"
    write_gram_report(rows, out)
    lines = out.read_text().splitlines()
    assert lines[0] == "block_a,block_b,max_abs,mean_abs"
    assert len(lines) == len(rows) + 1


def test_orthonormality_warning_threshold():
    _cut, _ops, b = sphere_basis(level=3, count=6, n_lap=10, n_ds=6)
    worst, warned = orthonormality_warning(b)
    gram = w_gram(b)
    assert worst == pytest.approx(max_cross_block(gram, b.block_slices()))
    assert warned == (worst > 0.2)
