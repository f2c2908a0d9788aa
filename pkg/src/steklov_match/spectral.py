"""Sparse generalized eigensolvers for the two boundary-value problems.

Two problems share the cotangent stiffness matrix W:

* vertex-mass problem ``W psi = lambda A psi`` with zero values prescribed on
  every landmark circle (solved by elimination plus shift-invert Lanczos);
* boundary-mass problem ``W u = sigma S u`` with zero values on all circles
  but one and the spectral parameter in the boundary mass of the remaining
  circle (solved by a Schur complement onto that circle, a dense symmetric
  pencil there, and harmonic extension back to the interior).

Eigenvectors are returned as full-mesh vertex functions (zeros at constrained
vertices), explicitly renormalized against the relevant mass matrix, with
eigenvalues ascending and near-zero modes rejected.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg as dense_linalg
from scipy import sparse
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigsh, splu

from .errors import SolverError

RESIDUAL_TOL = 1e-8


def rejection_threshold(stiffness):
    """Eigenvalues below this are treated as spurious zero modes."""
    return 1e-8 * float(stiffness.diagonal().mean())


@dataclass
class EigenPairSet:
    """Eigenvalues (ascending) with full-mesh eigenvectors as columns.

    `mass_id` names the matrix the vectors are orthonormal against;
    `free_dofs` are the unconstrained vertex indices the problem was solved
    on (residuals are only meaningful there).
    """

    values: np.ndarray
    vectors: np.ndarray
    mass_id: str
    free_dofs: np.ndarray

    def __len__(self):
        return len(self.values)


def _orthonormalize(vectors, mass, support):
    """Explicitly M-orthonormalize columns (Cholesky of the small Gram).

    `support` restricts the Gram computation to the rows where the mass
    matrix lives; the resulting column mixing is applied to every row.
    """
    vs = vectors[support]
    gram = vs.T @ (mass[support][:, support] @ vs)
    try:
        chol = np.linalg.cholesky((gram + gram.T) / 2.0)
    except np.linalg.LinAlgError as exc:
        raise SolverError("eigenvector Gram matrix is not positive definite") from exc
    return dense_linalg.solve_triangular(chol, vectors.T, lower=True).T


def _fix_signs(vectors):
    """Make each column's largest-magnitude entry positive (reproducibility)."""
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _check_residuals(values, vectors, stiffness, mass, free, tol=RESIDUAL_TOL):
    vf = vectors[free]
    wu = stiffness[free][:, free] @ vf
    mu = mass[free][:, free] @ vf
    res = np.linalg.norm(wu - mu * values, axis=0)
    scale = np.linalg.norm(wu, axis=0) + np.abs(values) * np.linalg.norm(mu, axis=0)
    scale[scale == 0] = 1.0
    worst = float((res / scale).max()) if len(values) else 0.0
    if worst > tol:
        raise SolverError(f"eigenpair residual {worst:.3g} exceeds tolerance {tol:.3g}")


def _count_unconstrained_components(mesh, constrained):
    _n_comp, labels = mesh.connected_components()
    has_constraint = np.zeros(labels.max() + 1, dtype=bool)
    if len(constrained):
        has_constraint[labels[constrained]] = True
    return int((~has_constraint[np.unique(labels)]).sum())


def dirichlet_laplacian_eigs(ops, count, constrained=None, tol=RESIDUAL_TOL):
    """Smallest `count` eigenpairs of the vertex-mass problem.

    Parameters
    ----------
    ops : FemOperators
    count : int
        Number of pairs to return (after zero-mode rejection).
    constrained : array_like of int, optional
        Vertices forced to zero; defaults to every landmark circle vertex.

    Raises
    ------
    SolverError
        On non-convergence, or when `count` exceeds the free DOF count.
    """
    W = ops.stiffness
    A = ops.mass
    if constrained is None:
        constrained = ops.loop_dofs()
    constrained = np.asarray(constrained, dtype=np.int64)
    mask = np.ones(ops.n_dofs, dtype=bool)
    if len(constrained):
        mask[constrained] = False
    free = np.flatnonzero(mask)
    if count < 1:
        raise ValueError("count must be >= 1")
    if count > len(free):
        raise SolverError(
            f"requested {count} eigenpairs but only {len(free)} free DOFs exist"
        )
    n_zero = _count_unconstrained_components(ops.mesh, constrained)
    threshold = rejection_threshold(W)

    W_ff = W[free][:, free].tocsc()
    A_ff = A[free][:, free].tocsc()
    k = min(count + n_zero, len(free))
    for _attempt in range(3):
        values, vf = _solve_pencil(W_ff, A_ff, k)
        keep = values > threshold
        if keep.sum() >= count:
            break
        k = min(k + max(2, count // 4), len(free))
    values = values[keep][:count]
    vf = vf[:, keep][:, :count]
    if len(values) < count:
        raise SolverError(
            f"only {len(values)} eigenvalues above the rejection threshold "
            f"{threshold:.3g} were found (requested {count})"
        )
    vectors = np.zeros((ops.n_dofs, count))
    vectors[free] = vf
    vectors = _orthonormalize(vectors, A, free)
    vectors = _fix_signs(vectors)
    _check_residuals(values, vectors, W, A, free, tol=tol)
    return EigenPairSet(values=values, vectors=vectors, mass_id="vertex_lumped", free_dofs=free)


def _solve_pencil(W_ff, A_ff, k):
    """Smallest k eigenpairs of (W_ff, A_ff), dense for small systems."""
    n = W_ff.shape[0]
    if n <= max(400, 2 * k + 2) or k >= n - 1:
        Wd = W_ff.toarray()
        Ad = A_ff.toarray()
        values, vectors = dense_linalg.eigh((Wd + Wd.T) / 2.0, Ad, subset_by_index=(0, k - 1))
        return values, vectors
    lam_scale = float(W_ff.diagonal().mean() / A_ff.diagonal().mean())
    sigma = -1e-3 * lam_scale
    # fixed Lanczos start vector: bit-reproducible runs
    v0 = np.random.default_rng(0x5EED).standard_normal(n)
    try:
        values, vectors = eigsh(W_ff, k=k, M=A_ff, sigma=sigma, which="LM", v0=v0)
    except (ArpackError, ArpackNoConvergence, RuntimeError) as exc:
        raise SolverError(f"sparse eigensolver failed: {exc}") from exc
    order = np.argsort(values)
    return values[order], vectors[:, order]


@dataclass
class BoundaryReduction:
    """Schur complement of the stiffness matrix onto one circle.

    `operator` is the dense symmetric PSD matrix
    ``W_bb - W_bi W_ii^{-1} W_ib`` on the circle vertices `boundary`; the
    pencil (operator, S_bb) has the same finite spectrum as the full sparse
    pencil (W, S). `extend` harmonically extends circle values into the
    interior (zeros on the Dirichlet circles).
    """

    operator: np.ndarray
    boundary: np.ndarray
    interior: np.ndarray
    n_dofs: int
    _interior_solve: object = None
    _w_ib: object = None

    def extend(self, boundary_values):
        """Full-mesh vector(s) from circle values via harmonic extension."""
        bv = np.asarray(boundary_values, dtype=np.float64)
        b = bv[:, np.newaxis] if bv.ndim == 1 else bv
        if b.shape[0] != len(self.boundary):
            raise ValueError("boundary value length mismatch")
        out = np.zeros((self.n_dofs, b.shape[1]))
        out[self.boundary] = b
        if len(self.interior) and self._interior_solve is not None:
            out[self.interior] = -self._interior_solve(self._w_ib @ b)
        return out[:, 0] if bv.ndim == 1 else out


def schur_boundary_reduction(ops, steklov_loop, dirichlet_loops=None):
    """Reduce the stiffness matrix onto one circle's vertices.

    Parameters
    ----------
    ops : FemOperators
    steklov_loop : int or BoundaryLoop
        The circle carrying the spectral boundary condition (an index into
        ``ops.loops`` or the loop itself).
    dirichlet_loops : sequence, optional
        Circles eliminated to zero. Defaults to all other landmark circles.

    Returns
    -------
    BoundaryReduction
    """
    loop = ops.loops[steklov_loop] if isinstance(steklov_loop, (int, np.integer)) else steklov_loop
    if dirichlet_loops is None:
        dirichlet_loops = [l for l in ops.loops if l is not loop]
    W = ops.stiffness.tocsr()
    n = ops.n_dofs
    boundary = np.asarray(loop.vertices, dtype=np.int64)
    constrained = (
        np.concatenate([l.vertices for l in dirichlet_loops])
        if dirichlet_loops
        else np.array([], dtype=np.int64)
    )
    mask = np.ones(n, dtype=bool)
    mask[constrained] = False
    free_mask = mask.copy()
    mask[boundary] = False
    interior = np.flatnonzero(mask)
    if not free_mask[boundary].all():
        raise ValueError("a circle vertex is both Steklov and Dirichlet")

    _check_grounding(ops.mesh, boundary, constrained)

    W_bb = W[boundary][:, boundary].toarray()
    if len(interior) == 0:
        T = (W_bb + W_bb.T) / 2.0
        return BoundaryReduction(operator=T, boundary=boundary, interior=interior, n_dofs=n)
    W_ib = W[interior][:, boundary].toarray()
    W_ii = W[interior][:, interior].tocsc()
    try:
        lu = splu(W_ii)
    except RuntimeError as exc:
        raise SolverError(f"interior stiffness block is singular: {exc}") from exc
    X = lu.solve(W_ib)
    T = W_bb - W_ib.T @ X
    T = (T + T.T) / 2.0
    return BoundaryReduction(
        operator=T,
        boundary=boundary,
        interior=interior,
        n_dofs=n,
        _interior_solve=lu.solve,
        _w_ib=W_ib,
    )


def _check_grounding(mesh, boundary, constrained):
    """Every component must touch either the Steklov circle or a Dirichlet one."""
    _n_comp, labels = mesh.connected_components()
    touched = np.zeros(labels.max() + 1, dtype=bool)
    touched[labels[boundary]] = True
    if len(constrained):
        touched[labels[constrained]] = True
    missing = np.setdiff1d(np.unique(labels), np.flatnonzero(touched))
    if len(missing):
        raise SolverError(
            "a connected component carries no boundary condition; every "
            "component needs at least one landmark"
        )


def dirichlet_steklov_eigs(ops, loop_index, count, dirichlet_loops=None, tol=RESIDUAL_TOL):
    """Smallest `count` finite eigenpairs of the boundary-mass problem.

    The circle `loop_index` carries the spectral condition; all other circles
    are held at zero (pass `dirichlet_loops=[]` for a single-circle
    component, where only the spectral condition applies and the constant
    zero mode is rejected).
    """
    loop = ops.loops[loop_index]
    S = ops.boundary_mass[loop_index]
    if count < 1:
        raise ValueError("count must be >= 1")
    reduction = schur_boundary_reduction(ops, loop_index, dirichlet_loops=dirichlet_loops)
    b = reduction.boundary
    if count > len(b):
        raise SolverError(
            f"circle has {len(b)} vertices, so only {len(b)} finite "
            f"eigenvalues exist (requested {count})"
        )
    S_bb = S[b][:, b].toarray()
    try:
        values, vb = dense_linalg.eigh(reduction.operator, (S_bb + S_bb.T) / 2.0)
    except dense_linalg.LinAlgError as exc:
        raise SolverError(f"dense boundary eigensolve failed: {exc}") from exc
    threshold = rejection_threshold(ops.stiffness)
    keep = values > threshold
    values = values[keep][:count]
    vb = vb[:, keep][:, :count]
    if len(values) < count:
        raise SolverError(
            f"only {len(values)} eigenvalues above the rejection threshold "
            f"(requested {count})"
        )
    vectors = reduction.extend(vb)
    free = np.sort(np.concatenate([reduction.boundary, reduction.interior]))
    vectors = _orthonormalize(vectors, S, b)
    vectors = _fix_signs(vectors)
    _check_residuals(values, vectors, ops.stiffness, S, free, tol=tol)
    return EigenPairSet(
        values=values,
        vectors=vectors,
        mass_id=f"boundary_{loop_index}_{ops.steklov_variant}",
        free_dofs=free,
    )
