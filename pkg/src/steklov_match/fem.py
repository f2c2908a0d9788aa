"""Piecewise-linear FEM operators on triangle meshes.

Assembles the cotangent stiffness matrix, the lumped vertex mass matrix and
the one-dimensional boundary mass matrices used by the Steklov eigenproblem
(in lumped and consistent variants), plus the Dirichlet bookkeeping shared by
the eigensolvers. The quadratic form ``f^T W f`` of the stiffness matrix
equals the Dirichlet energy of the piecewise-linear interpolant of ``f``.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .errors import MeshError


def assemble_stiffness(mesh):
    """Cotangent stiffness matrix (symmetric csr, constants in the kernel).

    Edge weights are ``w_uv = (cot(alpha) + cot(beta)) / 2`` over the one or
    two angles opposite the edge; diagonal entries make row sums vanish.
    """
    v = mesh.vertices
    f = mesh.faces
    n = mesh.n_vertices
    if (mesh.face_areas <= 0).any():
        raise MeshError("mesh contains a zero-area triangle")
    i_idx = []
    j_idx = []
    vals = []
    for k in range(3):
        a = f[:, k]
        b = f[:, (k + 1) % 3]
        c = f[:, (k + 2) % 3]
        # cotangent of the angle at c, opposite edge (a, b)
        ea = v[a] - v[c]
        eb = v[b] - v[c]
        cross = np.linalg.norm(np.cross(ea, eb), axis=1)
        cot = np.einsum("ij,ij->i", ea, eb) / cross
        w = 0.5 * cot
        i_idx.extend([a, b, a, b])
        j_idx.extend([b, a, a, b])
        vals.extend([-w, -w, w, w])
    i_idx = np.concatenate(i_idx)
    j_idx = np.concatenate(j_idx)
    vals = np.concatenate(vals)
    W = sparse.csr_matrix((vals, (i_idx, j_idx)), shape=(n, n))
    W.sum_duplicates()
    return W


def assemble_lumped_mass(mesh):
    """Diagonal vertex mass matrix: one third of incident triangle area.

    A zero diagonal entry (a vertex in no triangle) makes the matrix only
    positive semi-definite; such vertices are flagged with a warning.
    """
    areas = mesh.vertex_areas()
    n_zero = int((areas <= 0.0).sum())
    if n_zero:
        warnings.warn(
            f"lumped mass matrix has {n_zero} zero diagonal entries "
            "(isolated vertices); it is not positive definite",
            stacklevel=2,
        )
    return sparse.dia_matrix((areas[np.newaxis, :], [0]), shape=(len(areas),) * 2).tocsr()


def assemble_steklov_mass(loop, n_vertices, variant="lumped"):
    """Boundary mass matrix of one loop, supported on its vertices only.

    Parameters
    ----------
    loop : BoundaryLoop
    n_vertices : int
        Size of the full (mesh) index space.
    variant : str
        "lumped": diagonal, half the two incident edge lengths.
        "fem": consistent 1D piecewise-linear mass, a third of the incident
        edge lengths on the diagonal and a sixth of the edge length on
        loop-adjacent off-diagonals.
    """
    ids = loop.vertices
    lens = loop.edge_lengths  # lens[i] is the edge from ids[i] to ids[i+1]
    prev_len = np.roll(lens, 1)  # edge arriving at ids[i]
    if variant == "lumped":
        diag = 0.5 * (prev_len + lens)
        return sparse.csr_matrix((diag, (ids, ids)), shape=(n_vertices, n_vertices))
    if variant == "fem":
        diag = (prev_len + lens) / 3.0
        nxt = np.roll(ids, -1)
        rows = np.concatenate([ids, ids, nxt])
        cols = np.concatenate([ids, nxt, ids])
        vals = np.concatenate([diag, lens / 6.0, lens / 6.0])
        m = sparse.csr_matrix((vals, (rows, cols)), shape=(n_vertices, n_vertices))
        m.sum_duplicates()
        return m
    raise ValueError(f"unknown Steklov mass variant '{variant}'")


def apply_dirichlet(matrix, constrained):
    """Eliminate constrained rows and columns.

    Returns the reduced matrix and the indices of the free DOFs. Raises when
    every DOF is constrained.
    """
    n = matrix.shape[0]
    mask = np.ones(n, dtype=bool)
    mask[np.asarray(constrained, dtype=np.int64)] = False
    free = np.flatnonzero(mask)
    if len(free) == 0:
        raise MeshError("cannot constrain every degree of freedom")
    reduced = matrix.tocsr()[free][:, free]
    return reduced, free


@dataclass
class FemOperators:
    """Assembled operators for one (cut) mesh.

    Attributes
    ----------
    mesh : TriangleMesh
    stiffness : csr_matrix
        Cotangent stiffness W.
    mass : csr_matrix
        Lumped vertex mass A (diagonal).
    boundary_mass : list of csr_matrix
        One Steklov mass matrix per landmark circle, full-size but supported
        only on that loop.
    loops : list of BoundaryLoop
        The landmark circles, same order as `boundary_mass`.
    neumann_loops : list of BoundaryLoop
        Pre-existing boundaries; they need no matrix modification.
    steklov_variant : str
    """

    mesh: object
    stiffness: sparse.csr_matrix
    mass: sparse.csr_matrix
    boundary_mass: list = field(default_factory=list)
    loops: list = field(default_factory=list)
    neumann_loops: list = field(default_factory=list)
    steklov_variant: str = "lumped"

    @classmethod
    def build(cls, cut, steklov_variant="lumped"):
        """Assemble all operators for a CutMesh."""
        mesh = cut.mesh
        W = assemble_stiffness(mesh)
        A = assemble_lumped_mass(mesh)
        S = [
            assemble_steklov_mass(loop, mesh.n_vertices, variant=steklov_variant)
            for loop in cut.loops
        ]
        return cls(
            mesh=mesh,
            stiffness=W,
            mass=A,
            boundary_mass=S,
            loops=list(cut.loops),
            neumann_loops=list(cut.neumann_loops),
            steklov_variant=steklov_variant,
        )

    @property
    def n_dofs(self):
        return self.stiffness.shape[0]

    def loop_dofs(self, which=None):
        """Concatenated vertex ids of the selected loops (all by default)."""
        loops = self.loops if which is None else [self.loops[i] for i in which]
        if not loops:
            return np.array([], dtype=np.int64)
        return np.concatenate([loop.vertices for loop in loops])

    def interior_dofs(self):
        """Vertices on no landmark circle (Neumann boundaries count as interior)."""
        mask = np.ones(self.n_dofs, dtype=bool)
        gamma = self.loop_dofs()
        if len(gamma):
            mask[gamma] = False
        return np.flatnonzero(mask)

    def dump_triplets(self, path, which="stiffness"):
        """Write a matrix in coordinate (row col value) text format."""
        m = {"stiffness": self.stiffness, "mass": self.mass}[which].tocoo()
        with open(path, "w") as fh:
            fh.write(f"# {which} {m.shape[0]} {m.shape[1]} {m.nnz}\n")
            for r, c, x in zip(m.row, m.col, m.data):
                fh.write(f"{r} {c} {x:.17g}\n")


def dirichlet_energy(stiffness, values):
    """Quadratic form values^T W values (Dirichlet energy of the interpolant)."""
    values = np.asarray(values, dtype=np.float64)
    return float(values @ (stiffness @ values))
