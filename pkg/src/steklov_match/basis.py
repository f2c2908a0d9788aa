"""Landmark-adapted reduced functional basis.

The basis concatenates one block of Dirichlet-Laplacian eigenfunctions
(vanishing on every landmark circle) with one block of Dirichlet-Steklov
eigenfunctions per circle (harmonic, supported off the other circles). Every
column is normalized to unit norm in the stiffness (Dirichlet-form) inner
product, which makes each block orthonormal and the Laplacian block exactly
orthogonal to every Steklov block; distinct Steklov blocks are only nearly
orthogonal, and the Gram diagnostics below quantify that approximation.
"""

import csv
import warnings

import numpy as np

from .errors import SolverError
from .spectral import dirichlet_laplacian_eigs, dirichlet_steklov_eigs

CROSS_BLOCK_WARN = 0.2


class SpectralBasis:
    """W-normalized basis columns with block bookkeeping.

    Attributes
    ----------
    functions : ndarray, shape (n_vertices, n_laplacian + k * n_steklov)
        Columns ordered [Laplacian block | circle 1 block | ... | circle k].
    laplacian_values : ndarray
        Eigenvalues of the Laplacian block (ascending).
    steklov_values : list of ndarray
        Eigenvalues per circle block (ascending).
    ops : FemOperators
        Operators the basis was built with (supplies the W inner product).
    """

    def __init__(self, functions, laplacian_values, steklov_values, ops):
        self.functions = functions
        self.laplacian_values = np.asarray(laplacian_values)
        self.steklov_values = [np.asarray(v) for v in steklov_values]
        self.ops = ops
        self.n_laplacian = len(self.laplacian_values)
        self.n_steklov = len(self.steklov_values[0]) if self.steklov_values else 0
        self.k = len(self.steklov_values)
        self._matrix_cache = {}

    @property
    def dim(self):
        return self.n_laplacian + self.k * self.n_steklov

    def block_dims(self, g_size=None):
        """Column count per block: [Laplacian, circle 1, ..., circle k]."""
        g = self.n_laplacian if g_size is None else int(g_size)
        return [g] + [self.n_steklov] * self.k

    def block_slices(self, g_size=None):
        dims = self.block_dims(g_size)
        offsets = np.concatenate([[0], np.cumsum(dims)])
        return [slice(int(offsets[i]), int(offsets[i + 1])) for i in range(len(dims))]

    def matrix(self, g_size=None):
        """Basis matrix with the Laplacian block truncated to `g_size` columns.

        The two most recent truncations are cached (refinement asks for each
        size several times in a row).
        """
        if g_size is None or g_size == self.n_laplacian:
            return self.functions
        if not 0 <= g_size <= self.n_laplacian:
            raise ValueError(f"g_size must lie in [0, {self.n_laplacian}]")
        if g_size not in self._matrix_cache:
            if len(self._matrix_cache) >= 2:
                self._matrix_cache.pop(next(iter(self._matrix_cache)))
            self._matrix_cache[g_size] = np.concatenate(
                [self.functions[:, :g_size], self.functions[:, self.n_laplacian:]], axis=1
            )
        return self._matrix_cache[g_size]

    def circle_block(self, j):
        """Columns of circle block j (0-based)."""
        s = self.block_slices()[j + 1]
        return self.functions[:, s]


def build_basis(cut, ops, n_laplacian, n_steklov):
    """Solve both eigenproblems and assemble the W-normalized basis.

    Parameters
    ----------
    cut : CutMesh
    ops : FemOperators
        Must be built for the same cut mesh.
    n_laplacian, n_steklov : int
        Block sizes; `n_steklov` may not exceed any circle's vertex count.
    """
    W = ops.stiffness
    k = len(ops.loops)
    for j, loop in enumerate(ops.loops):
        if n_steklov > len(loop):
            raise SolverError(
                f"circle {j} has {len(loop)} vertices; cannot hold "
                f"{n_steklov} boundary eigenfunctions"
            )
    lap = dirichlet_laplacian_eigs(ops, n_laplacian)
    stek = [dirichlet_steklov_eigs(ops, j, n_steklov) for j in range(k)]
    columns = [_w_normalize(lap.vectors, W)]
    for s in stek:
        columns.append(_w_normalize(s.vectors, W))
    functions = np.concatenate(columns, axis=1)
    return SpectralBasis(
        functions=functions,
        laplacian_values=lap.values,
        steklov_values=[s.values for s in stek],
        ops=ops,
    )


def _w_normalize(vectors, stiffness):
    norms = np.sqrt(np.einsum("ij,ij->j", vectors, stiffness @ vectors))
    if (norms <= 0).any():
        raise SolverError("basis column with non-positive Dirichlet norm")
    return vectors / norms


def w_gram(basis, g_size=None):
    """Dense matrix of stiffness inner products between basis columns."""
    phi = basis.matrix(g_size)
    gram = phi.T @ (basis.ops.stiffness @ phi)
    return (gram + gram.T) / 2.0


def max_cross_block(gram, slices):
    """Largest |entry| outside the diagonal blocks."""
    mask = np.ones(gram.shape, dtype=bool)
    for s in slices:
        mask[s, s] = False
    return float(np.abs(gram[mask]).max()) if mask.any() else 0.0


def orthonormality_warning(basis, g_size=None):
    """Gram diagnostic: returns (max cross-block entry, warned flag)."""
    gram = w_gram(basis, g_size)
    worst = max_cross_block(gram, basis.block_slices(g_size))
    warned = worst > CROSS_BLOCK_WARN
    if warned:
        warnings.warn(
            f"basis blocks deviate from orthogonality (max cross inner "
            f"product {worst:.3f} > {CROSS_BLOCK_WARN}); the orthonormal "
            "approximation used downstream may be inaccurate",
            stacklevel=2,
        )
    return worst, warned


def cross_block_orthogonality_report(basis, g_size=None):
    """Per-block-pair statistics of |W inner products|.

    Returns a list of dicts with keys block_a, block_b, max_abs, mean_abs;
    diagonal entries report the deviation from the identity instead.
    """
    gram = w_gram(basis, g_size)
    slices = basis.block_slices(g_size)
    names = ["laplacian"] + [f"circle_{j + 1}" for j in range(basis.k)]
    rows = []
    for a in range(len(slices)):
        for b in range(a, len(slices)):
            block = gram[slices[a], slices[b]]
            if a == b:
                block = block - np.eye(block.shape[0])
            if block.size == 0:
                continue
            rows.append(
                {
                    "block_a": names[a],
                    "block_b": names[b],
                    "max_abs": float(np.abs(block).max()),
                    "mean_abs": float(np.abs(block).mean()),
                }
            )
    return rows


def write_gram_report(rows, path):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["block_a", "block_b", "max_abs", "mean_abs"])
        writer.writeheader()
        for row in rows:
            writer.writerow(
                {
                    "block_a": row["block_a"],
                    "block_b": row["block_b"],
                    "max_abs": f"{row['max_abs']:.12g}",
                    "mean_abs": f"{row['mean_abs']:.12g}",
                }
            )
