"""Correspondence engine: energies, initialization, iterative refinement.

The pipeline couples two triangle meshes ("a" and "b") cut at corresponding
landmarks. Functional maps are stored block-diagonally: one block for the
Laplacian part of the basis and one square block per landmark circle; cross
terms are structurally zero. `fmap_ab` maps coefficients in shape a's basis
to coefficients in shape b's basis and corresponds to the vertex map
`map_b_to_a` (its pullback); both directions are optimized jointly.

Throughout, the reduced bases are treated as orthonormal in the Dirichlet
inner product, which turns the basis pseudoinverse into `phi^T W` and the
conformal energy into `||I - F^T F||_F^2`; the Gram diagnostics in `basis`
quantify the quality of that approximation per run.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import splu
from scipy.spatial import cKDTree

from .errors import LandmarkError, SolverError

KDTREE_MAX_DIM = 30


@dataclass
class EnergyWeights:
    """Nonnegative weights of the three energy terms (not all zero)."""

    conformal: float = 1.0
    properness: float = 1.0
    invertibility: float = 1.0

    def __post_init__(self):
        w = (self.conformal, self.properness, self.invertibility)
        if any(x < 0 for x in w):
            raise ValueError("energy weights must be nonnegative")
        if all(x == 0 for x in w):
            raise ValueError("at least one energy weight must be positive")

    def as_tuple(self):
        return (self.conformal, self.properness, self.invertibility)


class BlockFunctionalMap:
    """Block-diagonal functional map between two reduced bases.

    `blocks[0]` is the Laplacian block (possibly 0x0 before refinement
    starts); `blocks[1:]` are the per-circle blocks. The assembled matrix
    maps "from"-basis coefficients to "to"-basis coefficients.
    """

    def __init__(self, blocks):
        self.blocks = [np.asarray(b, dtype=np.float64) for b in blocks]

    @property
    def g_shape(self):
        return self.blocks[0].shape

    def as_matrix(self):
        rows = sum(b.shape[0] for b in self.blocks)
        cols = sum(b.shape[1] for b in self.blocks)
        out = np.zeros((rows, cols))
        r = c = 0
        for b in self.blocks:
            out[r:r + b.shape[0], c:c + b.shape[1]] = b
            r += b.shape[0]
            c += b.shape[1]
        return out

    @classmethod
    def from_full(cls, full, row_slices, col_slices):
        """Keep the diagonal blocks of `full`, zeroing all cross terms."""
        if len(row_slices) != len(col_slices):
            raise ValueError("row/column block counts differ")
        return cls([full[r, c] for r, c in zip(row_slices, col_slices)])

    def copy(self):
        return BlockFunctionalMap([b.copy() for b in self.blocks])


@dataclass
class VertexMap:
    """Per-vertex correspondence: `target[v]` is the image of vertex v."""

    target: np.ndarray
    distance: np.ndarray = None

    def __post_init__(self):
        self.target = np.asarray(self.target, dtype=np.int64)

    def __len__(self):
        return len(self.target)


def save_vertex_map(vmap, path):
    """One line per source vertex: target index, optionally the NN distance."""
    with open(path, "w") as fh:
        if vmap.distance is None:
            for t in vmap.target:
                fh.write(f"{int(t)}\n")
        else:
            for t, d in zip(vmap.target, vmap.distance):
                fh.write(f"{int(t)} {d:.17g}\n")


def load_vertex_map(path):
    targets = []
    dists = []
    with open(path) as fh:
        for raw in fh:
            parts = raw.split()
            if not parts:
                continue
            targets.append(int(parts[0]))
            if len(parts) > 1:
                dists.append(float(parts[1]))
    dist = np.array(dists) if len(dists) == len(targets) and dists else None
    return VertexMap(target=np.array(targets, dtype=np.int64), distance=dist)


# -- shape bundle -------------------------------------------------------------


@dataclass
class ShapeData:
    """Everything the matcher needs about one cut shape."""

    cut: object
    ops: object
    basis: object
    _harmonics: np.ndarray = field(default=None, repr=False)

    @property
    def n_vertices(self):
        return self.cut.mesh.n_vertices

    def circle_boundary_basis(self, j):
        """Boundary restriction of circle block j, orthonormal in the
        circle's boundary mass (columns scaled back from the Dirichlet-norm
        normalization by the square root of the eigenvalue)."""
        loop = self.ops.loops[j]
        block = self.basis.circle_block(j)[loop.vertices]
        return block * np.sqrt(self.basis.steklov_values[j])[np.newaxis, :]

    def harmonics(self):
        if self._harmonics is None:
            self._harmonics = landmark_harmonics(self.ops)
        return self._harmonics


# -- energy terms -------------------------------------------------------------


def conformal_energy(fmap, gram_from=None, gram_to=None):
    """Deviation of the map from preserving the Dirichlet inner product.

    With the orthonormal approximation (default) this is ``||I - F^T F||_F^2``
    summed over the diagonal blocks; explicit Gram matrices give the general
    quadratic form instead.
    """
    if isinstance(fmap, BlockFunctionalMap) and gram_from is None and gram_to is None:
        total = 0.0
        for b in fmap.blocks:
            d = b.shape[1]
            total += float(np.linalg.norm(np.eye(d) - b.T @ b) ** 2)
        return total
    f = fmap.as_matrix() if isinstance(fmap, BlockFunctionalMap) else np.asarray(fmap)
    g_from = np.eye(f.shape[1]) if gram_from is None else gram_from
    g_to = np.eye(f.shape[0]) if gram_to is None else gram_to
    return float(np.linalg.norm(g_from - f.T @ g_to @ f) ** 2)


def properness_energy(fmap, pointwise_full):
    """Distance of the stored map from the one induced by the vertex map.

    `pointwise_full` is the unprojected coefficient matrix computed from the
    vertex map (see `functional_from_pointwise`).
    """
    f = fmap.as_matrix() if isinstance(fmap, BlockFunctionalMap) else np.asarray(fmap)
    return float(np.linalg.norm(pointwise_full - f) ** 2)


def invertibility_energy(fmap_ab, fmap_ba):
    """``||F_ab F_ba - I||_F^2`` blockwise (identity on the "b" side)."""
    total = 0.0
    for b_ab, b_ba in zip(fmap_ab.blocks, fmap_ba.blocks):
        d = b_ab.shape[0]
        total += float(np.linalg.norm(b_ab @ b_ba - np.eye(d)) ** 2)
    return total


def functional_from_pointwise(shape_from, shape_to, map_to_from, g_size):
    """Coefficient matrix of the pullback of a vertex map (unprojected).

    `map_to_from[v]` gives, for each vertex of the "to" shape, its image on
    the "from" shape. Uses the orthonormal-basis pseudoinverse `phi^T W`.
    """
    phi_from = shape_from.basis.matrix(g_size)
    phi_to = shape_to.basis.matrix(g_size)
    pulled = phi_from[map_to_from]
    return phi_to.T @ (shape_to.ops.stiffness @ pulled)


def total_energy(fmap_ab, fmap_ba, pointwise_ba_full, pointwise_ab_full, weights):
    """Weighted energies of both directions, with per-term breakdown."""
    a_c, a_p, a_i = weights.as_tuple()

    def one(f_fwd, f_bwd, pointwise_full):
        e_c = conformal_energy(f_fwd)
        e_p = properness_energy(f_fwd, pointwise_full)
        e_i = invertibility_energy(f_fwd, f_bwd)
        return {
            "conformal": e_c,
            "properness": e_p,
            "invertibility": e_i,
            "total": a_c * e_c + a_p * e_p + a_i * e_i,
        }

    return one(fmap_ab, fmap_ba, pointwise_ba_full), one(fmap_ba, fmap_ab, pointwise_ab_full)


# -- initialization -----------------------------------------------------------


def landmark_harmonics(ops):
    """One harmonic function per circle: 1 on its circle, 0 on the others.

    Pre-existing boundaries carry the natural (Neumann) condition, which
    needs no matrix modification. Returns an (n_vertices, k) array.
    """
    k = len(ops.loops)
    n = ops.n_dofs
    if k == 0:
        return np.zeros((n, 0))
    W = ops.stiffness.tocsr()
    constrained = ops.loop_dofs()
    mask = np.ones(n, dtype=bool)
    mask[constrained] = False
    free = np.flatnonzero(mask)
    out = np.zeros((n, k))
    for j, loop in enumerate(ops.loops):
        out[loop.vertices, j] = 1.0
    if len(free):
        try:
            lu = splu(W[free][:, free].tocsc())
        except RuntimeError as exc:
            raise SolverError(f"stiffness factorization failed: {exc}") from exc
        rhs = -W[free][:, constrained] @ out[constrained]
        out[free] = lu.solve(rhs)
    return out


def boundary_normal_derivatives(shape, h_values, loop_index):
    """Smoothed outward normal derivative of `h_values` on one circle.

    The weak normal derivative is the stiffness residual restricted to the
    circle; projecting it onto the circle's boundary eigenbasis both divides
    out the boundary mass and suppresses the high frequencies the reduced
    basis cannot represent. Accepts a vector or a stacked (n, m) array and
    returns values ordered like the loop's vertices.
    """
    loop = shape.ops.loops[loop_index]
    flux = (shape.ops.stiffness @ h_values)[loop.vertices]
    basis_b = shape.circle_boundary_basis(loop_index)
    return basis_b @ (basis_b.T @ flux)


def _circular_interp(theta, values, query):
    """Periodic linear interpolation of samples (theta sorted in [0,1))."""
    t_ext = np.concatenate([theta, [theta[0] + 1.0]])
    v_ext = np.concatenate([values, values[:1]])
    q = np.mod(query - theta[0], 1.0) + theta[0]
    return np.interp(q, t_ext, v_ext)


def _circular_nearest(theta_targets, query):
    """Index of the circularly nearest sample for each query coordinate."""
    n = len(theta_targets)
    q = np.mod(query, 1.0)
    pos = np.searchsorted(theta_targets, q)
    left = (pos - 1) % n
    right = pos % n
    d_left = np.abs(q - theta_targets[left])
    d_left = np.minimum(d_left, 1.0 - d_left)
    d_right = np.abs(q - theta_targets[right])
    d_right = np.minimum(d_right, 1.0 - d_right)
    # ties go to the smaller vertex position along the loop
    pick_left = (d_left < d_right) | ((d_left == d_right) & (left < right))
    return np.where(pick_left, left, right)


def optimal_circle_shift(theta_a, profiles_a, quad_weights_a, theta_b, profiles_b, n_candidates=None):
    """Best rotation aligning two stacks of circular profiles.

    Minimizes the quadrature-weighted squared mismatch between the "a"
    profiles sampled at theta and the "b" profiles sampled at theta - alpha,
    over a uniform candidate grid (default resolution: the denser loop).
    Ties break toward the smallest shift.
    """
    profiles_a = np.atleast_2d(np.asarray(profiles_a, dtype=np.float64).T).T
    profiles_b = np.atleast_2d(np.asarray(profiles_b, dtype=np.float64).T).T
    if n_candidates is None:
        n_candidates = max(len(theta_a), len(theta_b))
    candidates = np.arange(n_candidates) / n_candidates
    cost = np.zeros(n_candidates)
    for alpha_idx, alpha in enumerate(candidates):
        q = np.mod(theta_a - alpha, 1.0)
        acc = 0.0
        for col in range(profiles_a.shape[1]):
            diff = profiles_a[:, col] - _circular_interp(theta_b, profiles_b[:, col], q)
            acc += float(np.sum(quad_weights_a * diff**2))
        cost[alpha_idx] = acc
    return float(candidates[int(np.argmin(cost))])


def circle_vertex_maps(shape_a, shape_b, loop_index, alpha):
    """Circle-to-circle vertex correspondences for one shift.

    With the convention that the point of circle a at coordinate theta
    matches the point of circle b at coordinate theta - alpha, returns
    (map_b_to_a, map_a_to_b) as index arrays into the loops' vertex order.
    """
    theta_a = shape_a.cut.thetas[loop_index]
    theta_b = shape_b.cut.thetas[loop_index]
    b_to_a = _circular_nearest(theta_a, theta_b + alpha)
    a_to_b = _circular_nearest(theta_b, theta_a - alpha)
    return b_to_a, a_to_b


def _circle_fmap_block(shape_from, shape_to, loop_index, circle_map_to_from):
    """Functional map block of one circle from its vertex correspondence.

    Implements the basis pseudoinverse restricted to the circle: with the
    boundary-orthonormal restrictions U and the "to" circle's boundary mass
    S, the block is diag(sqrt(sig_to)) U_to^T S U_from[map] diag(1/sqrt(sig_from)).
    """
    u_from = shape_from.circle_boundary_basis(loop_index)
    u_to = shape_to.circle_boundary_basis(loop_index)
    loop_to = shape_to.ops.loops[loop_index]
    s_to = shape_to.ops.boundary_mass[loop_index]
    s_bb = s_to[loop_to.vertices][:, loop_to.vertices]
    m = u_to.T @ (s_bb @ u_from[circle_map_to_from])
    sig_from = shape_from.basis.steklov_values[loop_index]
    sig_to = shape_to.basis.steklov_values[loop_index]
    return np.sqrt(sig_to)[:, np.newaxis] * m / np.sqrt(sig_from)[np.newaxis, :]


def _loops_per_component(shape):
    """Component label of each circle and loop counts per component."""
    _n, labels = shape.cut.mesh.connected_components()
    loop_labels = np.array([labels[loop.vertices[0]] for loop in shape.ops.loops])
    counts = {lab: int((loop_labels == lab).sum()) for lab in set(loop_labels.tolist())}
    return loop_labels, counts


def initial_functional_maps(shape_a, shape_b, strategy="normal-derivatives", n_shift_candidates=None):
    """Initial block functional maps from the circle correspondences.

    Strategies: "normal-derivatives" orients each circle by matching the
    directions toward the other landmarks (falling back to a zero shift on
    single-circle components); "trivial" uses zero shifts; "conformal-energy"
    picks each shift by minimizing the conformal energy of its circle block.
    The Laplacian blocks start empty (0 x 0).
    """
    k = len(shape_a.ops.loops)
    if k != len(shape_b.ops.loops):
        raise LandmarkError("landmark counts differ between the shapes")
    if k == 0:
        raise LandmarkError("matching requires at least one landmark")
    if strategy not in ("normal-derivatives", "trivial", "conformal-energy"):
        raise ValueError(f"unknown initialization strategy '{strategy}'")

    alphas = np.zeros(k)
    if strategy == "normal-derivatives":
        labels_a, counts_a = _loops_per_component(shape_a)
        labels_b, counts_b = _loops_per_component(shape_b)
        h_a = shape_a.harmonics()
        h_b = shape_b.harmonics()
        for j in range(k):
            if counts_a[labels_a[j]] < 2 or counts_b[labels_b[j]] < 2:
                continue  # no other circle to orient against: keep zero shift
            others_a = [l for l in range(k) if l != j and labels_a[l] == labels_a[j]]
            others_b = [l for l in range(k) if l != j and labels_b[l] == labels_b[j]]
            common = sorted(set(others_a) & set(others_b))
            if not common:
                continue
            prof_a = boundary_normal_derivatives(shape_a, h_a[:, common], j)
            prof_b = boundary_normal_derivatives(shape_b, h_b[:, common], j)
            loop_a = shape_a.ops.loops[j]
            quad = 0.5 * (loop_a.edge_lengths + np.roll(loop_a.edge_lengths, 1))
            alphas[j] = optimal_circle_shift(
                shape_a.cut.thetas[j], prof_a, quad,
                shape_b.cut.thetas[j], prof_b,
                n_candidates=n_shift_candidates,
            )
    elif strategy == "conformal-energy":
        for j in range(k):
            n_cand = n_shift_candidates or max(
                len(shape_a.ops.loops[j]), len(shape_b.ops.loops[j])
            )
            candidates = np.arange(n_cand) / n_cand
            costs = np.empty(n_cand)
            for idx, alpha in enumerate(candidates):
                b_to_a, _ = circle_vertex_maps(shape_a, shape_b, j, alpha)
                block = _circle_fmap_block(shape_a, shape_b, j, b_to_a)
                costs[idx] = np.linalg.norm(np.eye(block.shape[1]) - block.T @ block) ** 2
            alphas[j] = float(candidates[int(np.argmin(costs))])

    blocks_ab = [np.zeros((0, 0))]
    blocks_ba = [np.zeros((0, 0))]
    for j in range(k):
        b_to_a, a_to_b = circle_vertex_maps(shape_a, shape_b, j, float(alphas[j]))
        blocks_ab.append(_circle_fmap_block(shape_a, shape_b, j, b_to_a))
        blocks_ba.append(_circle_fmap_block(shape_b, shape_a, j, a_to_b))
    return BlockFunctionalMap(blocks_ab), BlockFunctionalMap(blocks_ba), alphas


# -- pointwise conversion -----------------------------------------------------


def _nearest_rows(targets, queries, workers=1, return_distance=False):
    """Index of the Euclidean-nearest target row per query row.

    Exact KD-tree up to KDTREE_MAX_DIM columns; above that, blocked brute
    force: per target block, one matrix product plus a running minimum, so
    the score matrix never materializes in full. Ties resolve to the
    smallest target index.
    """
    if targets.shape[0] == 0:
        raise ValueError("empty target set")
    if targets.shape[1] <= KDTREE_MAX_DIM:
        tree = cKDTree(targets)
        dist, idx = tree.query(queries, k=1, workers=workers)
        idx = np.asarray(idx, dtype=np.int64)
        return (idx, np.asarray(dist)) if return_distance else idx
    n_t = len(targets)
    q_chunk = 1024
    t_block = 1024
    half_sq = 0.5 * np.einsum("ij,ij->i", targets, targets)
    out = np.empty(len(queries), dtype=np.int64)
    best_all = np.empty(len(queries))
    for s in range(0, len(queries), q_chunk):
        q = queries[s:s + q_chunk]
        best = np.full(len(q), np.inf)
        best_idx = np.zeros(len(q), dtype=np.int64)
        for tb in range(0, n_t, t_block):
            block = targets[tb:tb + t_block]
            scores = q @ block.T
            scores -= half_sq[tb:tb + t_block][np.newaxis, :]
            loc = np.argmax(scores, axis=1)  # argmax(q.t - |t|^2/2) = argmin dist
            val = -scores[np.arange(len(q)), loc]
            better = val < best  # strict: earlier blocks keep ties
            best_idx = np.where(better, loc + tb, best_idx)
            best = np.where(better, val, best)
        out[s:s + q_chunk] = best_idx
        best_all[s:s + q_chunk] = best
    if not return_distance:
        return out
    # |q - t|^2 = |q|^2 + 2 * (|t|^2/2 - q.t) = |q|^2 + 2 * best
    q_sq = np.einsum("ij,ij->i", queries, queries)
    d2 = np.maximum(q_sq + 2.0 * best_all, 0.0)
    return out, np.sqrt(d2)


def p2p_from_functional(
    shape_a,
    shape_b,
    fmap_ab,
    fmap_ba,
    g_size,
    mode="fast",
    weights=None,
    workers=1,
    query_rows=None,
    target_rows=None,
    return_distance=False,
):
    """Vertex map b -> a minimizing the energy for fixed functional maps.

    Builds the three energy-term embeddings (conformal, properness,
    invertibility) of every vertex; "principled" mode concatenates them,
    "fast" mode sums them (one third the search width). Row subsets restrict
    the query (b) and target (a) vertex sets; returned indices refer to
    positions within `target_rows` when given.
    """
    weights = weights or EnergyWeights()
    f_ab = fmap_ab.as_matrix()
    f_ba = fmap_ba.as_matrix()
    phi_a = shape_a.basis.matrix(g_size)
    phi_b = shape_b.basis.matrix(g_size)
    if f_ab.shape != (phi_b.shape[1], phi_a.shape[1]):
        raise ValueError("functional map size does not match basis size")
    sc, sp, si = (np.sqrt(w) for w in weights.as_tuple())
    if mode == "fast":
        # sum the term embeddings: fold the coefficient matrices first so a
        # single basis product per side replaces three
        d_a = phi_a.shape[1]
        d_b = phi_b.shape[1]
        if d_a != d_b:
            raise ValueError("fast mode needs equal basis dimensions on both shapes")
        targets = phi_a @ (sc * f_ab.T + sp * np.eye(d_a) + si * f_ba)
        queries = phi_b @ ((sc + si) * np.eye(d_b) + sp * f_ab)
    elif mode == "principled":
        targets = np.concatenate(
            [sc * (phi_a @ f_ab.T), sp * phi_a, si * (phi_a @ f_ba)], axis=1
        )
        queries = np.concatenate(
            [sc * phi_b, sp * (phi_b @ f_ab), si * phi_b], axis=1
        )
    else:
        raise ValueError(f"unknown conversion mode '{mode}'")
    if target_rows is not None:
        targets = targets[target_rows]
    if query_rows is not None:
        queries = queries[query_rows]
    return _nearest_rows(targets, queries, workers=workers, return_distance=return_distance)


# -- refinement ---------------------------------------------------------------


def refine(
    shape_a,
    shape_b,
    fmap_ab,
    fmap_ba,
    n_laplacian_target,
    k_step=10,
    mode="fast",
    weights=None,
    workers=1,
):
    """Alternate vertex-map conversion and spectral upsampling.

    Starting from circle-only functional maps, repeatedly (1) convert both
    functional maps to vertex maps, (2) enlarge the Laplacian blocks by
    `k_step` eigenfunctions, (3) recompute both maps from the vertex maps
    and project them back to block-diagonal form, until the Laplacian block
    reaches `n_laplacian_target`. Only the Laplacian part grows; the circle
    blocks stay at their fixed size.

    Returns the final maps, the last vertex maps (cut-mesh indexing, full
    vertex sets) and a per-iteration energy log.
    """
    weights = weights or EnergyWeights()
    if n_laplacian_target > shape_a.basis.n_laplacian or n_laplacian_target > shape_b.basis.n_laplacian:
        raise ValueError("refinement target exceeds the precomputed basis size")
    if k_step < 1:
        raise ValueError("k_step must be >= 1")
    g = fmap_ab.g_shape[1]
    energy_log = []
    iteration = 0
    map_b_to_a = map_a_to_b = None
    while g < n_laplacian_target:
        iteration += 1
        map_b_to_a = p2p_from_functional(
            shape_a, shape_b, fmap_ab, fmap_ba, g, mode=mode, weights=weights, workers=workers
        )
        map_a_to_b = p2p_from_functional(
            shape_b, shape_a, fmap_ba, fmap_ab, g, mode=mode, weights=weights, workers=workers
        )
        g = min(g + k_step, n_laplacian_target)
        full_ab = functional_from_pointwise(shape_a, shape_b, map_b_to_a, g)
        full_ba = functional_from_pointwise(shape_b, shape_a, map_a_to_b, g)
        slices_a = shape_a.basis.block_slices(g)
        slices_b = shape_b.basis.block_slices(g)
        fmap_ab = BlockFunctionalMap.from_full(full_ab, slices_b, slices_a)
        fmap_ba = BlockFunctionalMap.from_full(full_ba, slices_a, slices_b)
        e_ab, e_ba = total_energy(fmap_ab, fmap_ba, full_ab, full_ba, weights)
        if not (np.isfinite(e_ab["total"]) and np.isfinite(e_ba["total"])):
            raise SolverError("non-finite energy during refinement")
        energy_log.append({"iteration": iteration, "g_size": g, "ab": e_ab, "ba": e_ba})
    return fmap_ab, fmap_ba, map_b_to_a, map_a_to_b, energy_log


def final_vertex_maps(
    shape_a, shape_b, fmap_ab, fmap_ba, g_size,
    mode="fast", weights=None, workers=1, with_distances=False,
):
    """Final conversion restricted to surviving original vertices.

    Queries and targets both range over the cut meshes' original (non
    inserted, non landmark) vertices; results are expressed in original-mesh
    indexing. With `with_distances`, each partial map carries the embedding
    NN distance per source vertex.
    """
    rows_a = shape_a.cut.original_rows
    rows_b = shape_b.cut.original_rows
    res_ba = p2p_from_functional(
        shape_a, shape_b, fmap_ab, fmap_ba, g_size,
        mode=mode, weights=weights, workers=workers,
        query_rows=rows_b, target_rows=rows_a, return_distance=with_distances,
    )
    res_ab = p2p_from_functional(
        shape_b, shape_a, fmap_ba, fmap_ab, g_size,
        mode=mode, weights=weights, workers=workers,
        query_rows=rows_a, target_rows=rows_b, return_distance=with_distances,
    )
    q_ba, d_ba = res_ba if with_distances else (res_ba, None)
    q_ab, d_ab = res_ab if with_distances else (res_ab, None)
    src_a = shape_a.cut.source_vertex
    src_b = shape_b.cut.source_vertex
    partial_b_to_a = (src_b[rows_b], src_a[rows_a[q_ba]], d_ba)
    partial_a_to_b = (src_a[rows_a], src_b[rows_b[q_ab]], d_ab)
    return partial_b_to_a, partial_a_to_b


def reinsert_landmarks(partial_map, landmarks_from, landmarks_to, n_source_vertices):
    """Complete a partial original-vertex map by pinning the landmark rows.

    `partial_map` is a (source indices, target indices[, distances]) tuple
    covering every original non-landmark source vertex; landmark i of the
    source shape maps to landmark i of the target shape exactly (at
    distance 0 when distances are carried).
    """
    src, dst = partial_map[0], partial_map[1]
    dist = partial_map[2] if len(partial_map) > 2 else None
    out = np.full(n_source_vertices, -1, dtype=np.int64)
    out[src] = dst
    out[np.asarray(landmarks_from, dtype=np.int64)] = np.asarray(landmarks_to, dtype=np.int64)
    if (out < 0).any():
        raise ValueError("partial map does not cover all non-landmark vertices")
    distance = None
    if dist is not None:
        distance = np.zeros(n_source_vertices)
        distance[src] = dist
    return VertexMap(target=out, distance=distance)
