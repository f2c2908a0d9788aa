"""Quantitative map assessment: geodesic-error curves and map smoothness.

Error follows the cumulative-curve protocol: the per-vertex error of a map
against a ground-truth map is the geodesic distance on the target mesh
between the two image vertices, normalized by the target's geodesic
diameter; the curve reports the percentage of vertices below each threshold.
Map smoothness is measured by the discrete Dirichlet energy, a cotangent
weighted sum of squared geodesic distances between the images of edge
endpoints.
"""

import csv
import warnings

import numpy as np

from .geodesics import geodesic_diameter, geodesic_distances

DEFAULT_THRESHOLDS = np.round(np.arange(0.0, 0.2500001, 0.01), 10)


class ErrorCurve:
    """Cumulative geodesic-error summary of a map.

    Attributes
    ----------
    thresholds : ndarray
        Error thresholds as fractions of the geodesic diameter; the last
        threshold always covers the largest observed error, so the curve
        terminates at 100%.
    percentages : ndarray
        Percentage of correspondences with error <= threshold.
    errors : ndarray
        Per-vertex normalized errors.
    mean_error : float
        Mean normalized error (multiply by 100 for the reporting convention).
    """

    def __init__(self, errors, thresholds=None):
        errors = np.asarray(errors, dtype=np.float64)
        if thresholds is None:
            thresholds = DEFAULT_THRESHOLDS
        thresholds = np.asarray(thresholds, dtype=np.float64)
        top = max(1.0, float(errors.max()) if len(errors) else 1.0)
        if thresholds[-1] < top:
            thresholds = np.concatenate([thresholds, [top]])
        self.thresholds = thresholds
        self.errors = errors
        self.percentages = np.array(
            [100.0 * float((errors <= t).mean()) for t in thresholds]
        )
        self.mean_error = float(errors.mean())

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["threshold", "percent_below"])
            for t, p in zip(self.thresholds, self.percentages):
                writer.writerow([f"{t:.12g}", f"{p:.12g}"])

    def summary(self):
        return (
            f"mean normalized geodesic error: {self.mean_error:.6g} "
            f"(x100: {100.0 * self.mean_error:.4g})"
        )


def geodesic_error(vmap, ground_truth, target_mesh, diameter=None, thresholds=None):
    """Error curve of `vmap` against `ground_truth` on their shared source set.

    Both maps assign a target-mesh vertex to every source vertex; distances
    are measured on the target mesh and normalized by its geodesic diameter
    (estimated when not supplied).
    """
    got = np.asarray(vmap.target, dtype=np.int64)
    want = np.asarray(ground_truth.target, dtype=np.int64)
    if len(got) != len(want):
        raise ValueError(
            f"map covers {len(got)} vertices but ground truth covers {len(want)}"
        )
    if (want < 0).any() or (got < 0).any():
        raise ValueError("maps contain negative entries (missing correspondences)")
    if diameter is None:
        diameter = geodesic_diameter(target_mesh)
    errors = np.zeros(len(got))
    differ = got != want
    if differ.any():
        sources = np.unique(want[differ])
        dist = geodesic_distances(target_mesh, sources)
        row = np.searchsorted(sources, want[differ])
        errors[differ] = dist[row, got[differ]]
    if not np.isfinite(errors).all():
        raise ValueError("some image pairs are geodesically unreachable")
    return ErrorCurve(errors / diameter, thresholds=thresholds)


def dirichlet_map_energy(vmap, source_mesh, target_mesh, stiffness=None):
    """Discrete Dirichlet energy of a vertex map.

    One quarter of the cotangent-weighted sum, over the source mesh's edges,
    of squared target geodesic distances between the edge endpoints' images.
    Nonnegative whenever all cotangent weights are; meshes with negative
    weights are reported with a warning.
    """
    from .fem import assemble_stiffness

    if stiffness is None:
        stiffness = assemble_stiffness(source_mesh)
    edges = source_mesh.edges
    w = -np.asarray(stiffness[edges[:, 0], edges[:, 1]]).reshape(-1)
    if (w < -1e-12).any():
        warnings.warn(
            f"{int((w < -1e-12).sum())} edges have negative cotangent weights; "
            "the map energy may be negative",
            stacklevel=2,
        )
    img = np.asarray(vmap.target, dtype=np.int64)
    iu = img[edges[:, 0]]
    iv = img[edges[:, 1]]
    differ = iu != iv
    d2 = np.zeros(len(edges))
    if differ.any():
        sources = np.unique(iu[differ])
        dist = geodesic_distances(target_mesh, sources)
        row = np.searchsorted(sources, iu[differ])
        d = dist[row, iv[differ]]
        if not np.isfinite(d).all():
            raise ValueError("a mapped edge pair is geodesically unreachable")
        d2[differ] = d**2
    return 0.25 * float(np.sum(w * d2))
