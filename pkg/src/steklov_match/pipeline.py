"""End-to-end matching pipeline: surgery, spectra, refinement, reinsertion."""

import csv
from dataclasses import dataclass, field

import numpy as np

from .basis import build_basis, orthonormality_warning
from .errors import ConfigError, LandmarkError
from .fem import FemOperators
from .matching import (
    EnergyWeights,
    ShapeData,
    VertexMap,
    final_vertex_maps,
    initial_functional_maps,
    refine,
    reinsert_landmarks,
)
from .mesh import normalize_pair_area
from .surgery import circle_radius, cut_all, validate_landmarks

INIT_STRATEGIES = ("normal-derivatives", "trivial", "conformal-energy")
MODES = ("fast", "principled")
STEKLOV_VARIANTS = ("lumped", "fem")


@dataclass
class MatchConfig:
    """Tunable parameters of the matching pipeline (defaults as published)."""

    radius_factor: float = 0.5
    wedges: int = 3
    n_laplacian: int = 120
    n_steklov: int = 10
    weight_conformal: float = 1.0
    weight_properness: float = 1.0
    weight_invertibility: float = 1.0
    k_step: int = 10
    mode: str = "fast"
    init_strategy: str = "normal-derivatives"
    steklov_variant: str = "lumped"
    workers: int = 1

    def __post_init__(self):
        if not 0.0 < self.radius_factor < 1.0:
            raise ConfigError(f"radius factor must lie in (0, 1), got {self.radius_factor}")
        if self.wedges < 1:
            raise ConfigError("wedge count must be >= 1")
        if self.n_laplacian < 1:
            raise ConfigError("need at least one Laplacian basis function")
        if self.n_steklov < 1:
            raise ConfigError("need at least one boundary basis function per circle")
        if self.k_step < 1:
            raise ConfigError("k_step must be >= 1")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.init_strategy not in INIT_STRATEGIES:
            raise ConfigError(f"init strategy must be one of {INIT_STRATEGIES}")
        if self.steklov_variant not in STEKLOV_VARIANTS:
            raise ConfigError(f"Steklov mass variant must be one of {STEKLOV_VARIANTS}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        try:
            self.energy_weights()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def energy_weights(self):
        return EnergyWeights(
            conformal=self.weight_conformal,
            properness=self.weight_properness,
            invertibility=self.weight_invertibility,
        )

    def as_dict(self):
        return {
            "radius_factor": self.radius_factor,
            "wedges": self.wedges,
            "n_laplacian": self.n_laplacian,
            "n_steklov": self.n_steklov,
            "weight_conformal": self.weight_conformal,
            "weight_properness": self.weight_properness,
            "weight_invertibility": self.weight_invertibility,
            "k_step": self.k_step,
            "mode": self.mode,
            "init_strategy": self.init_strategy,
            "steklov_variant": self.steklov_variant,
            "workers": self.workers,
        }


@dataclass
class MatchResult:
    """Outcome of one matching run (maps in original-mesh indexing)."""

    map_b_to_a: VertexMap
    map_a_to_b: VertexMap
    energy_log: list
    circle_shifts: np.ndarray
    gram_stats: dict
    manifest: dict
    shape_a: ShapeData = field(repr=False, default=None)
    shape_b: ShapeData = field(repr=False, default=None)


def _require_landmarks_on_every_component(mesh, landmarks, label):
    n_comp, labels = mesh.connected_components()
    covered = np.zeros(n_comp, dtype=bool)
    covered[labels[np.asarray(landmarks, dtype=np.int64)]] = True
    if not covered.all():
        raise LandmarkError(
            f"shape {label}: {int((~covered).sum())} connected component(s) "
            "carry no landmark; every component needs at least one"
        )


def prepare_shape(mesh, landmarks, radii, config):
    """Cut one shape and build its operators and basis."""
    cut = cut_all(mesh, landmarks, radii, wedges=config.wedges)
    ops = FemOperators.build(cut, steklov_variant=config.steklov_variant)
    basis = build_basis(cut, ops, config.n_laplacian, config.n_steklov)
    return ShapeData(cut=cut, ops=ops, basis=basis)


def match_pair(mesh_a, mesh_b, landmarks_a, landmarks_b, config=None, with_distances=False):
    """Compute landmark-preserving vertex maps between two meshes.

    Returns a MatchResult whose maps live on the original (uncut) meshes;
    landmark rows are pinned exactly, every other vertex gets its
    nearest-neighbor image from the refined functional maps. With
    `with_distances`, the maps carry the embedding NN distance per vertex.
    """
    config = config or MatchConfig()
    landmarks_a = np.asarray(landmarks_a, dtype=np.int64)
    landmarks_b = np.asarray(landmarks_b, dtype=np.int64)
    if len(landmarks_a) != len(landmarks_b):
        raise LandmarkError(
            f"landmark counts differ: {len(landmarks_a)} vs {len(landmarks_b)}"
        )
    if len(landmarks_a) == 0:
        raise LandmarkError("matching requires at least one landmark pair")
    validate_landmarks(mesh_a, landmarks_a)
    validate_landmarks(mesh_b, landmarks_b)
    _require_landmarks_on_every_component(mesh_a, landmarks_a, "a")
    _require_landmarks_on_every_component(mesh_b, landmarks_b, "b")

    norm_a, norm_b = normalize_pair_area(mesh_a, mesh_b)
    radii = np.array(
        [
            circle_radius(norm_a, norm_b, la, lb, config.radius_factor)
            for la, lb in zip(landmarks_a, landmarks_b)
        ]
    )
    shape_a = prepare_shape(norm_a, landmarks_a, radii, config)
    shape_b = prepare_shape(norm_b, landmarks_b, radii, config)

    gram_stats = {}
    for label, shape in (("a", shape_a), ("b", shape_b)):
        worst, warned = orthonormality_warning(shape.basis)
        gram_stats[label] = {"max_cross_block": worst, "warned": warned}

    weights = config.energy_weights()
    fmap_ab, fmap_ba, alphas = initial_functional_maps(
        shape_a, shape_b, strategy=config.init_strategy
    )
    fmap_ab, fmap_ba, _, _, energy_log = refine(
        shape_a,
        shape_b,
        fmap_ab,
        fmap_ba,
        n_laplacian_target=config.n_laplacian,
        k_step=config.k_step,
        mode=config.mode,
        weights=weights,
        workers=config.workers,
    )
    partial_b_to_a, partial_a_to_b = final_vertex_maps(
        shape_a, shape_b, fmap_ab, fmap_ba, config.n_laplacian,
        mode=config.mode, weights=weights, workers=config.workers,
        with_distances=with_distances,
    )
    map_b_to_a = reinsert_landmarks(partial_b_to_a, landmarks_b, landmarks_a, mesh_b.n_vertices)
    map_a_to_b = reinsert_landmarks(partial_a_to_b, landmarks_a, landmarks_b, mesh_a.n_vertices)

    manifest = {
        "config": config.as_dict(),
        "landmark_count": int(len(landmarks_a)),
        "vertices_a": int(mesh_a.n_vertices),
        "vertices_b": int(mesh_b.n_vertices),
        "cut_vertices_a": int(shape_a.n_vertices),
        "cut_vertices_b": int(shape_b.n_vertices),
        "circle_radii": [float(r) for r in radii],
        "circle_shifts": [float(x) for x in alphas],
        "basis_dimension": int(shape_a.basis.dim),
        "gram": {
            label: {"max_cross_block": float(s["max_cross_block"]), "warned": bool(s["warned"])}
            for label, s in gram_stats.items()
        },
    }
    return MatchResult(
        map_b_to_a=map_b_to_a,
        map_a_to_b=map_a_to_b,
        energy_log=energy_log,
        circle_shifts=alphas,
        gram_stats=gram_stats,
        manifest=manifest,
        shape_a=shape_a,
        shape_b=shape_b,
    )


def write_energy_log(energy_log, path):
    """Per-iteration energies of both directions as CSV."""
    fields = [
        "iteration", "g_size",
        "conformal_ab", "properness_ab", "invertibility_ab", "total_ab",
        "conformal_ba", "properness_ba", "invertibility_ba", "total_ba",
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for entry in energy_log:
            writer.writerow(
                [entry["iteration"], entry["g_size"]]
                + [f"{entry['ab'][key]:.12g}" for key in ("conformal", "properness", "invertibility", "total")]
                + [f"{entry['ba'][key]:.12g}" for key in ("conformal", "properness", "invertibility", "total")]
            )
