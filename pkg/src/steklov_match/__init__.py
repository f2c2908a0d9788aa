"""Landmark-preserving near-conformal shape correspondence.

Computes vertex-to-vertex maps between triangle meshes that match
user-supplied landmark pairs exactly. Landmarks are converted into small
boundary circles; a functional basis adapted to those circles (Dirichlet
Laplacian plus per-circle Dirichlet-Steklov eigenfunctions) supports a
block-diagonal functional map that is refined by alternating nearest
neighbor conversion with spectral upsampling.
"""

from .basis import SpectralBasis, build_basis, cross_block_orthogonality_report, w_gram
from .errors import ConfigError, LandmarkError, MeshError, SolverError
from .evaluation import ErrorCurve, dirichlet_map_energy, geodesic_error
from .fem import FemOperators, assemble_lumped_mass, assemble_steklov_mass, assemble_stiffness
from .geodesics import geodesic_diameter, geodesic_distances
from .matching import (
    BlockFunctionalMap,
    EnergyWeights,
    ShapeData,
    VertexMap,
    conformal_energy,
    initial_functional_maps,
    invertibility_energy,
    landmark_harmonics,
    load_vertex_map,
    p2p_from_functional,
    properness_energy,
    refine,
    reinsert_landmarks,
    save_vertex_map,
)
from .mesh import BoundaryLoop, TriangleMesh, normalize_pair_area
from .meshio import load_landmarks, load_mesh, save_landmarks, save_mesh
from .pipeline import MatchConfig, MatchResult, match_pair
from .spectral import (
    EigenPairSet,
    dirichlet_laplacian_eigs,
    dirichlet_steklov_eigs,
    schur_boundary_reduction,
)
from .surgery import CutMesh, circle_radius, circular_coordinates, cut_all, cut_landmark

__version__ = "0.1.0"

__all__ = [
    "BlockFunctionalMap",
    "BoundaryLoop",
    "ConfigError",
    "CutMesh",
    "EigenPairSet",
    "EnergyWeights",
    "ErrorCurve",
    "FemOperators",
    "LandmarkError",
    "MatchConfig",
    "MatchResult",
    "MeshError",
    "ShapeData",
    "SolverError",
    "SpectralBasis",
    "TriangleMesh",
    "VertexMap",
    "assemble_lumped_mass",
    "assemble_steklov_mass",
    "assemble_stiffness",
    "build_basis",
    "circle_radius",
    "circular_coordinates",
    "conformal_energy",
    "cross_block_orthogonality_report",
    "cut_all",
    "cut_landmark",
    "dirichlet_laplacian_eigs",
    "dirichlet_map_energy",
    "dirichlet_steklov_eigs",
    "geodesic_diameter",
    "geodesic_distances",
    "geodesic_error",
    "initial_functional_maps",
    "invertibility_energy",
    "landmark_harmonics",
    "load_landmarks",
    "load_mesh",
    "load_vertex_map",
    "match_pair",
    "normalize_pair_area",
    "p2p_from_functional",
    "properness_energy",
    "refine",
    "reinsert_landmarks",
    "save_landmarks",
    "save_mesh",
    "save_vertex_map",
    "schur_boundary_reduction",
    "w_gram",
]
