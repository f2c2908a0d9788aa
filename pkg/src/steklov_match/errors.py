"""Exception types shared across the package."""


class MeshError(ValueError):
    """Invalid mesh data: parse failures, non-manifold connectivity, degenerate geometry."""


class LandmarkError(ValueError):
    """Invalid landmark placement (out of range, duplicated, too close, on a boundary)."""


class SolverError(RuntimeError):
    """A sparse factorization or eigensolve failed or did not meet its residual tolerance."""


class ConfigError(ValueError):
    """Invalid run configuration (bad parameter value, malformed config file)."""
