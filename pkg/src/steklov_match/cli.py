"""Command-line interface: `match`, `eigs` and `eval` subcommands.

Configuration comes from flags plus an optional `key=value` plain-text
config file (flags win). Exit codes: 0 success, 2 configuration error,
3 input error, 4 solver failure.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .basis import build_basis, cross_block_orthogonality_report, w_gram, write_gram_report
from .errors import ConfigError, LandmarkError, MeshError, SolverError
from .evaluation import geodesic_error
from .fem import FemOperators
from .matching import load_vertex_map, save_vertex_map
from .mesh import normalize_pair_area
from .meshio import load_landmarks, load_mesh
from .pipeline import (
    INIT_STRATEGIES,
    MODES,
    STEKLOV_VARIANTS,
    MatchConfig,
    match_pair,
    write_energy_log,
)
from .surgery import circle_radius, cut_all

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_SOLVER = 4

_CONFIG_KEYS = {
    "rf": ("radius_factor", float),
    "radius_factor": ("radius_factor", float),
    "wedges": ("wedges", int),
    "n_laplacian": ("n_laplacian", int),
    "n_steklov": ("n_steklov", int),
    "weight_conformal": ("weight_conformal", float),
    "weight_properness": ("weight_properness", float),
    "weight_invertibility": ("weight_invertibility", float),
    "k_step": ("k_step", int),
    "mode": ("mode", str),
    "init": ("init_strategy", str),
    "init_strategy": ("init_strategy", str),
    "steklov_mass": ("steklov_variant", str),
    "steklov_variant": ("steklov_variant", str),
    "threads": ("workers", int),
    "workers": ("workers", int),
}


def _read_config_file(path):
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip().replace("-", "_")
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown configuration key '{key}'")
        name, conv = _CONFIG_KEYS[key]
        try:
            values[name] = conv(val.strip())
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for '{key}': {val.strip()!r}") from exc
    return values


def _add_pipeline_flags(p):
    p.add_argument("--config", help="key=value configuration file (flags win)")
    p.add_argument("--rf", type=float, default=None, dest="radius_factor",
                   help="circle radius factor in (0,1), default 0.5")
    p.add_argument("--wedges", type=int, default=None,
                   help="equal-angle sectors per incident triangle, default 3")
    p.add_argument("--n-laplacian", type=int, default=None,
                   help="Laplacian basis size, default 120")
    p.add_argument("--n-steklov", type=int, default=None,
                   help="boundary basis size per circle, default 10")
    p.add_argument("--steklov-mass", default=None, choices=STEKLOV_VARIANTS,
                   dest="steklov_variant", help="boundary mass discretization, default lumped")
    p.add_argument("--threads", type=int, default=None, dest="workers",
                   help="worker cap for the nearest-neighbor searches")


def _add_match_flags(p):
    p.add_argument("--weight-conformal", type=float, default=None)
    p.add_argument("--weight-properness", type=float, default=None)
    p.add_argument("--weight-invertibility", type=float, default=None)
    p.add_argument("--k-step", type=int, default=None,
                   help="Laplacian functions added per refinement step, default 10")
    p.add_argument("--mode", default=None, choices=MODES,
                   help="nearest-neighbor embedding, default fast")
    p.add_argument("--init", default=None, choices=INIT_STRATEGIES, dest="init_strategy",
                   help="circle alignment strategy, default normal-derivatives")


def _build_config(args):
    values = {}
    if getattr(args, "config", None):
        values.update(_read_config_file(args.config))
    for name in MatchConfig().as_dict():
        flag_value = getattr(args, name, None)
        if flag_value is not None:
            values[name] = flag_value
    return MatchConfig(**values)


def _load_pair(args):
    mesh_a = load_mesh(args.mesh_a)
    mesh_b = load_mesh(args.mesh_b)
    lms_a = load_landmarks(args.landmarks_a, mesh_a.n_vertices)
    lms_b = load_landmarks(args.landmarks_b, mesh_b.n_vertices)
    return mesh_a, mesh_b, lms_a, lms_b


def cmd_match(args):
    config = _build_config(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    mesh_a, mesh_b, lms_a, lms_b = _load_pair(args)
    result = match_pair(mesh_a, mesh_b, lms_a, lms_b, config, with_distances=args.distances)

    save_vertex_map(result.map_b_to_a, out / "map_b_to_a.txt")
    save_vertex_map(result.map_a_to_b, out / "map_a_to_b.txt")
    write_energy_log(result.energy_log, out / "energy_log.csv")
    for label, shape in (("a", result.shape_a), ("b", result.shape_b)):
        write_gram_report(
            cross_block_orthogonality_report(shape.basis), out / f"orthogonality_{label}.csv"
        )
    if args.dump_gram:
        for label, shape in (("a", result.shape_a), ("b", result.shape_b)):
            np.savetxt(out / f"gram_{label}.csv", w_gram(shape.basis), delimiter=",", fmt="%.12g")
    (out / "manifest.json").write_text(
        json.dumps(result.manifest, indent=2, sort_keys=True) + "\n"
    )
    if not args.no_plots:
        from . import report

        report.plot_energy_log(result.energy_log, out / "energy_log.png")
        for label, shape in (("a", result.shape_a), ("b", result.shape_b)):
            report.plot_gram(
                w_gram(shape.basis), out / f"gram_{label}.png",
                block_slices=shape.basis.block_slices(),
            )
    for label in ("a", "b"):
        stats = result.gram_stats[label]
        flag = " (warning: orthonormal approximation degraded)" if stats["warned"] else ""
        print(f"shape {label}: max cross-block inner product {stats['max_cross_block']:.4f}{flag}")
    print(f"wrote maps, energy log and manifest to {out}")
    return EXIT_OK


def _eigs_operators(args, config):
    """Operators for the diagnostics command.

    With landmarks, the mesh is cut exactly as in matching (radii from the
    single shape). Without landmarks, the pre-existing boundary loops play
    the circles' role, which reproduces the analytic disk and annulus
    spectra directly.
    """
    mesh = load_mesh(args.mesh)
    if args.landmarks:
        lms = load_landmarks(args.landmarks, mesh.n_vertices)
        norm, _ = normalize_pair_area(mesh, mesh)
        radii = [circle_radius(norm, norm, l, l, config.radius_factor) for l in lms]
        cut = cut_all(norm, lms, radii, wedges=config.wedges)
        return FemOperators.build(cut, steklov_variant=config.steklov_variant)
    loops = mesh.boundary_loops
    if not loops:
        raise MeshError("eigs on a closed mesh needs a landmark file")
    from .fem import assemble_lumped_mass, assemble_steklov_mass, assemble_stiffness

    return FemOperators(
        mesh=mesh,
        stiffness=assemble_stiffness(mesh),
        mass=assemble_lumped_mass(mesh),
        boundary_mass=[
            assemble_steklov_mass(l, mesh.n_vertices, variant=config.steklov_variant)
            for l in loops
        ],
        loops=list(loops),
        steklov_variant=config.steklov_variant,
    )


def cmd_eigs(args):
    from .spectral import dirichlet_laplacian_eigs, dirichlet_steklov_eigs

    config = _build_config(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ops = _eigs_operators(args, config)
    if not ops.loops:
        raise MeshError("no circles available (no landmarks and no boundary)")

    lap = dirichlet_laplacian_eigs(ops, config.n_laplacian)
    stek = [dirichlet_steklov_eigs(ops, j, config.n_steklov) for j in range(len(ops.loops))]

    with open(out / "eigenvalues.csv", "w") as fh:
        fh.write("block,index,eigenvalue\n")
        for i, v in enumerate(lap.values):
            fh.write(f"laplacian,{i},{v:.12g}\n")
        for j, s in enumerate(stek):
            for i, v in enumerate(s.values):
                fh.write(f"circle_{j + 1},{i},{v:.12g}\n")
    if args.vectors:
        vec = np.concatenate([lap.vectors] + [s.vectors for s in stek], axis=1)
        header = ",".join(
            [f"laplacian_{i}" for i in range(len(lap.values))]
            + [f"circle_{j + 1}_{i}" for j, s in enumerate(stek) for i in range(len(s.values))]
        )
        np.savetxt(out / "eigenvectors.csv", vec, delimiter=",", header=header, comments="")
    if args.gram:
        basis = build_basis(None, ops, config.n_laplacian, config.n_steklov)
        np.savetxt(out / "gram.csv", w_gram(basis), delimiter=",", fmt="%.12g")
    if not args.no_plots:
        from . import report

        blocks = [("laplacian", lap.values)] + [
            (f"circle {j + 1}", s.values) for j, s in enumerate(stek)
        ]
        report.plot_eigenvalues(blocks, out / "eigenvalues.png")
    print(f"wrote {len(lap.values)} Laplacian and "
          f"{sum(len(s.values) for s in stek)} boundary eigenvalues to {out}")
    return EXIT_OK


def cmd_eval(args):
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    target = load_mesh(args.target_mesh)
    vmap = load_vertex_map(args.map)
    gt = load_vertex_map(args.ground_truth)
    if len(vmap) != len(gt):
        raise MeshError(
            f"map length {len(vmap)} differs from ground truth length {len(gt)}"
        )
    if max(int(vmap.target.max()), int(gt.target.max())) >= target.n_vertices:
        raise MeshError("map entry exceeds target mesh vertex count")
    curve = geodesic_error(vmap, gt, target, diameter=args.diameter)
    curve.write_csv(out / "error_curve.csv")
    if not args.no_plots:
        from . import report

        report.plot_error_curve(curve, out / "error_curve.png")
    print(curve.summary())
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="steklov-match",
        description="Landmark-preserving near-conformal correspondence between triangle meshes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    m = sub.add_parser("match", help="compute vertex maps between a mesh pair")
    m.add_argument("--mesh-a", required=True)
    m.add_argument("--mesh-b", required=True)
    m.add_argument("--landmarks-a", required=True)
    m.add_argument("--landmarks-b", required=True)
    m.add_argument("--out-dir", required=True)
    m.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    m.add_argument("--distances", action="store_true",
                   help="append the embedding NN distance as a second map column")
    m.add_argument("--dump-gram", action="store_true",
                   help="write the full basis Gram matrices as CSV")
    _add_pipeline_flags(m)
    _add_match_flags(m)
    m.set_defaults(func=cmd_match)

    e = sub.add_parser("eigs", help="dump eigenvalues/eigenvectors for one mesh")
    e.add_argument("--mesh", required=True)
    e.add_argument("--landmarks", default=None,
                   help="landmark file; omit to use pre-existing boundary loops")
    e.add_argument("--out-dir", required=True)
    e.add_argument("--vectors", action="store_true", help="also dump eigenvectors")
    e.add_argument("--gram", action="store_true",
                   help="also dump the basis Gram matrix (Dirichlet inner products)")
    e.add_argument("--no-plots", action="store_true")
    _add_pipeline_flags(e)
    e.set_defaults(func=cmd_eigs)

    v = sub.add_parser("eval", help="score a map file against a ground-truth map")
    v.add_argument("--map", required=True)
    v.add_argument("--ground-truth", required=True)
    v.add_argument("--target-mesh", required=True)
    v.add_argument("--out-dir", required=True)
    v.add_argument("--diameter", type=float, default=None,
                   help="geodesic diameter override for normalization")
    v.add_argument("--no-plots", action="store_true")
    v.set_defaults(func=cmd_eval)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FileNotFoundError, MeshError, LandmarkError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
