import json

import numpy as np
import pytest

from fixtures_meshes import annulus_mesh, disk_mesh, icosphere, sphere_landmarks
from steklov_match.cli import main
from steklov_match.matching import load_vertex_map
from steklov_match.meshio import save_landmarks, save_mesh
from steklov_match.pipeline import MatchConfig


@pytest.fixture(scope="module")
def sphere_inputs(tmp_path_factory):
    root = tmp_path_factory.mktemp("inputs")
    m = icosphere(3)
    save_mesh(m, root / "sphere.off")
    save_landmarks(sphere_landmarks(m, 5), root / "lms.txt")
    return root, m


FAST_FLAGS = ["--n-laplacian", "20", "--n-steklov", "5", "--k-step", "10"]


def run_match(root, out, extra=()):
    return main(
        [
            "match",
            "--mesh-a", str(root / "sphere.off"),
            "--mesh-b", str(root / "sphere.off"),
            "--landmarks-a", str(root / "lms.txt"),
            "--landmarks-b", str(root / "lms.txt"),
            "--out-dir", str(out),
            *FAST_FLAGS,
            *extra,
        ]
    )


def test_match_self_run(sphere_inputs, tmp_path, capsys):
    root, mesh = sphere_inputs
    out = tmp_path / "out"
    assert run_match(root, out) == 0
    vmap = load_vertex_map(out / "map_b_to_a.txt")
    assert len(vmap) == mesh.n_vertices
    ident = (vmap.target == np.arange(mesh.n_vertices)).mean()
    assert ident > 0.98
    for name in ("map_a_to_b.txt", "energy_log.csv", "manifest.json",
                 "orthogonality_a.csv", "energy_log.png", "gram_a.png"):
        assert (out / name).exists(), name


def test_match_no_plots(sphere_inputs, tmp_path):
    root, _ = sphere_inputs
    out = tmp_path / "out"
    assert run_match(root, out, ["--no-plots"]) == 0
    assert not (out / "energy_log.png").exists()
    assert (out / "energy_log.csv").exists()


def test_match_deterministic(sphere_inputs, tmp_path):
    root, _ = sphere_inputs
    out1 = tmp_path / "r1"
    out2 = tmp_path / "r2"
    assert run_match(root, out1, ["--no-plots"]) == 0
    assert run_match(root, out2, ["--no-plots"]) == 0
    for name in ("map_b_to_a.txt", "map_a_to_b.txt", "energy_log.csv", "manifest.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name


def test_manifest_lists_every_tunable(sphere_inputs, tmp_path):
    root, _ = sphere_inputs
    out = tmp_path / "out"
    assert run_match(root, out, ["--no-plots"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    for key in MatchConfig().as_dict():
        assert key in manifest["config"], key
    assert "gram" in manifest
    assert manifest["config"]["n_laplacian"] == 20


def test_invalid_radius_factor_is_config_error(sphere_inputs, tmp_path, capsys):
    root, _ = sphere_inputs
    code = run_match(root, tmp_path / "out", ["--rf", "1.5"])
    assert code == 2
    assert "configuration error" in capsys.readouterr().err


def test_missing_landmark_file_is_input_error(sphere_inputs, tmp_path, capsys):
    root, _ = sphere_inputs
    code = main(
        [
            "match",
            "--mesh-a", str(root / "sphere.off"),
            "--mesh-b", str(root / "sphere.off"),
            "--landmarks-a", str(root / "nope.txt"),
            "--landmarks-b", str(root / "lms.txt"),
            "--out-dir", str(tmp_path / "out"),
        ]
    )
    assert code == 3
    assert "input error" in capsys.readouterr().err


def test_config_file_flags_win(sphere_inputs, tmp_path):
    root, _ = sphere_inputs
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n_laplacian = 12\nrf = 0.4\nn_steklov = 5\nk_step = 12\n")
    out = tmp_path / "out"
    code = main(
        [
            "match",
            "--mesh-a", str(root / "sphere.off"),
            "--mesh-b", str(root / "sphere.off"),
            "--landmarks-a", str(root / "lms.txt"),
            "--landmarks-b", str(root / "lms.txt"),
            "--out-dir", str(out),
            "--config", str(cfg),
            "--n-laplacian", "8",
            "--no-plots",
        ]
    )
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["n_laplacian"] == 8  # flag beats config file
    assert manifest["config"]["radius_factor"] == 0.4  # config beats default
    assert manifest["config"]["k_step"] == 12


def test_bad_config_file_key(sphere_inputs, tmp_path, capsys):
    root, _ = sphere_inputs
    cfg = tmp_path / "run.cfg"
    cfg.write_text("frobnicate = 7\n")
    code = run_match(root, tmp_path / "out", ["--config", str(cfg)])
    assert code == 2


def test_eigs_annulus_analytic(tmp_path, capsys):
    save_mesh(annulus_mesh(0.5, 1.0, 16, 64), tmp_path / "annulus.off")
    out = tmp_path / "eig"
    code = main(
        [
            "eigs",
            "--mesh", str(tmp_path / "annulus.off"),
            "--out-dir", str(out),
            "--n-laplacian", "3",
            "--n-steklov", "4",
        ]
    )
    assert code == 0
    rows = (out / "eigenvalues.csv").read_text().splitlines()[1:]
    outer = [float(r.split(",")[2]) for r in rows if r.startswith("circle_2")]
    assert abs(outer[0] - 1.0 / np.log(2.0)) / (1.0 / np.log(2.0)) < 0.02
    assert (out / "eigenvalues.png").exists()


def test_eigs_disk_bessel(tmp_path):
    from scipy.special import jn_zeros

    save_mesh(disk_mesh(20, 60), tmp_path / "disk.off")
    out = tmp_path / "eig"
    code = main(
        [
            "eigs",
            "--mesh", str(tmp_path / "disk.off"),
            "--out-dir", str(out),
            "--n-laplacian", "2",
            "--n-steklov", "3",
            "--no-plots",
        ]
    )
    assert code == 0
    rows = (out / "eigenvalues.csv").read_text().splitlines()[1:]
    lam1 = float(next(r for r in rows if r.startswith("laplacian,0")).split(",")[2])
    exact = jn_zeros(0, 1)[0] ** 2
    assert abs(lam1 - exact) / exact < 0.02


def test_eigs_closed_mesh_without_landmarks_fails(sphere_inputs, tmp_path, capsys):
    root, _ = sphere_inputs
    code = main(
        ["eigs", "--mesh", str(root / "sphere.off"), "--out-dir", str(tmp_path / "o")]
    )
    assert code == 3


def test_eval_self_map(sphere_inputs, tmp_path, capsys):
    root, mesh = sphere_inputs
    out = tmp_path / "m"
    assert run_match(root, out, ["--no-plots"]) == 0
    ev = tmp_path / "ev"
    code = main(
        [
            "eval",
            "--map", str(out / "map_b_to_a.txt"),
            "--ground-truth", str(out / "map_b_to_a.txt"),
            "--target-mesh", str(root / "sphere.off"),
            "--out-dir", str(ev),
        ]
    )
    assert code == 0
    txt = capsys.readouterr().out
    assert "mean normalized geodesic error: 0" in txt
    assert (ev / "error_curve.csv").exists()
    assert (ev / "error_curve.png").exists()


def test_solver_failure_exit_code(tmp_path, capsys):
    save_mesh(annulus_mesh(0.5, 1.0, 6, 24), tmp_path / "ann.off")
    code = main(
        [
            "eigs",
            "--mesh", str(tmp_path / "ann.off"),
            "--out-dir", str(tmp_path / "o"),
            "--n-laplacian", "100000",
            "--no-plots",
        ]
    )
    assert code == 4
    assert "solver error" in capsys.readouterr().err


def test_match_distances_column(sphere_inputs, tmp_path):
    root, mesh = sphere_inputs
    out = tmp_path / "out"
    assert run_match(root, out, ["--no-plots", "--distances"]) == 0
    vmap = load_vertex_map(out / "map_b_to_a.txt")
    assert vmap.distance is not None
    assert len(vmap.distance) == mesh.n_vertices
    assert (vmap.distance >= 0.0).all()


def test_eval_map_out_of_range(sphere_inputs, tmp_path):
    root, mesh = sphere_inputs
    bad = tmp_path / "bad.txt"
    bad.write_text("999999\n" * mesh.n_vertices)
    code = main(
        [
            "eval",
            "--map", str(bad),
            "--ground-truth", str(bad),
            "--target-mesh", str(root / "sphere.off"),
            "--out-dir", str(tmp_path / "ev"),
        ]
    )
    assert code == 3
