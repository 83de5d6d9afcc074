import os

import numpy as np
import pytest

from saddleprec.cli import (
    main, RunManifest, ExperimentConfig, WeightSpec, Tolerances, parse_list, error_exit_code,
    EXIT_OK, EXIT_CONFIG, EXIT_GENERATION, EXIT_VERIFICATION, EXIT_NO_CONVERGENCE, THREADS_ENV,
)
from saddleprec.errors import ConfigError, NotSplittable, Stagnation, DegenerateDraw, InvalidDimensions
from saddleprec.preconditioners import WeightKind
from saddleprec.problems import SaddleProblem, read_problem, write_matrix
from tests.utils import read_output_json



def generate_problem(directory, *args):
    path = str(directory / "problem")
    assert main(["generate", "-o", path, "-q"] + list(args)) == EXIT_OK
    return path


def test_generate(tmp_path):
    path = generate_problem(tmp_path, "--n", "12", "--m1", "2", "--m2", "3", "--regime", "min-indep", "--seed", "7")
    assert sorted(os.listdir(path)) == ["A.mtx", "B1.mtx", "B2.mtx", "manifest.json"]
    manifest = read_output_json(path, "manifest.json")
    assert manifest["seed"] == 7
    problem = read_problem(path)
    assert problem.dims == (12, 2, 3)
    assert problem.validate() == []


def test_spectrum(tmp_path, capsys):
    problem = generate_problem(tmp_path, "--n", "40", "--m1", "6", "--m2", "4", "--regime", "min-indep")
    out = str(tmp_path / "spectrum")
    code = main(["spectrum", "--problem", problem, "--precond", "p3d,p3t,p2d", "-o", out, "-q"])
    assert code == EXIT_OK
    assert read_output_json(out, "spectrum_p3d.json")["verdict"] == "pass"
    assert read_output_json(out, "spectrum_p3t.json")["verdict"] == "pass"
    assert read_output_json(out, "spectrum_p2d.json")["verdict"] == "not-ideal"

    manifest = read_output_json(out, RunManifest.filename)
    assert [task["status"] for task in manifest["tasks"]] == ["ok", "ok", "ok"]
    assert sorted(manifest["files"]) == ["spectrum_p2d.json", "spectrum_p3d.json", "spectrum_p3t.json"]
    assert RunManifest.verify(out) == []
    assert "verdict PASS" in capsys.readouterr().out


def test_spectrum_p2d_families(tmp_path):
    out = str(tmp_path / "out")
    code = main([
        "spectrum", "--n", "30", "--m1", "0", "--m2", "5", "--regime", "max-rd",
        "--precond", "p2d", "--weight-b", "diag:1,2,3,4,5", "-o", out, "-q",
    ])
    assert code == EXIT_OK
    data = read_output_json(out, "spectrum_p2d.json")
    assert data["verdict"] == "pass"
    assert all(family["passed"] for family in data["families"])


def test_manifest_detects_changes(tmp_path):
    out = str(tmp_path / "out")
    assert main(["spectrum", "--n", "10", "--m1", "2", "--m2", "2", "--precond", "p3t", "-o", out, "-q"]) == EXIT_OK
    with open(os.path.join(out, "spectrum_p3t.json"), "a") as f:
        f.write(" ")
    assert RunManifest.verify(out) == ["spectrum_p3t.json"]


def test_runs_are_reproducible(tmp_path):
    manifests = []
    for name in ["first", "second"]:
        out = str(tmp_path / name)
        code = main(["solve", "--n", "20", "--m1", "3", "--m2", "4", "--regime", "general", "--seed", "5",
                     "--precond", "p3d,p3t", "-o", out, "-q"])
        assert code == EXIT_OK
        manifests.append(read_output_json(out, RunManifest.filename))
    first, second = manifests
    assert first["files"]
    assert first["files"] == second["files"]
    assert first["tasks"] == second["tasks"]


@pytest.mark.parametrize("regime", ["min-indep", "general"])
def test_solve(tmp_path, regime):
    out = str(tmp_path / "out")
    code = main(["solve", "--n", "40", "--m1", "6", "--m2", "4", "--regime", regime,
                 "--precond", "p3d,p3t", "-o", out, "-q"])
    assert code == EXIT_OK
    with open(os.path.join(out, "solve_p3t.csv")) as f:
        lines = f.read().splitlines()
    assert lines[0] == "iter,precond_resid,true_resid"
    assert len(lines) - 2 <= 5


def test_solve_not_converged(tmp_path):
    out = str(tmp_path / "out")
    code = main(["solve", "--n", "40", "--precond", "identity", "--maxit", "2", "-o", out, "-q"])
    assert code == EXIT_NO_CONVERGENCE
    manifest = read_output_json(out, RunManifest.filename)
    assert manifest["tasks"][0]["exit_code"] == EXIT_NO_CONVERGENCE


@pytest.mark.parametrize("regime", ["min-indep", "general", "max-rd"])
def test_verify_inverse(tmp_path, regime):
    m1 = "0" if regime == "max-rd" else "3"
    out = str(tmp_path / "out")
    code = main(["verify-inverse", "--n", "20", "--m1", m1, "--m2", "4", "--regime", regime,
                 "-o", out, "-q"])
    data = read_output_json(out, "verify_inverse.json")
    assert [check["name"] for check in data["checks"] if not check["passed"]] == []
    assert code == EXIT_OK
    names = {check["name"] for check in data["checks"]}
    assert ("null-a residual" in names) == (regime != "general")
    assert ("schur identity" in names) == (regime == "max-rd")


def test_verify_inverse_export(tmp_path):
    out = str(tmp_path / "out")
    code = main(["verify-inverse", "--n", "12", "--m1", "2", "--m2", "3", "--regime", "min-indep",
                 "--export-inverses", "-o", out, "-q"])
    assert code == EXIT_OK
    for name in ["inverse_direct", "inverse_null-b2", "inverse_aug-shift", "inverse_null-a"]:
        assert os.path.exists(os.path.join(out, name, "inverse.json"))
    assert RunManifest.verify(out) == []


def test_sweep_scaling(tmp_path):
    out = str(tmp_path / "out")
    code = main(["sweep-scaling", "--n", "40", "--m1", "6", "--m2", "4", "--regime", "min-indep",
                 "--scalings", "0.25,0.5,1,2", "-o", out, "-q"])
    assert code == EXIT_OK
    data = read_output_json(out, "sweep_scaling.json")
    assert [point["clusters"] for point in data] == [4, 3, 4, 4]


def test_sweep_scaling_needs_minimal_independence(tmp_path):
    out = str(tmp_path / "out")
    assert main(["sweep-scaling", "--regime", "general", "-o", out, "-q"]) == EXIT_CONFIG


def test_split(tmp_path):
    out = str(tmp_path / "out")
    code = main(["split", "--n", "20", "--m1", "4", "--m2", "3", "--regime", "min-indep",
                 "--shuffle-seed", "5", "-o", out, "-q"])
    assert code == EXIT_OK
    data = read_output_json(out, "split.json")
    assert data["valid"]
    assert data["b2_rows"] == [4, 5, 6]


@pytest.mark.parametrize("argv", [
    ["generate", "--regime", "max-rd", "--m1", "1", "--m2", "1", "--n", "4"],
    ["generate", "--n", "3", "--m1", "2", "--m2", "2"],
    ["spectrum", "--weight", "cholesky"],
    ["spectrum", "--precond", "p4d"],
    ["spectrum", "--problem", "/nonexistent/problem"],
    ["spectrum", "--scalings", "a,b"],
    ["solve", "--maxit", "0"],
    ["frobnicate"],
])
def test_config_errors(tmp_path, argv):
    assert main(argv + ["-o", str(tmp_path)]) == EXIT_CONFIG


def test_weight_of_wrong_size(tmp_path):
    out = str(tmp_path / "out")
    code = main(["spectrum", "--n", "10", "--m1", "2", "--m2", "2", "--precond", "p3d",
                 "--weight", "diag:1,2,3", "-o", out, "-q"])
    assert code == EXIT_CONFIG


def test_weight_file(tmp_path):
    path = str(tmp_path / "w.mtx")
    write_matrix(path, np.diag([1.0, 2.0]))
    weight = WeightSpec("file:" + path).build(WeightKind.W, 2)
    assert np.allclose(weight.value, np.diag([1.0, 2.0]))
    with pytest.raises(ConfigError):
        WeightSpec("file:" + path).build(WeightKind.W, 3)
    with pytest.raises(ConfigError):
        WeightSpec("file:" + str(tmp_path / "missing.mtx")).build(WeightKind.W, 2)


def test_generation_failure(tmp_path, monkeypatch):
    monkeypatch.setattr(SaddleProblem, "validate", lambda self: ["forced failure"])
    assert main(["generate", "--n", "6", "--m1", "1", "--m2", "1", "-o", str(tmp_path), "-q"]) == EXIT_GENERATION
    assert main(["spectrum", "--n", "6", "--m1", "1", "--m2", "1", "-o", str(tmp_path), "-q"]) == EXIT_GENERATION


def test_threads(tmp_path, monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    out = str(tmp_path / "out")
    code = main(["spectrum", "--n", "20", "--m1", "3", "--m2", "2", "--regime", "min-indep", "-o", out, "-q"])
    assert code == EXIT_OK
    manifest = read_output_json(out, RunManifest.filename)
    assert [task["name"] for task in manifest["tasks"]] == ["spectrum_p2d", "spectrum_p3d", "spectrum_p3t"]


def test_bad_threads(tmp_path, monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "many")
    assert main(["spectrum", "-o", str(tmp_path)]) == EXIT_CONFIG
    monkeypatch.setenv(THREADS_ENV, "0")
    assert main(["spectrum", "-o", str(tmp_path)]) == EXIT_CONFIG


def test_version(capsys):
    assert main(["--version"]) == EXIT_OK
    assert capsys.readouterr().out.strip()


def test_config_repr_and_dict():
    tolerances = Tolerances(rank_tol=1e-12)
    assert repr(tolerances) == (
        "Tolerances(cluster_tol=1e-06, identity_tol=1e-09, rank_tol=1e-12, solve_tol=1e-10)")
    config = ExperimentConfig(command="spectrum", tolerances=tolerances).validate()
    data = config.as_dict()
    assert data["dims"] == [40, 6, 4]
    assert data["preconditioners"] == ["p2d", "p3d", "p3t"]
    assert data["tolerances"]["rank_tol"] == 1e-12
    assert parse_list("1, 2,", int, "test") == [1, 2]
    with pytest.raises(ConfigError):
        parse_list("x", float, "scaling")


def test_error_exit_codes():
    assert error_exit_code(InvalidDimensions("x")) == EXIT_CONFIG
    assert error_exit_code(DegenerateDraw("x")) == EXIT_GENERATION
    assert error_exit_code(NotSplittable("x")) == EXIT_VERIFICATION
    assert error_exit_code(Stagnation("x")) == EXIT_NO_CONVERGENCE
