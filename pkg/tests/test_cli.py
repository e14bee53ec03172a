import json
import subprocess
import sys

import numpy as np
import pytest

from shapeinv.cli import main
from shapeinv.serialize import read_csv, read_input


def run(*argv):
    return main([str(a) for a in argv])


def test_generate_exact_lorentz(tmp_path):
    assert run("--out", tmp_path, "generate-input", "--family", "lorentz", "--sigma-i", 10, "--exact") == 0
    header, table = read_csv(tmp_path / "input.csv")
    assert header == ["sigma", "phi", "weight"]
    assert table.shape[0] == 100
    assert table[0, 0] == -2.0 and table[-1, 0] == 41.4


def test_galerkin_sidecar(tmp_path):
    assert run("generate-input", "--family", "lorentz", "--sigma-i", 10, "--galerkin", 10,
               "--out", tmp_path) == 0
    meta = json.loads((tmp_path / "input.json").read_text())
    assert meta["provenance_label"] == "Galerkin(10)"
    assert meta["provenance"] == {"kind": "galerkin", "N0": 10}
    assert meta["model_problem"]["eta"] == 1.0 and meta["kernel"]["sigma_I"] == 10.0


def test_noisy_laplace_is_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert run("generate-input", "--family", "laplace", "--noise", 0.05, "--seed", 7,
                   "--out", tmp_path / d) == 0
    for name in ("input.csv", "input.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    data, _ = read_input(tmp_path / "a" / "input.csv")
    assert str(data.provenance) == "Noisy(0.05, 7)"


def test_noise_requires_seed(tmp_path, capsys):
    assert run("generate-input", "--family", "laplace", "--noise", 0.05, "--out", tmp_path) == 2
    assert "--seed" in capsys.readouterr().err


def test_lorentz_requires_width(tmp_path):
    assert run("generate-input", "--family", "lorentz", "--out", tmp_path) == 2


def test_missing_input_names_path(tmp_path, capsys):
    missing = tmp_path / "no_such_input.csv"
    code = run("invert", "--input", missing)
    assert code != 0
    assert str(missing) in capsys.readouterr().err


def test_invert_table2_row(tmp_path):
    run("generate-input", "--family", "lorentz", "--sigma-i", 10, "--out", tmp_path)
    assert run("--out", tmp_path, "invert", "--input", tmp_path / "input.csv") == 0
    chi = json.loads((tmp_path / "chi_report.json").read_text())
    assert chi["chi_solution"] <= 1e-6 and chi["chi_fit"] <= 1e-6
    res = json.loads((tmp_path / "fit_result.json").read_text())
    assert res["converged"] and res["ansatz"]["N"] == 1
    header, table = read_csv(tmp_path / "solution.csv")
    assert header == ["E", "f_appr", "f_true"] and table.shape == (200, 3)
    assert np.allclose(table[:, 1], table[:, 2], rtol=1e-6)


def test_invert_laplace_grid_only(tmp_path):
    run("generate-input", "--family", "laplace", "--out", tmp_path)
    assert run("invert", "--input", tmp_path / "input.csv", "--grid-only", "--levels", 2,
               "--out", tmp_path) == 0
    res = json.loads((tmp_path / "fit_result.json").read_text())
    assert res["mode"] == "grid-only" and res["converged"] is True
    assert res["config"]["skip_refine"] is True


def test_invert_with_config_file(tmp_path):
    run("generate-input", "--family", "stieltjes", "--s-max", -2, "--galerkin", 7, "--out", tmp_path)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"scan": {"levels": 2, "points": 12}}))
    assert run("--config", cfg, "invert", "--input", tmp_path / "input.csv", "--out", tmp_path,
               "--prefix", "st_") == 0
    res = json.loads((tmp_path / "st_fit_result.json").read_text())
    assert res["config"]["levels"] == 2 and res["config"]["points"] == 12
    chi = json.loads((tmp_path / "st_chi_report.json").read_text())
    assert chi["chi_input"] == pytest.approx(2.4e-3, rel=0.1)


def test_invert_rejects_unknown_config_key(tmp_path, capsys):
    run("generate-input", "--family", "laplace", "--out", tmp_path)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"scan": {"levles": 2}}))
    assert run("--config", cfg, "invert", "--input", tmp_path / "input.csv") != 0
    assert "levles" in capsys.readouterr().err


def test_invert_saturation_report(tmp_path):
    run("generate-input", "--family", "lorentz", "--sigma-i", 100, "--galerkin", 3, "--out", tmp_path)
    assert run("invert", "--input", tmp_path / "input.csv", "--saturation", "--levels", 2,
               "--out", tmp_path) == 0
    rows = json.loads((tmp_path / "saturation.json").read_text())
    assert [r["M"] for r in rows] == [2, 3, 4, 6]
    assert [r["K_gamma"] for r in rows] == [0, 1, 2, 4]
    assert all("chi_solution" in r for r in rows)


def test_baseline_command(tmp_path):
    run("generate-input", "--family", "lorentz", "--sigma-i", 10, "--galerkin", 10, "--out", tmp_path)
    assert run("baseline", "--input", tmp_path / "input.csv", "--N", 2, 3, "--alpha-points", 10,
               "--out", tmp_path) == 0
    header, table = read_csv(tmp_path / "baseline_metrics.csv")
    assert header == ["N", "alpha", "chi_fit", "chi_solution", "cond"]
    assert list(table[:, 0]) == [2.0, 3.0]


def test_reproduce_fig1_writes_curves(tmp_path):
    assert run("reproduce", "fig1", "--out", tmp_path) == 0
    for name in ("fig1_input.csv", "fig1_exact_solution.csv", "fig1_approx_solution.csv",
                 "fig1_comparison.csv", "fig1_report.json"):
        assert (tmp_path / name).is_file()
    header, _ = read_csv(tmp_path / "fig1_approx_solution.csv")
    assert header == ["E", "f_appr"]


def test_threads_flag_validated(tmp_path):
    assert run("--threads", 0, "reproduce", "fig1", "--out", tmp_path) == 2


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "shapeinv", "generate-input", "--family", "stieltjes",
                          "--s-max", "-20", "--n-samples", "5", "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert "5 samples" in out.stdout
