import json

import numpy as np
import pytest

from gaslab.cli import main


def write_cfg(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def small_problem_cfg(nx=32, nt=40):
    return {
        "domain": {"X": 1.0, "T": 0.1},
        "grid": {"nx": nx, "nt": nt},
        "gas": {"nu": 0.1, "k": 1.0, "cV": 1.0, "lambda": 0.1},
        "bc": {"m": 3, "p0": 1.0, "pX": 1.0, "pi0": 0.0, "piX": 0.0},
        "data": {"eta0": "1", "u0": "0.1*sin(3.141592653589793*x)",
                 "theta0": "1"},
        "N": 10.0,
        "scheme": {"store_stride": 4},
    }


def test_solve_subcommand(tmp_path, capsys):
    cfg = write_cfg(tmp_path, small_problem_cfg())
    out = tmp_path / "out"
    assert main(["solve", cfg, "--out", str(out)]) == 0
    snap = (out / "snapshots.csv").read_text().splitlines()
    assert snap[0] == "t,x,eta,u,theta,sigma,pi"
    assert len(snap) > 32
    diag = (out / "diagnostics.csv").read_text()
    assert "logvol_residual" in diag


def test_solve_rejects_invalid_config(tmp_path, capsys):
    cfg_dict = small_problem_cfg()
    cfg_dict["data"]["theta0"] = "0"       # violates positivity
    cfg = write_cfg(tmp_path, cfg_dict)
    assert main(["solve", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "theta0" in capsys.readouterr().err


def test_norms_subcommand(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {
        "domain": {"X": 1.0, "T": 2.0},
        "grid": {"nx": 256, "nt": 256},
        "field": "x*t",
        "norm": {"tag": "Lqr", "q": 2, "r": 2},
    })
    assert main(["norms", cfg]) == 0
    value = float(capsys.readouterr().out.strip())
    assert value == pytest.approx(np.sqrt(8.0) / 3.0, rel=1e-3)


def test_norms_unknown_tag(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {
        "domain": {"X": 1.0, "T": 1.0},
        "grid": {"nx": 16, "nt": 4},
        "field": "x",
        "norm": {"tag": "Bogus"},
    })
    assert main(["norms", cfg]) == 2


def test_homogenize_subcommand(tmp_path):
    cfg = write_cfg(tmp_path, {
        "domain": {"X": 1.0, "T": 0.1},
        "grid": {"nx": 64, "nt": 32},
        "gas": {"nu": 0.1, "k": 1.0, "cV": 1.0, "lambda": 0.1},
        "bc": {"m": 3, "p0": 1.0, "pX": 1.0, "pi0": 0.0, "piX": 0.0},
        "data": {"eta0": "1 + 0.4*step(xi - 0.5)", "u0": "0",
                 "theta0": "1"},
        "breakpoints_xi": [0.5],
        "N": 10.0,
        "scheme": {"store_stride": 8},
    })
    out = tmp_path / "out"
    assert main(["homogenize", cfg, "--out", str(out),
                 "--eps-list", "0.25,0.125", "--stride", "2"]) == 0
    assert (out / "averaged.csv").exists()
    assert (out / "eta_recon_eps_0.25.csv").exists()
    assert (out / "eta_recon_eps_0.125.csv").exists()


def test_study_homog_guard_exit_code(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {
        "domain": {"X": 1.0, "T": 0.1},
        "grid": {"nx": 64, "nt": 32},
        "gas": {"nu": 0.1, "k": 1.0, "cV": 1.0, "lambda": 0.1},
        "bc": {"m": 3, "p0": 1.0, "pX": 1.0, "pi0": 0.0, "piX": 0.0},
        "data": {"eta0": "1 + 0.4*step(xi - 0.5)", "u0": "0", "theta0": "1"},
        "breakpoints_xi": [0.5],
        "study": {"eps_list": [0.015625]},
    })
    # eps_min/dx = 1 < 16: runtime error path, exit 2
    assert main(["study-homog", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "refine the grid" in capsys.readouterr().err


def test_study_lipschitz_small_run(tmp_path, capsys):
    cfg = {
        "problem": small_problem_cfg(nx=32, nt=40),
        "study": {
            "delta0": 0.1,
            "levels": 4,
            "patterns": {"eta0": "0.5*sin(2*3.141592653589793*x)"},
            # only sanity thresholds so the tiny grid cannot flake
            "thresholds": {"eta_C0L2": ["band", 0.5, 1.5]},
        },
    }
    path = write_cfg(tmp_path, cfg)
    out = tmp_path / "study"
    code = main(["study-lipschitz", path, "--out", str(out)])
    assert code == 0
    assert (out / "lipschitz_study.csv").exists()
    assert "RESULT" in (out / "lipschitz_study.csv.summary.txt").read_text()
