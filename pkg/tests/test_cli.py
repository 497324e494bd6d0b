import json
import os
import subprocess
import sys

import pytest

from robust_amp import cli
from robust_amp.report import read_csv


def run(args):
    """Exit code of the CLI, whether argparse exits or ``main`` returns."""
    try:
        return cli.main([str(a) for a in args])
    except SystemExit as exc:
        return exc.code


def test_potential_two_maxima(tmp_path):
    out = tmp_path / "pot.csv"
    assert run(["potential", "--alpha", 0.5, "--eta", "1e-4", "--delta", "1e-10",
                "--rho", 0.33, "-o", out]) == 0
    comments, header, rows = read_csv(out)
    assert header == ["E", "phi"] and len(rows) == 256
    assert comments[0].startswith("robust-amp ")
    assert "command: potential" in comments
    assert sum(c.startswith("maximum E=") for c in comments) == 2


def test_de_overlays_amp(tmp_path):
    de_out, amp_out = tmp_path / "de.csv", tmp_path / "amp.csv"
    assert run(["de", "--rho", 0.1, "-o", de_out]) == 0
    assert run(["amp", "--n", 2000, "--rho", 0.1, "--seed", 1, "-o", amp_out]) == 0
    _, h1, de_rows = read_csv(de_out)
    _, h2, amp_rows = read_csv(amp_out)
    assert h1 == ["t", "E"] and h2 == ["t", "mse", "v_mean", "delta_a"]
    # both indexed by iteration; AMP starts at t = 1 where DE has its first update
    assert de_rows[1][0] == amp_rows[0][0] == "1"
    assert os.path.exists(tmp_path / "amp.estimate.csv")


def test_amp_deterministic(tmp_path):
    args = ["amp", "--n", 1000, "--rho", 0.1, "--seed", 7]
    assert run(args + ["-o", tmp_path / "a.csv"]) == 0
    assert run(args + ["-o", tmp_path / "b.csv"]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.estimate.csv").read_bytes() == (tmp_path / "b.estimate.csv").read_bytes()


def test_amp_zero_density(tmp_path, capsys):
    assert run(["amp", "--n", 500, "--rho", 0]) == 0
    text = capsys.readouterr().out
    assert "# converged: True" in text and "# iterations: 1" in text
    assert "# final_mse: 0.0" in text


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# test config\nrho = 0.2\nn = 1e3   # sci notation\nseed = 3\n"
                   "variance-rule = mu_amp\n")
    assert run(["amp", "--config", cfg, "--seed", 4]) == 0
    out = capsys.readouterr().out
    for line in ("config: rho = 0.2", "config: n = 1000", "config: seed = 4", "seed: 4",
                 "config: variance_rule = mu_amp"):
        assert f"# {line}\n" in out


def test_bad_config_key(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("nonsense = 1\n")
    assert run(["de", "--config", cfg]) == 2
    assert capsys.readouterr().err.startswith("error[domain]:")


@pytest.mark.parametrize("args", [["amp", "--rho", 2], ["de", "--alpha", -1],
                                  ["phase", "--grid", "alpha:0:1"], ["amp", "--n", 0.5],
                                  ["de", "--bogus"]])
def test_bad_arguments_exit_2(args, capsys):
    assert run(args) == 2
    assert "error[" in capsys.readouterr().err


def test_io_errors_exit_4(tmp_path, capsys):
    assert run(["amp", "--instance", tmp_path / "missing.bin"]) == 4
    assert capsys.readouterr().err.startswith("error[io]:")
    inst = tmp_path / "i.bin"
    assert run(["generate", "--n", 100, "--out", inst]) == 0
    (tmp_path / "t.bin").write_bytes(inst.read_bytes()[:500])
    assert run(["amp", "--instance", tmp_path / "t.bin"]) == 4
    assert capsys.readouterr().err.startswith("error[format]:")


def test_generate_then_solve(tmp_path):
    inst = tmp_path / "i.bin"
    assert run(["generate", "--n", 400, "--rho", 0.1, "--seed", 2, "--out", inst]) == 0
    out = tmp_path / "a.csv"
    assert run(["amp", "--instance", inst, "-o", out]) == 0
    comments, _, _ = read_csv(out)
    assert "config: n = 400" in comments and "config: seed = 2" in comments


def test_divergence_exit_3(monkeypatch, capsys):
    from robust_amp.errors import DivergenceError

    def boom(*a, **k):
        raise DivergenceError("non-finite AMP state at iteration 3", iteration=3)

    monkeypatch.setattr(cli, "amp_run", boom)
    assert run(["amp", "--n", 100]) == 3
    assert capsys.readouterr().err.startswith("error[divergence]:")


def test_phase_small_grid(tmp_path):
    out = tmp_path / "ph.csv"
    assert run(["phase", "--fix", "delta=1e-4,eta=1e-6",
                "--grid", "alpha:0.5:0.5:1,rho_over_alpha:0.2:0.9:4", "-o", out]) == 0
    comments, header, rows = read_csv(out)
    assert header[:5] == ["alpha", "rho", "delta", "eta", "class"] and len(rows) == 4
    assert "config: fix = delta=0.0001,eta=1e-06" in comments
    _, lheader, _ = read_csv(tmp_path / "ph.lines.csv")
    assert lheader == ["axis_value", "critical_value", "kind"]


def test_reproduce_fig1(tmp_path):
    out = tmp_path / "fig1"
    assert run(["reproduce", "fig1", "--out-dir", out]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "ok" and len(manifest["runs"]) == 6
    run33 = next(r for r in manifest["runs"] if r["name"] == "potential rho=0.33")
    assert len(run33["maxima"]) == 2 and run33["seconds"] >= 0
    for r in manifest["runs"]:
        for f in r["files"]:
            assert (out / f).exists()


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "robust_amp", "--version"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("robust-amp ")
