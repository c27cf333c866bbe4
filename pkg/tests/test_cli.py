"""End-to-end command-line behaviour and exit codes."""
import json
import subprocess
import sys

import pytest

from izosga.cli import main
from izosga.runio import read_manifest

TINY_INI = """
[network]
num_antennas = 2
num_users = 2
num_irs_elements = 4

[optimizer]
horizon = 12
wmmse_iters = 3
ma_window = 4
gap_cadence = 4
gap_reference_budget = 10

[experiment]
replications = 1
seed = 6
"""


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.ini"
    path.write_text(TINY_INI)
    return path


def test_selftest_passes(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 6
    assert "FAIL" not in out
    assert "backend:" in out


def test_run_command_end_to_end(tiny_config, tmp_path, capsys):
    out_dir = tmp_path / "runs"
    code = main(["run", "--config", str(tiny_config), "--out", str(out_dir)])
    assert code == 0
    man = read_manifest(out_dir / "manifest.json")
    assert man["master_seed"] == 6  # seed from the config file
    assert (out_dir / man["runs"][0]["csv"]).exists()
    assert "manifest" in capsys.readouterr().out


def test_seed_precedence(tiny_config, tmp_path, monkeypatch):
    out_a = tmp_path / "a"
    assert main(["run", "--config", str(tiny_config), "--out", str(out_a), "--seed", "11"]) == 0
    assert read_manifest(out_a / "manifest.json")["master_seed"] == 11

    monkeypatch.setenv("IZOSGA_SEED", "33")
    out_b = tmp_path / "b"
    assert main(["run", "--config", str(tiny_config), "--out", str(out_b)]) == 0
    assert read_manifest(out_b / "manifest.json")["master_seed"] == 33

    monkeypatch.setenv("IZOSGA_SEED", "not-a-seed")
    assert main(["run", "--config", str(tiny_config), "--out", str(tmp_path / "c")]) == 1


def test_config_error_exit_code(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[network]\nantennae = 3\n")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "x")]) == 1
    missing = tmp_path / "nope.ini"
    assert main(["run", "--config", str(missing), "--out", str(tmp_path / "y")]) == 1


def test_run_failure_exit_code(tiny_config, tmp_path):
    text = tiny_config.read_text().replace(
        "wmmse_iters = 3", "wmmse_iters = 3\nwmmse_init = psychic"
    )
    cfg = tmp_path / "broken.ini"
    cfg.write_text(text)
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "z")]) == 2


def test_diagnose_reports_moreau_and_eps_bar(tiny_config, tmp_path, capsys):
    out_dir = tmp_path / "runs"
    assert main(["run", "--config", str(tiny_config), "--out", str(out_dir)]) == 0
    capsys.readouterr()
    report_path = tmp_path / "report.json"
    code = main(
        [
            "diagnose",
            "--manifest",
            str(out_dir / "manifest.json"),
            "--lam",
            "0.5",
            "--out",
            str(report_path),
        ]
    )
    assert code == 0
    printed = json.loads(capsys.readouterr().out)
    saved = json.loads(report_path.read_text())
    assert printed == saved
    assert saved["envelope_lambda"] == 0.5
    assert saved["moreau_estimate"] >= 0
    assert saved["gap_count"] == 4  # cadence 4 over horizon 12: t = 0,4,8,12
    assert saved["epsilon_bar"] >= 0


def test_diagnose_unknown_csv(tiny_config, tmp_path):
    out_dir = tmp_path / "runs"
    assert main(["run", "--config", str(tiny_config), "--out", str(out_dir)]) == 0
    code = main(
        ["diagnose", "--manifest", str(out_dir / "manifest.json"), "--csv", "ghost.csv"]
    )
    assert code == 1


def test_version_and_usage():
    assert main(["--version"]) == 0
    assert main([]) == 1  # a subcommand is required


def test_console_script_installed():
    out = subprocess.run(
        [sys.executable, "-m", "pytest", "--version"], capture_output=True
    )  # sanity that subprocess works at all
    assert out.returncode == 0
    script = subprocess.run(["izosga", "--version"], capture_output=True, text=True)
    assert script.returncode == 0
    assert script.stdout.startswith("izosga ")
