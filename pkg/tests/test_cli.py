import subprocess
import sys

import pytest

from holocompress.cli import EXIT_CONFIG, EXIT_OK, EXIT_VIOLATION, main
from holocompress.experiments import ExperimentConfig, RunManifest, read_csv


def test_spin_compress_flags(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code = main(["spin-compress", "--length", "8", "--region", "0:4", "--epsilon", "0.5,0.2",
                 "--out", str(out), "--export-dir", str(tmp_path / "exp")])
    assert code == EXIT_OK
    header, rows = read_csv(out)
    assert len(rows) == 2 and header[0] == "A_size"
    assert (tmp_path / "exp" / "unitary_eps0.5.npy").exists()
    assert (tmp_path / "exp" / "psi_M_eps0.2.json").exists()
    assert "wrote 2 rows" in capsys.readouterr().out


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.yaml"
    ExperimentConfig(kind="decay-fit", model={"length": 40}, region="0:20").save(cfg)
    out = tmp_path / "d.csv"
    assert main(["decay-fit", "--config", str(cfg), "--mass", "2", "--out", str(out), "--tol", "margin=1e-9"]) == 0
    man = RunManifest.load(out.with_name("d.manifest.json"))
    assert man.config["model"]["mass"] == 2 and man.config["model"]["length"] == 40
    assert man.tolerances["margin"] == 1e-9


def test_run_validate_reproduce(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    ExperimentConfig(kind="lemma-sweep", params={"trials": 30}, output=str(tmp_path / "l.csv")).save(cfg)
    assert main(["validate", "--config", str(cfg)]) == EXIT_OK
    assert main(["run", "--config", str(cfg)]) == EXIT_OK
    assert main(["reproduce", str(tmp_path / "l.manifest.json")]) == EXIT_OK
    assert "reproduced" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["gauss-compress", "--length", "50", "--region", "0:x"],
    ["gauss-compress", "--length", "50", "--mass", "0"],
    ["gauss-compress", "--grid", "3by3"],
    ["spin-compress", "--length", "30"],
    ["lemma-sweep", "--tol", "margin"],
    ["lemma-sweep", "--tol", "bogus=1"],
    ["frobnicate"],
    ["run"],
])
def test_bad_input_exits_2(argv, tmp_path):
    assert main(argv + (["--out", str(tmp_path / "x.csv")] if argv[0] not in ("frobnicate", "run") else [])) == EXIT_CONFIG


def test_config_kind_mismatch(tmp_path):
    cfg = tmp_path / "c.yaml"
    ExperimentConfig(kind="decay-fit").save(cfg)
    assert main(["gauss-compress", "--config", str(cfg)]) == EXIT_CONFIG


def test_missing_manifest():
    assert main(["reproduce", "/nonexistent/x.manifest.json"]) == EXIT_CONFIG


def test_violation_exits_1(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    ExperimentConfig(kind="lemma-sweep", params={"trials": 5}, inject_violation=True,
                     output=str(tmp_path / "v.csv")).save(cfg)
    assert main(["run", "--config", str(cfg)]) == EXIT_VIOLATION
    assert "VIOLATION" in capsys.readouterr().out


def test_help_exits_0():
    assert main(["--help"]) == EXIT_OK


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "holocompress.cli", "density-lemma", "--resolution", "20000",
                        "--out", str(tmp_path / "d.csv")], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
