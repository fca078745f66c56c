import json
import subprocess
import sys

import pytest

from bpdesim.cli import (
    EXIT_INPUT,
    EXIT_IO,
    EXIT_NOT_CONVERGED,
    EXIT_OK,
    EXIT_PARTIAL,
    EXIT_USAGE,
    RunSpec,
    cmd_campaign,
    main,
    parse_frozen,
)
from bpdesim.bpde import BpdeConfig
from bpdesim.errors import EmptyCampaign
from bpdesim.hamiltonian_io import read_integral_file, synth_random_hamiltonian, write_integral_file
from bpdesim.report import load_result

from conftest import diagonal_ints

EPS = [-1.1, -0.35, 0.52, 1.3]


@pytest.fixture
def diag_file(tmp_path):
    path = tmp_path / "diag.ints"
    write_integral_file(diagonal_ints(4, EPS, ecore=0.2), path)
    return path


def test_run_diagonal(diag_file, tmp_path, capsys):
    out = tmp_path / "res.json"
    code = main(["run", "--ints", str(diag_file), "--d0", "1100", "--d1", "1010",
                 "--out", str(out), "--seed", "4"])
    assert code == EXIT_OK
    doc = load_result(out)
    assert abs(doc["gap_hartree"] - (EPS[2] - EPS[1])) <= doc["e_thre"]
    assert doc["converged"] and doc["config"]["seed"] == 4
    assert "gap" in capsys.readouterr().out


def test_run_not_converged(diag_file):
    code = main(["run", "--ints", str(diag_file), "--d0", "1100", "--d1", "1010",
                 "--max-iter", "1", "--mode", "exact"])
    assert code == EXIT_NOT_CONVERGED


def test_missing_file_names_path(tmp_path, capsys):
    missing = tmp_path / "nope.ints"
    code = main(["run", "--ints", str(missing), "--d0", "10", "--d1", "01"])
    assert code == EXIT_IO
    assert str(missing) in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["run", "--d0", "10"],
    ["frobnicate"],
    ["run", "--ints", "x", "--d0", "10", "--d1", "01", "--mode", "noisy"],
    [],
])
def test_usage_errors(argv):
    assert main(argv) == EXIT_USAGE


@pytest.mark.parametrize("d0, d1, extra", [
    ("110", "101", []),
    ("1100", "1100", []),
    ("1100", "1110", []),
    ("1100", "1010", ["--shots", "0"]),
    ("1100", "1010", ["--freeze", "a,b"]),
])
def test_input_errors(diag_file, d0, d1, extra):
    assert main(["run", "--ints", str(diag_file), "--d0", d0, "--d1", d1, *extra]) == EXIT_INPUT


def test_malformed_file(tmp_path, capsys):
    bad = tmp_path / "bad.ints"
    bad.write_text("garbage\n")
    assert main(["oracle", "--ints", str(bad), "--d0", "10", "--d1", "01"]) == EXIT_INPUT
    assert "bpde:" in capsys.readouterr().err


def test_freeze_flag(tmp_path):
    path = tmp_path / "six.ints"
    write_integral_file(diagonal_ints(6, [-2.0, -1.5] + EPS), path)
    out = tmp_path / "r.json"
    code = main(["run", "--ints", str(path), "--freeze", "0,1", "--d0", "1100", "--d1", "1010",
                 "--mode", "exact", "--out", str(out)])
    assert code == EXIT_OK
    doc = load_result(out)
    assert doc["frozen"] == [0, 1] and doc["n_qubits"] == 4
    assert parse_frozen("3, 1,1") == [1, 3] and parse_frozen(None) == []


# ---------------------------------------------------------------- campaign

def test_campaign_exact_repeats(diag_file, tmp_path, capsys):
    out = tmp_path / "camp.json"
    code = main(["campaign", "--ints", str(diag_file), "--d0", "1100", "--d1", "1010",
                 "--mode", "exact", "--repeats", "5", "--out", str(out)])
    assert code == EXIT_OK
    summary = json.loads(out.read_text())
    assert summary["format"] == "bpde-campaign/1"
    (row,) = summary["entries"]
    assert len(row["runs"]) == 5
    assert row["gap_std"] < row["e_thre"] / 10
    assert row["ratio"] == pytest.approx(1.0, abs=0.01)
    assert row["delta_e_ref"] == pytest.approx(EPS[2] - EPS[1])
    assert [r["config"]["seed"] for r in row["runs"]] == [0, 1, 2, 3, 4]
    assert "ratio" in capsys.readouterr().out


def test_campaign_spec_file_and_partial_failure(tmp_path, diag_file):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps([
        {"ints": diag_file.name, "d0": "1100", "d1": "1010", "repeats": 2,
         "overrides": {"mode": "exact"}, "label": "ok"},
        {"ints": "missing.ints", "d0": "1100", "d1": "1010", "label": "broken"},
    ]))
    out = tmp_path / "camp.json"
    assert main(["campaign", "--spec", str(spec), "--out", str(out)]) == EXIT_PARTIAL
    rows = json.loads(out.read_text())["entries"]
    assert rows[0]["error"] is None and rows[0]["repeats"] == 2
    assert rows[1]["error"].startswith("FileNotFoundError")


def test_campaign_empty():
    with pytest.raises(EmptyCampaign):
        cmd_campaign([], BpdeConfig())
    assert main(["campaign"]) == EXIT_INPUT


def test_campaign_spec_rejects_unknown_keys(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps([{"ints": "a", "d0": "10", "d1": "01", "colour": 1}]))
    assert main(["campaign", "--spec", str(spec)]) == EXIT_INPUT
    with pytest.raises(ValueError):
        RunSpec("a", "10", "01", repeats=0)


# ---------------------------------------------------------------- oracle

def test_oracle_with_result(tmp_ints, tmp_path, capsys):
    ints = tmp_ints(4, 3)
    res = tmp_path / "res.json"
    assert main(["run", "--ints", str(ints), "--d0", "1100", "--d1", "1010",
                 "--out", str(res)]) == EXIT_OK
    rep = tmp_path / "rep.json"
    assert main(["oracle", "--ints", str(ints), "--d0", "1100", "--d1", "1010",
                 "--result", str(res), "--out", str(rep)]) == EXIT_OK
    report = json.loads(rep.read_text())
    assert report["in_band"]
    assert report["ratio"] == pytest.approx(report["gap_bpde_hartree"] / report["gap_casci_hartree"])
    assert "PASS" in capsys.readouterr().out


def test_oracle_dimension_mismatch(tmp_ints, tmp_path, capsys):
    small = tmp_ints(3, 1, name="small.ints")
    big = tmp_ints(4, 1, name="big.ints")
    res = tmp_path / "res.json"
    assert main(["run", "--ints", str(small), "--d0", "110", "--d1", "101",
                 "--mode", "exact", "--out", str(res)]) == EXIT_OK
    code = main(["oracle", "--ints", str(big), "--d0", "1100", "--d1", "1010", "--result", str(res)])
    assert code == EXIT_INPUT
    assert "DimensionMismatch" in capsys.readouterr().err


# ---------------------------------------------------------------- synth / bench

def test_synth_deterministic(tmp_path):
    a, b = tmp_path / "a.ints", tmp_path / "b.ints"
    for p in (a, b):
        assert main(["synth", "--n-orb", "3", "--seed", "11", "--out", str(p)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    ints = read_integral_file(a)
    ref = synth_random_hamiltonian(3, 11, 10.0)
    assert ints.n_orb == 3
    assert abs(ints.h1 - ref.h1).max() < 1e-12 and abs(ints.h2 - ref.h2).max() < 1e-12


def test_bench_command(tmp_path, capsys):
    out = tmp_path / "bench.json"
    code = main(["bench", "--sizes", "3", "--workers", "1", "--reps", "3", "--terms", "8",
                 "--out", str(out)])
    assert code == EXIT_OK
    rows = json.loads(out.read_text())["rows"]
    assert {(r["backend"], r["workers"]) for r in rows} == {("gate", 1), ("fused", 1)}
    assert "speedup" in capsys.readouterr().out


def test_module_entry_point(tmp_path):
    out = tmp_path / "s.ints"
    proc = subprocess.run([sys.executable, "-m", "bpdesim", "synth", "--n-orb", "2", "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and out.exists()
    proc = subprocess.run([sys.executable, "-m", "bpdesim", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "0.1.0" in proc.stdout
