"""Command-line interface: subcommands, outputs, exit codes."""

import csv
import json
import subprocess
import sys

import numpy as np

from h2slice.compress import save_matrix_file


def run_cli(*args, **kw):
    return subprocess.run([sys.executable, "-m", "h2slice.cli", *args],
                          capture_output=True, text=True, timeout=600, **kw)


def test_version():
    r = run_cli("--version")
    assert r.returncode == 0
    assert "h2slice" in r.stdout


def test_eig_single_index():
    r = run_cli("eig", "--geom", "circle", "--n", "128", "--k", "64")
    assert r.returncode == 0
    assert "k=   64" in r.stdout
    assert "format=hss" in r.stdout


def test_eig_range_jsonl_output(tmp_path):
    out = tmp_path / "res.jsonl"
    r = run_cli("eig", "--geom", "circle", "--n", "128", "--k-range", "30", "40",
                "--eps-ev", "1e-6", "--output", str(out))
    assert r.returncode == 0
    lines = out.read_text().strip().splitlines()
    recs = [json.loads(l) for l in lines]
    assert recs[0]["type"] == "meta"
    ests = [r for r in recs if r["type"] == "estimate"]
    assert [e["k"] for e in ests] == list(range(30, 41))
    vals = [e["value"] for e in ests]
    assert vals == sorted(vals)


def test_eig_csv_output(tmp_path):
    out = tmp_path / "res.csv"
    r = run_cli("eig", "--geom", "circle", "--n", "128", "--k-range", "10", "12",
                "--output", str(out), "--output-format", "csv")
    assert r.returncode == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 3
    assert rows[0]["k"] == "10"
    float(rows[0]["value"])  # parses


def test_eig_parallel_master(tmp_path):
    out = tmp_path / "res.jsonl"
    r = run_cli("eig", "--geom", "circle", "--n", "128", "--k-range", "50", "70",
                "--workers", "2", "--schedule", "master", "--output", str(out))
    assert r.returncode == 0
    assert "efficiency" in r.stdout
    recs = [json.loads(l) for l in out.read_text().strip().splitlines()]
    kinds = {r["type"] for r in recs}
    assert kinds == {"meta", "estimate", "task"}


def test_eig_matrix_file(tmp_path):
    rng = np.random.default_rng(71)
    A = rng.standard_normal((48, 48))
    A = (A + A.T) / 2
    path = tmp_path / "m.mat"
    save_matrix_file(path, A)
    r = run_cli("eig", "--matrix-file", str(path), "--k", "24",
                "--eps-ev", "1e-7", "--leaf-size", "16")
    assert r.returncode == 0
    shown = float(r.stdout.split("value=")[1].split()[0])
    w = np.linalg.eigvalsh(A)
    assert abs(shown - w[23]) < 1e-6


def test_inertia_subcommand():
    r = run_cli("inertia", "--geom", "circle", "--n", "96", "--mu", "900", "1100")
    assert r.returncode == 0
    assert "below" in r.stdout
    assert r.stdout.count("mu=") == 2


def test_compare_subcommand():
    r = run_cli("compare", "--geom", "circle", "--n", "96", "--formats", "blr2", "hss")
    assert r.returncode == 0
    assert "blr2" in r.stdout and "hss" in r.stdout
    assert "spread" in r.stdout


def test_selftest_quick_passes():
    r = run_cli("selftest", "--suite", "quick")
    assert r.returncode == 0
    assert "FAIL" not in r.stdout
    assert "checks passed" in r.stdout


def test_selftest_detects_injected_fault():
    # the harness must prove it can catch a genuine defect
    r = run_cli("selftest", "--suite", "quick", "--inject-fault")
    assert r.returncode == 3
    assert "FAIL" in r.stdout


def test_exit_code_config_errors():
    # missing index selection
    assert run_cli("eig", "--geom", "circle", "--n", "64").returncode == 2
    # grid without per-axis count
    assert run_cli("eig", "--geom", "grid", "--dim", "2", "--k", "1").returncode == 2
    # missing matrix file
    assert run_cli("eig", "--matrix-file", "/no/such/file", "--k", "1").returncode == 2
    # argparse-level misuse
    assert run_cli("eig", "--format", "bogus", "--k", "1").returncode == 2
    assert run_cli("nonsense").returncode == 2


def test_exit_code_not_in_interval():
    r = run_cli("eig", "--geom", "circle", "--n", "64", "--k", "10",
                "--interval", "5000", "6000")
    assert r.returncode == 3
    assert "error:" in r.stderr
