import csv
import json
import os
import subprocess
import sys
import xml.etree.ElementTree as ET
from math import pi

import pytest

from maghodge.cli import main


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def run(tmp_path, *argv):
    return main(list(argv) + ["--output-dir", str(tmp_path)])


def test_analytic_berger(tmp_path):
    assert run(tmp_path, "spectrum", "analytic", "berger", "--epsilon", "1", "--t", "0.2",
               "--kmax", "3") == 0
    rows = read_csv(tmp_path / "spectrum.csv")
    first = [r for r in rows if r["k"] == "0" and r["p"] == "0"][0]
    assert float(first["value"]) == pytest.approx(0.04, abs=1e-15)
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert set(man) >= {"command", "versions", "mesh_hash", "seed", "wall_time_s", "outputs"}


def test_analytic_berger_table_row(tmp_path):
    assert run(tmp_path, "spectrum", "analytic", "berger", "--epsilon", "0.5", "--t", "0",
               "--kmax", "3") == 0
    rows = read_csv(tmp_path / "spectrum.csv")
    assert [float(r["value"]) for r in rows if (r["k"], r["p"]) == ("2", "1")] == [8.0]


def test_analytic_torus(tmp_path):
    assert run(tmp_path, "spectrum", "analytic", "torus", "--alpha", "3.14159,0", "--count", "5") == 0
    rows = read_csv(tmp_path / "spectrum.csv")
    assert len(rows) == 5 and float(rows[0]["value"]) > 0


def test_analytic_json_format(tmp_path):
    assert run(tmp_path, "spectrum", "analytic", "berger", "--format", "json") == 0
    data = json.loads((tmp_path / "spectrum.json").read_text())
    assert data[0]["value"] == 0


@pytest.mark.parametrize("argv", [
    ["spectrum", "analytic", "berger", "--epsilon", "-1"],
    ["spectrum", "analytic", "torus", "--alpha", "1,2", "--periods", "1"],
    ["spectrum", "analytic", "berger", "--bogus-flag"],
    ["spectrum", "mesh", "--gen", "torus:8", "--p", "1", "--formulation", "phase"],
    ["spectrum", "mesh", "--gen", "torus:8", "--p", "3"],
    ["spectrum", "mesh", "--gen", "torus:8", "--alpha-const", "1,2,3"],
    ["spectrum", "mesh", "--gen", "torus:8", "--potential", "nope:1"],
    ["spectrum", "mesh", "--gen", "torus:8", "--dirichlet"],
    ["spectrum", "mesh", "--gen", "cube:3"],
    ["verify", "unknown-suite"],
    ["verify", "figure1", "--gen", "torus:8"],
])
def test_usage_errors_exit_2(tmp_path, argv):
    assert run(tmp_path, *argv) == 2


def test_mesh_phase_flux_quantized(tmp_path):
    assert run(tmp_path, "spectrum", "mesh", "--gen", "torus:32", "--alpha-const", "6.28318,0",
               "--p", "0", "--formulation", "phase") == 0
    rows = read_csv(tmp_path / "spectrum.csv")
    # 6.28318 is 2 pi to 5e-6, so the first value is tiny but not exactly 0
    assert float(rows[0]["value"]) <= 1e-9
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["system"]["formulation"] == "phase-cochain"


def test_mesh_s3_functions(tmp_path):
    assert run(tmp_path, "spectrum", "mesh", "--gen", "s3:2", "--potential", "berger-tY2:0.2",
               "--p", "0", "--k", "2") == 0
    lam = float(read_csv(tmp_path / "spectrum.csv")[0]["value"])
    assert abs(lam - 0.04) / 0.04 < 0.10


def test_mesh_square_dirichlet(tmp_path):
    assert run(tmp_path, "spectrum", "mesh", "--gen", "square:32", "--alpha-const", "1,0",
               "--p", "0", "--dirichlet", "--export-vectors") == 0
    lam = float(read_csv(tmp_path / "spectrum.csv")[0]["value"])
    assert lam == pytest.approx(2 * pi**2, rel=0.01)
    assert (tmp_path / "vectors.npy").exists()


def test_mesh_file_input(tmp_path):
    mesh_path = tmp_path / "t.mesh"
    assert main(["mesh", "--gen", "torus:6", "-o", str(mesh_path)]) == 0
    assert run(tmp_path, "spectrum", "mesh", "--mesh", str(mesh_path), "--p", "1", "--k", "3") == 0
    rows = read_csv(tmp_path / "spectrum.csv")
    assert abs(float(rows[0]["value"])) <= 1e-8 and rows[0]["cluster_size"] == "2"


def test_mesh_command(tmp_path, capsys):
    out = tmp_path / "ico.mesh"
    assert main(["mesh", "--gen", "icosphere:0", "-o", str(out)]) == 0
    assert sum(1 for ln in out.read_text().splitlines() if ln.startswith("v ")) == 12
    capsys.readouterr()
    assert main(["mesh", "--gen", "s3:0"]) == 0
    assert json.loads(capsys.readouterr().out)["counts"] == [8, 24, 32, 16]
    assert main(["mesh", "--gen", "torus:3"]) == 0
    assert json.loads(capsys.readouterr().out)["euler_characteristic"] == 0


def test_verify_figure1(tmp_path):
    assert run(tmp_path, "verify", "figure1") == 0
    rows = read_csv(tmp_path / "spectrum.csv")
    assert len(rows) == 100
    root = ET.parse(tmp_path / "figure1.svg").getroot()
    lines = root.findall("{http://www.w3.org/2000/svg}polyline")
    assert sorted(pl.get("stroke") for pl in lines) == ["#2e5fa8"] * 2 + ["#c0392b"] * 2
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["passed"] and len(rep["reports"]) == 100
    assert run(tmp_path / "noplot", "verify", "figure1", "--no-plot") == 0
    assert not (tmp_path / "noplot" / "figure1.svg").exists()


def test_verify_shigekawa(tmp_path):
    assert run(tmp_path, "verify", "shigekawa", "--gen", "torus:24") == 0
    rows = read_csv(tmp_path / "spectrum.csv")
    assert len(rows) == 25


def test_verify_diamagnetic(tmp_path, capsys):
    assert run(tmp_path, "verify", "diamagnetic") == 0
    out = capsys.readouterr().out
    assert "fails for 1-forms" in out and "slope -2" in out
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["summary"]["linear_slope"] == -2.0


@pytest.mark.parametrize("suite", ["gallot-meyer", "cesis", "gap"])
def test_verify_other_suites(tmp_path, suite):
    assert run(tmp_path, "verify", suite) == 0


def test_verify_failure_exit_1(tmp_path, monkeypatch, capsys):
    from maghodge import bounds, suites

    def broken():
        rep = bounds.compare("forced", {}, 1.0, 0.0, "lower")
        return suites.SuiteResult("cesis", [rep])
    monkeypatch.setitem(suites.SUITES, "cesis", broken)
    import maghodge.cli as cli
    monkeypatch.setitem(cli.SUITES, "cesis", broken)
    assert run(tmp_path, "verify", "cesis") == 1
    assert "forced" in capsys.readouterr().err


def test_reproducible_csv(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    argv = ["spectrum", "mesh", "--gen", "torus:8", "--alpha-const", "1.5,0.5", "--p", "1"]
    assert run(a, *argv) == 0 and run(b, *argv) == 0
    assert (a / "spectrum.csv").read_bytes() == (b / "spectrum.csv").read_bytes()
    man = json.loads((a / "manifest.json").read_text())
    c = tmp_path / "c"
    assert main(man["argv"][:-2] + ["--output-dir", str(c)]) == 0
    assert (c / "spectrum.csv").read_bytes() == (a / "spectrum.csv").read_bytes()


def test_console_script_with_thread_cap(tmp_path):
    env = dict(os.environ, MAGHODGE_THREADS="1")
    proc = subprocess.run([sys.executable, "-m", "maghodge", "spectrum", "analytic", "torus",
                           "--count", "3", "--output-dir", str(tmp_path)],
                          env=env, capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "spectrum.csv").exists()
    proc = subprocess.run([sys.executable, "-m", "maghodge", "nonsense"], capture_output=True)
    assert proc.returncode == 2
