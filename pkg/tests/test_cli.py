import csv
import io
import json
import subprocess
import sys

import pytest

from intcurrents.cli import main
from intcurrents.currentfile import read_current_file
from intcurrents.experiments import polygon_disk_area


@pytest.fixture(scope="module")
def disk_file(tmp_path_factory):
    p = tmp_path_factory.mktemp("cli") / "disk.json"
    assert main(["generate", "--family", "disk", "--n-segments", "64", "--out", str(p)]) == 0
    return p


@pytest.fixture(scope="module")
def split_file(tmp_path_factory):
    p = tmp_path_factory.mktemp("cli") / "split.json"
    assert main(["generate", "--family", "split_disks", "--n-segments", "64", "--out", str(p)]) == 0
    return p


def test_generate_writes_target_ball(disk_file):
    cf = read_current_file(disk_file)
    assert set(cf.chains) == {"T"} and set(cf.maps) == {"psi"}
    assert "ball" in cf.target_chains


def test_mass(disk_file, capsys):
    assert main(["mass", "--input", str(disk_file)]) == 0
    out = capsys.readouterr().out
    assert float(out.split()[1]) == pytest.approx(polygon_disk_area(64), rel=1e-12)


def test_boundary_then_decompose(disk_file, tmp_path, capsys):
    b = tmp_path / "b.json"
    assert main(["boundary", "--input", str(disk_file), "--out", str(b)]) == 0
    assert "T_boundary" in read_current_file(b).chains
    out = tmp_path / "dec.json"
    assert main(["decompose", "--input", str(b), "--chain", "T_boundary", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["curves"] == [] and len(rep["loops"]) == 1
    assert rep["total_length"] == pytest.approx(rep["loop_lengths"][0])


def test_pushforward(split_file, tmp_path, capsys):
    out = tmp_path / "p.json"
    assert main(["pushforward", "--input", str(split_file), "--out", str(out)]) == 0
    assert "pushforward" in read_current_file(out).chains


def test_slice_count_and_list(disk_file, tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert main(["slice", "--input", str(disk_file), "--levels", "32", "--out", str(out)]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert len(rows) == 32 and set(rows[0]) == {"level", "slice_mass", "boundary_defect", "commutation_defect"}
    assert "integral" in capsys.readouterr().out
    assert main(["slice", "--input", str(disk_file), "--levels=-0.5,0.25", "--direction", "1,1"]) == 0
    text = capsys.readouterr().out
    assert text.count("\n") >= 3


def test_flatnorm_and_flatdist(disk_file, split_file, tmp_path):
    out = tmp_path / "f.json"
    assert main(["flatnorm", "--input", str(disk_file), "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["solver_status"] == "optimal" and rep["value"] == pytest.approx(polygon_disk_area(64))
    out2 = tmp_path / "d.json"
    assert main(["flatdist", "--input", str(disk_file), "--input2", str(disk_file), "--out", str(out2)]) == 0
    assert json.loads(out2.read_text())["value"] == 0.0


def test_flatdist_lp_dump(disk_file, tmp_path):
    b = tmp_path / "b.json"
    main(["boundary", "--input", str(disk_file), "--out", str(b)])
    lp = tmp_path / "x.lp"
    assert main(["flatnorm", "--input", str(b), "--chain", "T_boundary", "--dump-lp", str(lp), "--out", str(tmp_path / "r.json")]) == 0
    assert lp.read_text().startswith("\\")


def test_rigidity_check_exit_codes(disk_file, split_file, tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["rigidity-check", "--input", str(split_file), "--samples", "8", "--out", str(out)]) == 1
    rep = json.loads(out.read_text())
    assert rep["verdict"] == "hypotheses_violated" and rep["violated"] == [3]
    assert capsys.readouterr().out.startswith("verdict hypotheses_violated")
    assert main(["rigidity-check", "--input", str(disk_file), "--samples", "8", "--metric", "length:2"]) == 0
    assert json.loads(capsys.readouterr().out)["verdict"] == "consistent_with_isometry"


def test_chain_check(disk_file, capsys):
    assert main(["chain-check", "--input", str(disk_file)]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["all_equal"] and len(rep["chain"]) == 5


def test_stability_run(tmp_path):
    out = tmp_path / "st.csv"
    code = main(["stability-run", "--family", "annulus", "--eps", "0.4,0.2", "--n-segments", "128",
                 "--samples", "4", "--metric", "length:2", "--out", str(out)])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert [r["parameter"] for r in rows] == ["0.4", "0.2"]


@pytest.mark.parametrize(
    "argv, message",
    [
        (["mass"], "--input is required"),
        (["mass", "--input", "/nonexistent.json"], "/nonexistent.json"),
        (["slice", "--levels", "a,b"], "--input is required"),
        (["stability-run", "--family", "annulus"], "needs --eps"),
        (["generate", "--family", "annulus", "--eps", "0.1,0.2", "--out", "x"], "one instance"),
        (["generate", "--family", "annulus", "--eps", "2"], "0 < eps < 1"),
    ],
)
def test_bad_input_exit_two(argv, message, capsys):
    assert main(argv) == 2
    assert message in capsys.readouterr().err


def test_missing_chain_names_field(disk_file, capsys):
    assert main(["mass", "--input", str(disk_file), "--chain", "Q"]) == 2
    assert "chains.Q" in capsys.readouterr().err


def test_malformed_json(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"version": "1",\n "mesh": [}')
    assert main(["mass", "--input", str(p)]) == 2
    assert f"{p}:2:" in capsys.readouterr().err


def test_console_entry_point(disk_file):
    r = subprocess.run([sys.executable, "-m", "intcurrents.cli", "mass", "--input", str(disk_file)],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("mass ")
