import csv
import json
import subprocess
import sys

import pytest

from nwheat.cli import CSV_COLUMNS, main, parse_value


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_eval_origin(capsys):
    code, out, _ = run(capsys, "eval", "--solution", "u1", "--x", "0", "--t", "0", "--prec", "128")
    doc = json.loads(out)
    assert code == 0 and doc["certified"] is True
    assert doc["schema_version"] == 1 and doc["command"] == "eval"
    assert doc["results"][0]["value"]["mid"] == "0"
    assert float(doc["results"][0]["value"]["rad"]) < 1e-30


def test_numbers_are_strings(capsys):
    _, out, _ = run(capsys, "eval", "--solution", "u2", "--x", "1/2", "--t", "sqrt(2)")
    v = json.loads(out)["results"][0]["value"]
    assert isinstance(v["mid"], str) and isinstance(v["rad"], str)


def test_domain_and_usage_errors(capsys):
    code, _, err = run(capsys, "eval", "--solution", "u1", "--x", "-1", "--t", "0")
    assert code == 2 and err.startswith("ERROR domain:")
    code, _, err = run(capsys, "eval", "--solution", "weps", "--x", "1", "--t", "0")
    assert code == 2 and err.startswith("ERROR usage:")
    code, _, err = run(capsys, "eval", "--bogus")
    assert code == 2 and err.startswith("ERROR usage:")
    code, _, err = run(capsys, "derivative", "--solution", "u2", "--n", "61", "--x0", "0", "--t0", "1")
    assert code == 2 and err.startswith("ERROR domain:")


def test_prec_cap_env(capsys, monkeypatch):
    monkeypatch.setenv("NWHEAT_PREC_CAP", "64")
    code, _, err = run(capsys, "eval", "--x", "0", "--t", "1", "--prec", "128")
    assert code == 2 and "cap" in err


def test_derivative_csv(capsys):
    code, out, _ = run(capsys, "derivative", "--n", "1:4", "--x0", "0", "--t0", "0", "--format", "csv")
    rows = list(csv.reader(out.splitlines()))
    assert code == 0 and rows[0] == CSV_COLUMNS["derivative"]
    assert rows[1][3].startswith("1.7117795") and rows[2][3] == "0"


def test_proof_replay(capsys):
    code, out, _ = run(capsys, "proof-replay", "--solution", "u1", "--x0", "0", "--t0", "0", "--nmax", "20")
    doc = json.loads(out)
    assert code == 0 and doc["certified"]
    assert all(r["lower_bound_ok"] and r["dominance"] for r in doc["results"])
    assert doc["results"][0]["N0"] == doc["results"][0]["N"]


def test_envelope(capsys):
    code, out, _ = run(capsys, "envelope", "--eps", "0.5", "--check")
    doc = json.loads(out)
    cert = doc["results"][0]["certificate"]
    assert code == 0 and doc["certified"]
    assert cert["B2"]["mid"].startswith("1.19647") and cert["B3"]["mid"].startswith("1.00653")
    assert doc["results"][1]["check"]["passed"] and doc["results"][1]["check"]["points"] == 41 * 21


def test_residual_and_walczak(capsys):
    code, out, _ = run(capsys, "residual", "--grid", "0:2:2,-1:1:2", "--halve")
    doc = json.loads(out)
    assert code == 0 and 3.5 <= doc["results"][0]["halved"]["ratio"] <= 4.5
    code, out, _ = run(capsys, "walczak", "--nmax", "10", "--t-grid", "1:10:9")
    assert code == 0 and json.loads(out)["results"][0]["passed"]


def test_walczak_seeded(capsys):
    a = run(capsys, "walczak", "--nmax", "5", "--t-grid", "1:10:5", "--random", "--seed", "3")[1]
    b = run(capsys, "walczak", "--nmax", "5", "--t-grid", "1:10:5", "--random", "--seed", "3")[1]
    c = run(capsys, "walczak", "--nmax", "5", "--t-grid", "1:10:5", "--random", "--seed", "4")[1]
    assert a == b and a != c


def test_taylor_scan_and_plot(capsys, tmp_path):
    table = tmp_path / "taylor.csv"
    code, _, _ = run(capsys, "taylor", "--x0", "0", "--t0", "0", "--N-range", "1:10", "--format", "csv", "-o", str(table))
    assert code == 0
    header = next(csv.reader(table.open()))
    assert header == CSV_COLUMNS["taylor"]
    svg1, svg2 = tmp_path / "a.svg", tmp_path / "b.svg"
    assert main(["plot", "-i", str(table), "-o", str(svg1)]) == 0
    assert main(["plot", "-i", str(table), "-o", str(svg2)]) == 0
    assert svg1.read_bytes() == svg2.read_bytes()
    assert svg1.read_text().lstrip().startswith("<?xml")


def test_envelope_plot(capsys, tmp_path):
    table = tmp_path / "env.csv"
    assert main(["envelope", "--eps", "1/2", "--check", "--x-axis=-200:200:9", "--t-axis", "0:1:2", "--format", "csv", "-o", str(table)]) == 0
    svg = tmp_path / "env.svg"
    assert main(["plot", "-i", str(table), "-o", str(svg)]) == 0
    capsys.readouterr()


def test_deterministic_output():
    argv = [sys.executable, "-m", "nwheat.cli", "derivative", "--n", "0:6", "--x0", "1/3", "--t0", "sqrt(2)"]
    a = subprocess.run(argv, capture_output=True, check=True).stdout
    b = subprocess.run(argv, capture_output=True, check=True).stdout
    assert a == b and b"schema_version" in a


def test_parse_value():
    from fractions import Fraction

    assert parse_value("0.5") == Fraction(1, 2)
    assert parse_value("-3/4") == Fraction(-3, 4)
    assert str(parse_value("sqrt(2)")) == "sqrt(2)"
