import csv
import json
import math

import pytest

from surface_maryland.cli import main


def run(tmp_path, *args):
    return main(list(args) + ["--out", str(tmp_path)])


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_green_value(tmp_path, capsys):
    assert run(tmp_path, "green", "--nu", "1", "--x", "0", "--E", "2") == 0
    row = read_csv(tmp_path / "green.csv")[0]
    assert float(row["re"]) == pytest.approx(-1 / math.sqrt(3), abs=1e-16)
    assert float(row["im"]) == 0.0
    assert "G(E=2)" in capsys.readouterr().out


def test_bands_closed_form(tmp_path):
    assert run(tmp_path, "bands", "--q", "1", "--omega", "0.25", "--n-samples", "16") == 0
    rows = [r for r in read_csv(tmp_path / "bands.csv") if r["j"] == "1"]
    assert rows
    for r in rows:
        assert float(r["E"]) == pytest.approx(math.sqrt(2) - math.cos(2 * math.pi * float(r["k2"])), abs=1e-12)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["schema_version"] == 1 and summary["command"] == "bands"
    assert all(inv["passed"] for inv in summary["invariant_results"])


def test_bands_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["bands", "--q", "3", "--omega", "0.2", "--n-samples", "32", "--out", str(d)]) == 0
    for name in ("bands.csv", "spectrum.csv", "band_diagnostics.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_verify_trivial(tmp_path):
    assert run(tmp_path, "verify") == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert len(summary["invariant_results"]) >= 5


def test_states_and_scatter(tmp_path):
    assert run(tmp_path, "states", "--k1", "0.1", "--k2", "0.2", "--g", "1", "--omega", "0.3") == 0
    rows = read_csv(tmp_path / "states.csv")
    assert {r["class"] for r in rows} >= {"total", "volume", "surface"}
    assert run(tmp_path, "scatter", "--k1", "0.1", "--k2", "0.2", "--g", "1", "--omega", "0.3") == 0
    vals = json.loads((tmp_path / "summary.json").read_text())["values"]
    assert "t0" in vals and "r0" in vals


@pytest.mark.parametrize("args", [["green", "--g", "-1"], ["green", "--side", "left"],
                                  ["bands", "--alpha", "golden"], ["green", "--set", "nope=1"],
                                  ["frobnicate"]])
def test_config_errors_exit_2(tmp_path, args):
    assert run(tmp_path, *args) == 2


@pytest.mark.parametrize("args", [["green", "--nu", "1", "--x", "0", "--E", "1"],
                                  ["green", "--nu", "2", "--x", "0,0", "--E", "0"],
                                  ["limit", "--omega", "0.5"]])
def test_numeric_failures_exit_3(tmp_path, args):
    assert run(tmp_path, *args) == 3


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sample\nE = 3  # energy\nnu = 1\nx = 0\n")
    assert run(tmp_path, "green", "--config", str(cfg)) == 0
    assert float(read_csv(tmp_path / "green.csv")[0]["E"]) == 3.0
    assert run(tmp_path, "green", "--config", str(cfg), "--set", "E=4") == 0
    assert float(read_csv(tmp_path / "green.csv")[0]["E"]) == 4.0
    assert run(tmp_path, "green", "--config", str(cfg), "--set", "E=4", "--E", "5") == 0
    assert float(read_csv(tmp_path / "green.csv")[0]["E"]) == 5.0


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("SURFACE_MARYLAND_OUT", str(tmp_path / "env"))
    assert main(["green", "--nu", "1", "--x", "0", "--E", "2"]) == 0
    assert (tmp_path / "env" / "green.csv").exists()
