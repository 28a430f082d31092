import csv
import json
import math
import subprocess
import sys

import pytest

from cleobs import cli, radii_laws
from cleobs.exact_formulas import touching_probability


def run_json(capsys, *argv):
    code = cli.run(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def values(report):
    return {r["name"]: r["value"] for r in report["results"]}


def test_prob(capsys):
    code, rep = run_json(capsys, "prob", "--kappa", "6")
    assert code == 0
    assert values(rep)["touching_probability"] == pytest.approx(0.5, abs=1e-13)
    assert values(rep)["touching_probability"] == touching_probability(6.0)


def test_report_schema(capsys):
    _, rep = run_json(capsys, "root", "np", "--kappa", "6", "--a", "1")
    for key in ("command", "params", "seed", "partition", "results", "wall_clock", "version", "schema"):
        assert key in rep
    assert rep["schema"] == cli.SCHEMA_VERSION
    row = rep["results"][0]
    assert set(row) == {"name", "value", "provenance", "tolerance", "reference", "passed"}
    assert row["value"] == pytest.approx(5 / 48, abs=1e-12)


def test_exact_reports_infinity(capsys):
    code, rep = run_json(capsys, "exact", "--kappa", "6", "--lambda", "-5", "--law", "ssw")
    assert code == 0
    assert values(rep)["moment[ssw]"] == "Infinite"


def test_usage_errors(capsys):
    assert cli.run(["root", "nl", "--kappa", "3", "--a", "1"]) == cli.EXIT_USAGE
    assert cli.run(["prob"]) == cli.EXIT_USAGE
    assert cli.run(["exact", "--kappa", "6", "--lambda", "1", "--law", "bogus"]) == cli.EXIT_USAGE
    capsys.readouterr()


def test_gate_failure_exit_code(capsys):
    code, rep = run_json(capsys, "verify", "integral1", "--tol", "0")
    assert code == cli.EXIT_GATE
    assert any(r["passed"] is False for r in rep["results"])
    code, _ = run_json(capsys, "verify", "integral1")
    assert code == cli.EXIT_OK


def test_internal_error_exit_code(monkeypatch, capsys):
    def broken(*a, **k):
        raise radii_laws.ResidueMismatch("forced")
    monkeypatch.setattr(radii_laws, "build_series", broken)
    assert cli.run(["density", "--kappa", "6", "--law", "wtd"]) == cli.EXIT_INTERNAL
    assert "forced" in capsys.readouterr().err


def test_density_csv(tmp_path, capsys):
    path = tmp_path / "d.csv"
    code, _ = run_json(capsys, "density", "--kappa", "6", "--law", "wtd", "--out", str(path), "--points", "11")
    assert code == 0
    rows = list(csv.DictReader(path.open()))
    assert list(rows[0]) == ["s", "density", "ccdf", "law_tag", "kappa", "K"]
    assert len(rows) == 11 and rows[0]["law_tag"] == "wtd"
    assert all(float(r["ccdf"]) >= 0 for r in rows)


def test_report_to_file(tmp_path, capsys):
    path = tmp_path / "r.json"
    assert cli.run(["--out", str(path), "prob", "--kappa", "5"]) == 0
    assert capsys.readouterr().out == ""
    assert json.loads(path.read_text())["command"] == "prob"


def test_cascade_seed_replay(tmp_path, capsys):
    argv = ["cascade", "--kappa", "6", "--a", "0.5", "--eps-decades", "1", "--samples", "20000", "--seed", "3"]
    c1, r1 = run_json(capsys, *argv, "--csv", str(tmp_path / "a.csv"))
    c2, r2 = run_json(capsys, "--threads", "2", *argv, "--csv", str(tmp_path / "b.csv"))
    assert c1 == c2 == 0
    assert r1["seed"] == 3 and "spawn_key" in r1["partition"]
    assert (tmp_path / "a.csv").read_text() == (tmp_path / "b.csv").read_text()
    assert r1["results"] == r2["results"]


def test_loewner_drift_check(capsys):
    code, rep = run_json(capsys, "loewner", "drift-check", "--states", "200")
    assert code == 0


def test_loewner_passage_csv(tmp_path, capsys):
    path = tmp_path / "p.csv"
    code, rep = run_json(capsys, "loewner", "passage", "--samples", "300", "--dt", "1e-2", "--seed", "1",
                         "--csv", str(path))
    assert code in (0, cli.EXIT_GATE)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["tau", "side"] and len(rows) == 301


def test_console_script_module_entry():
    proc = subprocess.run([sys.executable, "-m", "cleobs.cli", "prob", "--kappa", "6"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["results"][0]["value"] == pytest.approx(0.5)


def test_quick_suite(capsys):
    code = cli.run(["suite", "--quick"])
    err = capsys.readouterr().err
    assert code == 0
    assert err.count("[PASS]") == 6 and "[FAIL]" not in err
