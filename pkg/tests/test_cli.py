import json
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from waringlab.cli import main
from waringlab.core_arith import RepParams, RepTable, rep_count_all
from waringlab.exceptional_audit import build_audit
from waringlab.reports import (
    csv_text,
    emit_report,
    read_audit_binary,
    read_rep_binary,
    read_rep_csv,
    write_audit_binary,
    write_rep_binary,
    write_rep_csv,
)

SCHEMA = json.loads((Path(__file__).resolve().parents[1] / "docs" / "scan_report.schema.json").read_text())


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_exponents_line(capsys):
    code, out, _ = run(capsys, "exponents", "--s", "7", "--k", "3")
    assert code == 0 and out.strip() == "1/3 psi^4 (Theorem 1.1)"
    code, out, _ = run(capsys, "exponents", "--s", "8", "--k", "3")
    assert code == 0 and out.startswith("not covered")
    code, out, _ = run(capsys, "exponents", "--s", "7", "--k", "3", "--context")
    assert "context 1/2 psi^2" in out


def test_exponents_table(capsys, tmp_path):
    code, out, _ = run(capsys, "exponents")
    assert code == 0 and out.splitlines()[0] == "s,k,exponent,psiPower,source"
    assert "196,8,3/4,4,Theorem 1.6" in out


def test_reps_csv(capsys, tmp_path):
    out = tmp_path / "t.csv"
    code, _, _ = run(capsys, "reps", "--s", "2", "--k", "3", "--N", "100", "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "n,count" and "9,2" in lines and len(lines) == 101
    man = json.loads(Path(str(out) + ".manifest.json").read_text())
    assert man["params"] == {"N": 100, "k": 3, "s": 2} and man["command"] == "reps"


def test_theta_labels(capsys):
    code, out, _ = run(capsys, "theta", "--P", "16", "--R", "16", "--c", "1,0,1", "--d", "0,1,1")
    assert code == 0
    vals = dict(line.split(" ", 1) for line in out.splitlines())
    assert vals["direct"] == vals["kernel"] and int(vals["direct"]) > 0
    assert vals["kernelVector"] == "1 1 -1"


def test_usage_errors(capsys):
    code, _, err = run(capsys, "reps", "--s", "x", "--k", "3", "--N", "10")
    assert code == 1 and "--s" in err and "remedy" in err
    code, _, err = run(capsys, "reps", "--k", "3", "--N", "10")
    assert code == 1 and "--s" in err
    code, _, err = run(capsys, "theta", "--P", "8", "--R", "8", "--c", "1,0,1", "--d", "2,0,2")
    assert code == 1 and "degenerate" in err
    code, _, err = run(capsys, "bogus")
    assert code == 1
    code, _, err = run(capsys, "exponents", "--s", "7")
    assert code == 1 and "remedy" in err


def test_budget_rejection(capsys):
    code, _, err = run(capsys, "moments", "--exponent", "6", "--P", "200", "--budget", "1000")
    assert code == 2 and "predicted" in err


def test_budget_env(capsys, monkeypatch):
    monkeypatch.setenv("WARINGLAB_BUDGET", "1000")
    code, _, err = run(capsys, "theta", "--P", "16", "--R", "16", "--c", "1,0,1", "--d", "0,1,1")
    assert code == 2


def test_outdir_env(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("WARINGLAB_OUTDIR", str(tmp_path))
    code, _, _ = run(capsys, "arcs", "--system", "cubic5", "--P", "100", "--alpha", "1/2,0", "--out", "arcs.csv")
    assert code == 0
    assert (tmp_path / "arcs.csv").read_text().splitlines()[1] == "1/2,true,2,1,false"


def test_series_commands(capsys, tmp_path):
    code, out, _ = run(capsys, "series", "--n", "100", "--s", "7", "--k", "3", "--Q", "300")
    fields = out.split()
    assert code == 0 and fields[0] == "series" and float(fields[1]) == pytest.approx(1.30, abs=0.01)
    out_path = tmp_path / "s.csv"
    code, _, _ = run(capsys, "series", "--range", "1:50", "--s", "7", "--k", "3", "--Q", "300", "--out", str(out_path))
    assert code == 0 and len(out_path.read_text().splitlines()) == 51
    code, _, _ = run(capsys, "series", "--s", "7", "--k", "3")
    assert code == 1


def test_moments_ladder_report(capsys, tmp_path):
    out_path = tmp_path / "m.json"
    code, _, _ = run(capsys, "moments", "--family", "smooth", "--exponent", "6", "--P", "16,24,32,48",
                     "--R-exp", "0.5", "--out", str(out_path))
    assert code == 0
    rep = json.loads(out_path.read_text())
    assert rep["referenceLabel"] == "13/4 - tau"
    assert rep["referenceExponent"] == pytest.approx(3.2494, abs=1e-4)
    assert len(rep["rows"]) == 4


def test_rep_binary_roundtrip(tmp_path):
    t = rep_count_all(RepParams(3, 3, 5000))
    write_rep_binary(t, tmp_path / "r.bin")
    assert read_rep_binary(tmp_path / "r.bin").equals(t)
    write_rep_csv(t, tmp_path / "r.csv")
    assert read_rep_csv(tmp_path / "r.csv", 3, 3).equals(t)


def test_rep_binary_big_counts(tmp_path):
    counts = np.array([0, 5, 2**70, 2**63], dtype=object)
    t = RepTable(RepParams(40, 2, 3), counts)
    write_rep_binary(t, tmp_path / "big.bin")
    assert read_rep_binary(tmp_path / "big.bin").as_ints() == [0, 5, 2**70, 2**63]


def test_bad_magic(tmp_path, capsys):
    p = tmp_path / "junk.bin"
    p.write_bytes(b"nope" + bytes(40))
    code, _, err = run(capsys, "audit", "--s", "5", "--k", "3", "--reps", str(p))
    assert code == 1 and "bad magic" in err


def test_audit_roundtrip_matches_pipeline(capsys, tmp_path):
    reps = tmp_path / "r.bin"
    assert run(capsys, "reps", "--s", "6", "--k", "3", "--N", "4000", "--out", str(reps))[0] == 0
    aud = tmp_path / "a.bin"
    assert run(capsys, "audit", "--s", "6", "--k", "3", "--reps", str(reps), "--Q", "300", "--out", str(aud))[0] == 0
    loaded = read_audit_binary(aud)
    direct = build_audit(RepParams(6, 3, 4000), 300)
    assert np.array_equal(loaded.E, direct.E) and np.array_equal(loaded.tail, direct.tail)
    man = json.loads(Path(str(aud) + ".manifest.json").read_text())
    assert len(man["inputs"]) == 1 and len(man["inputs"][0]) == 64
    write_audit_binary(loaded, tmp_path / "b.bin")
    assert (tmp_path / "b.bin").read_bytes() == aud.read_bytes()


def test_scan_json_schema(capsys, tmp_path):
    out_path = tmp_path / "scan.json"
    code, _, _ = run(capsys, "scan", "--s", "7", "--k", "3", "--N", "20000", "--Q", "300", "--out", str(out_path))
    assert code == 0
    rep = json.loads(out_path.read_text())
    jsonschema.validate(rep, SCHEMA)
    assert rep["theoremExponent"] == "1/3" and rep["psiPower"] == 4
    csv_path = tmp_path / "scan.csv"
    code, _, _ = run(capsys, "scan", "--s", "7", "--k", "3", "--N", "20000", "--Q", "300", "--out", str(csv_path))
    head = csv_path.read_text().splitlines()[0]
    assert head == "blockN,Z,Z_low,Z_high,total,threshold_exponent,fitted_slope,theorem_exponent"


def test_emit_report_determinism(tmp_path):
    header, rows = ["a", "b"], [[1, 0.1 + 0.2], [2, 1e-20], [3, None]]
    emit_report((header, rows), "csv", tmp_path / "x.csv")
    emit_report((header, rows), "csv", tmp_path / "y.csv")
    assert (tmp_path / "x.csv").read_bytes() == (tmp_path / "y.csv").read_bytes()
    assert (tmp_path / "x.csv").read_text() == "a,b\n1,0.3\n2,1e-20\n3,\n"
    emit_report((header, []), "csv", tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_bytes() == b"a,b\n"
    emit_report({"v": 1 / 3, "inf": float("inf")}, "json", tmp_path / "j.json")
    assert json.loads((tmp_path / "j.json").read_text()) == {"v": 0.333333333333, "inf": None}
    assert b"\r" not in (tmp_path / "j.json").read_bytes()


def test_emit_report_io_error(tmp_path):
    with pytest.raises(OSError) as info:
        emit_report((["a"], []), "csv", tmp_path / "missing" / "x.csv")
    assert "missing" in str(info.value)
