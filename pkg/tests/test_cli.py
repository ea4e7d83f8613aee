import json
import subprocess
import sys
from pathlib import Path

import pytest

from mvdyn.cli import main

GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_analyze_text_and_json(capsys):
    code, out, _ = run(capsys, "analyze", "P3")
    assert code == 0 and "NotSimple" in out
    code, out, _ = run(capsys, "analyze", "FS2", "--format", "json")
    assert code == 0
    d = json.loads(out)
    assert d["verdict"]["simplicity"] == "Simple"
    assert d["verdict"]["onDetection"] == "IsomorphicToOn"


def test_json_output_is_byte_identical(capsys):
    first = run(capsys, "check", "SW2", "--format", "json", "--seed", "7")[1]
    second = run(capsys, "check", "SW2", "--format", "json", "--seed", "7")[1]
    assert first == second


def test_golden_check(capsys):
    code, out, err = run(capsys, "check", "P3", "--format", "json",
                         "--golden", str(GOLDEN / "check_P3.json"))
    assert code == 0 and "[pass] golden-file" in err
    assert out == (GOLDEN / "check_P3.json").read_text()


def test_golden_analyze(capsys):
    code, out, _ = run(capsys, "analyze", "FS2", "--format", "json")
    assert code == 0 and out == (GOLDEN / "analyze_FS2.json").read_text()


def test_corrupted_golden_fails_with_diff(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text((GOLDEN / "check_P3.json").read_text().replace('"pass": true', '"pass": false', 1))
    code, _, err = run(capsys, "check", "P3", "--format", "json", "--golden", str(bad))
    assert code == 1
    assert "[FAIL] golden-file" in err and "+++ actual" in err


@pytest.mark.parametrize("argv", [
    ["analyze", "NOPE"],
    ["analyze", "/no/such/file.json"],
    ["frobnicate"],
    ["check"],
    ["fock", "FS2", "--fock-depth", "30", "--max-dim", "100"],
    ["enumerate", "--max-points", "5"],
    ["analyze", "P3", "--depth", "-1"],
])
def test_bad_input_exits_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_invalid_system_file_reports_location(capsys, tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps({"points": ["a", "b"], "maps": [[0, 2]]}))
    code, _, err = run(capsys, "analyze", str(p))
    assert code == 2 and "(0, 1)" in err


def test_max_points_guard(capsys):
    assert run(capsys, "analyze", "P3", "--max-points", "2")[0] == 2


def test_export_dot(capsys, tmp_path):
    code, out, _ = run(capsys, "export-dot", "P3")
    assert code == 0 and out.count("->") == 6
    target = tmp_path / "g.dot"
    assert run(capsys, "export-dot", "ONE2", "-o", str(target))[0] == 0
    assert target.read_text().count("->") == 2


def test_enumerate_counts(capsys):
    code, out, _ = run(capsys, "enumerate", "--format", "json")
    d = json.loads(out)
    assert code == 0 and d["systems"] == 746
    assert sum(d["verdicts"].values()) == 746
    assert d["onImpliesSimpleCounterexamples"] == []


def test_check_enumerate(capsys):
    code, out, _ = run(capsys, "check", "--enumerate", "--max-points", "2")
    assert code == 0 and "[pass] enumeration-equivalence: 17 systems" in out


def test_algebra_and_fock(capsys):
    code, out, _ = run(capsys, "algebra", "FS2", "--format", "json")
    d = json.loads(out)
    assert code == 0 and d["VstarV_is_one"] and d["range_projection_formula_w1"]
    code, out, _ = run(capsys, "algebra", "NS")
    assert code == 0 and "surjective" in out
    code, out, _ = run(capsys, "fock", "NS", "--fock-depth", "2", "--format", "json", "--dump")
    d = json.loads(out)
    assert code == 0 and d["dim"] == 7 and d["maximal"] == {"0": False, "1": True}
    assert "dump" in d


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "mvdyn", "analyze", "ONE1"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "TheoremInapplicableN1" in res.stdout
