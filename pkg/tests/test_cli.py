import csv
import json
import subprocess
import sys

import pytest

from hrverify import __version__
from hrverify.cli import EXIT_FAIL, EXIT_PASS, EXIT_USAGE, main, parse_suite


def test_check_pass_and_fail(capsys):
    assert main(["check", "--id", "ID-H2", "--q", "5"]) == EXIT_PASS
    assert "verdict pass" in capsys.readouterr().out
    assert main(["check", "--id", "ID-H2", "--q", "5", "--tol", "1e-15"]) == EXIT_FAIL


def test_check_usage_errors(capsys):
    assert main(["check", "--id", "ID-nope"]) == EXIT_USAGE
    assert main(["check", "--id", "ID-crit-R", "--q", "6"]) == EXIT_USAGE
    assert main(["check", "--id", "ID-H2", "--profile", "wobble:1"]) == EXIT_USAGE
    assert main(["frobnicate"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE


def test_check_critical_with_radius():
    assert main(["check", "--id", "ID-crit-R", "--q", "6", "--p", "2.5", "--R", "3", "--quiet"]) == EXIT_PASS


def test_check_inequality_entry(tmp_path):
    out = tmp_path / "r.json"
    assert main(["check", "--id", "INEQ-R2", "--q", "9", "--json", str(out), "--quiet"]) == EXIT_PASS
    doc = json.loads(out.read_text())
    assert doc["verdict"] == "pass" and doc["result"]["id"] == "INEQ-R2"


def test_mutated_suite_exits_nonzero(capsys):
    assert main(["suite", "mutated"]) == EXIT_FAIL
    assert "verdict fail" in capsys.readouterr().out


def test_suite_from_file_and_errors(tmp_path):
    good = tmp_path / "s.json"
    good.write_text(json.dumps({"entries": [{"id": "ID-H2", "Q": [5, 7], "alpha": [0.0], "profiles": ["bump:1,2"]}], "seed": 4}))
    out = tmp_path / "o.json"
    assert main(["suite", str(good), "--json", str(out), "--quiet"]) == EXIT_PASS
    doc = json.loads(out.read_text())
    assert doc["result"]["seed"] == 4 and doc["result"]["summary"]["ID-H2"]["evaluations"] == 2
    empty = tmp_path / "e.json"
    empty.write_text(json.dumps({"entries": []}))
    assert main(["suite", str(empty)]) == EXIT_USAGE
    unknown = tmp_path / "u.json"
    unknown.write_text(json.dumps({"entries": [{"id": "ID-zzz"}]}))
    assert main(["suite", str(unknown)]) == EXIT_USAGE
    assert main(["suite", str(tmp_path / "missing.json")]) == EXIT_USAGE


def test_parse_suite_ranges():
    cfg = parse_suite({"entries": [{"id": "ID-R2", "Q": {"min": 5, "max": 9, "num": 3}, "alpha": "grid"}]})
    assert cfg.entries[0].Q == (5.0, 7.0, 9.0)


def test_sharpness_csv(tmp_path):
    out = tmp_path / "t.csv"
    assert main(["sharpness", "--id", "ID-R2", "--q", "9", "--csv", str(out), "--quiet"]) == EXIT_PASS
    rows = list(csv.reader(out.open()))
    assert len(rows) == 5
    assert main(["sharpness", "--id", "ID-H2", "--q", "9", "--eps", "1e-2", "--quiet"]) == EXIT_USAGE
    assert main(["sharpness", "--id", "ID-zz", "--quiet"]) == EXIT_USAGE


def test_constants_lists_critical_product(capsys):
    assert main(["constants", "--q", "6", "--p", "2", "--k", "1"]) == EXIT_PASS
    assert "16.0" in capsys.readouterr().out


def test_euclid_mow_and_oracle_count(capsys):
    assert main(["euclid", "--identity", "mow", "--n", "5", "--ell", "1"]) == EXIT_PASS
    d = json.loads(capsys.readouterr().out)
    assert d["extras"]["status"] == "erratum"
    from hrverify.cli import _count
    assert _count("1e6") == 1_000_000
    assert main(["euclid", "--identity", "mow", "--n", "5", "--oracle-samples", "2.5"]) == EXIT_USAGE


def test_json_is_deterministic_and_stamped(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert main(["check", "--id", "ID-R2", "--q", "7", "--json", str(path), "--quiet"]) == EXIT_PASS
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    assert doc["version"] == __version__ and len(doc["catalogue_hash"]) >= 16 and doc["command"] == "check"


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "hrverify.cli", "check", "--id", "ID-H2", "--quiet"],
                         capture_output=True, text=True)
    assert res.returncode == 0


@pytest.mark.parametrize("argv", [["--version"], ["check", "--help"]])
def test_help_and_version_exit_zero(argv, capsys):
    assert main(argv) == EXIT_PASS
