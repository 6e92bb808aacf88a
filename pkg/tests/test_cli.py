"""Exit codes, report sections, byte stability."""
import os
import subprocess
import sys

from conftest import corpus_path

PKG_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def run_cli(*args):
    return subprocess.run([sys.executable, "-m", "coinpattern.cli", *args],
                          capture_output=True, text=True, cwd=PKG_ROOT)


def test_parse_instances_specs():
    from coinpattern.cli import parse_instances
    assert parse_instances("N=3") == [{"N": 3}]
    assert parse_instances("N=1..3") == [{"N": 1}, {"N": 2}, {"N": 3}]
    assert parse_instances("N=1..2,M=5") == [{"N": 1, "M": 5},
                                             {"N": 2, "M": 5}]
    import pytest as _pytest
    with _pytest.raises(ValueError):
        parse_instances("N=1..2,M=3..4")
    with _pytest.raises(ValueError):
        parse_instances("N")


def test_check_finite_rejects_instance_ranges():
    r = run_cli("check", corpus_path("fw.ppg"), "--instances", "k=1..2")
    assert r.returncode == 3


def test_check_fw_proven():
    r = run_cli("check", corpus_path("fw.ppg"), "--oracle")
    assert r.returncode == 0
    assert "status: proven" in r.stdout
    assert "simple:01" in r.stdout
    assert 'round 1: candidate="" verdict=lasso loop="0"' in r.stdout
    assert 'round 2: candidate="1" verdict=lasso loop="1"' in r.stdout
    assert 'round 3: candidate="01" verdict=terminating' in r.stdout
    assert "agreement=yes" in r.stdout


def test_check_diverge_refuted():
    r = run_cli("check", corpus_path("diverge.ppg"))
    assert r.returncode == 1
    assert "status: refuted" in r.stdout
    assert "WITNESS" in r.stdout and "COINWORD: " in r.stdout


def test_check_firewire_template():
    r = run_cli("check", corpus_path("firewire.ppg"), "--instances", "N=1..4")
    assert r.returncode == 0
    assert "template:a=010;b=;c=;d=0" in r.stdout
    assert "sequence: tail=repeat verdict=terminating" in r.stdout


def test_check_randomwalk_with_oracle():
    r = run_cli("check", corpus_path("randomwalk.ppg"),
                "--instances", "N=1..5", "--oracle", "--jobs", "2")
    assert r.returncode == 0
    assert "template:a=;b=0;c=;d=0" in r.stdout
    assert r.stdout.count("agreement=yes") == 5


def test_check_budget_inconclusive():
    r = run_cli("check", corpus_path("fw.ppg"), "--rounds", "1")
    assert r.returncode == 2
    assert "status: inconclusive" in r.stdout


def test_check_missing_instances_usage_error():
    r = run_cli("check", corpus_path("rw.ppg"))
    assert r.returncode == 3
    assert "instances" in r.stderr


def test_check_parse_error_exit_3():
    bad = corpus_path("..") + "/pyproject.toml"
    r = run_cli("check", bad)
    assert r.returncode == 3
    assert "error" in r.stderr


def test_check_nondet_echo():
    r = run_cli("check", corpus_path("nondet_echo.ppg"), "--oracle")
    assert r.returncode == 0
    assert "mode: nondeterministic" in r.stdout
    assert "a0 1" in r.stdout and "a1 0" in r.stdout
    assert "agreement=yes" in r.stdout


def test_reports_are_byte_stable():
    for args in (("check", corpus_path("herman.ppg"), "--instances", "N=1..3"),
                 ("check", corpus_path("fw.ppg"), "--oracle"),
                 ("check", corpus_path("zeroconf.ppg"), "--instances",
                  "N=1..3", "--oracle", "--jobs", "3"),
                 ("simulate", corpus_path("rw.ppg"), "--instances", "N=3",
                  "--samples", "2000", "--seed", "9")):
        a = run_cli(*args)
        b = run_cli(*args)
        assert a.stdout == b.stdout and a.returncode == b.returncode


def test_simulate_report_fields():
    r = run_cli("simulate", corpus_path("brp.ppg"), "--instances", "N=2",
                "--samples", "4000", "--cap", "100000", "--seed", "5")
    assert r.returncode == 0
    fields = dict(line.split(": ", 1) for line in r.stdout.splitlines()
                  if ": " in line)
    assert fields["samples"] == "4000"
    assert int(fields["terminated"]) + int(fields["capped"]) == 4000
    assert float(fields["terminated_fraction"]) >= 0.999


def test_simulate_diverging_program():
    r = run_cli("simulate", corpus_path("diverge.ppg"),
                "--samples", "500", "--cap", "100000", "--seed", "1")
    assert r.returncode == 0
    assert "terminated_fraction: 0.000000" in r.stdout


def test_instrument_writes_document(tmp_path):
    out = tmp_path / "doc.txt"
    r = run_cli("instrument", corpus_path("randomwalk.ppg"),
                "--pattern", "template:a=;b=0;c=;d=0", "--out", str(out))
    assert r.returncode == 0
    text = out.read_text()
    assert text.startswith("# transition system for randomwalk")
    assert "hint: invariant next <= N" in text


def test_instrument_bad_pattern_exit_3(tmp_path):
    out = tmp_path / "doc.txt"
    r = run_cli("instrument", corpus_path("randomwalk.ppg"),
                "--pattern", "simple:01", "--out", str(out))
    assert r.returncode == 3
    r = run_cli("instrument", corpus_path("randomwalk.ppg"),
                "--pattern", "universal:lenlex", "--out", str(out))
    assert r.returncode == 3


def test_exit_codes_partition_check_outcomes():
    outcomes = {
        0: ("check", corpus_path("brp.ppg"), "--instances", "N=1..3"),
        1: ("check", corpus_path("diverge.ppg")),
        2: ("check", corpus_path("fw.ppg"), "--rounds", "1"),
        3: ("check", corpus_path("rw.ppg")),
    }
    for code, args in outcomes.items():
        assert run_cli(*args).returncode == code, args
