import json
import subprocess
import sys

import pytest

from atiyah.cli import main
from atiyah.harness import (
    EXIT_INCONCLUSIVE,
    EXIT_INVALID,
    EXIT_OK,
    RunReport,
    cmd_fuzz,
    parse_int_range,
    parse_number,
)


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr().out
    return code, out


def write(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def test_verify_points(tmp_path, capsys):
    cfg = write(tmp_path, {"points": [{"x1": 0, "x2": 0, "x3": 0}, {"x1": 1, "x2": 0, "x3": 0},
                                      {"x1": 0, "x2": 1, "x3": 0}, {"x1": 0, "x2": 0, "x3": "1/3"}]})
    code, out = run(["verify", "--config", cfg], capsys)
    assert code == EXIT_OK
    rep = json.loads(out)
    assert rep["results"]["verdict"]["status"] == "CertifiedNonzero"
    assert "duration_s" not in rep


def test_verify_duplicate_points_invalid(tmp_path, capsys):
    cfg = write(tmp_path, {"points": [{"x1": 0, "x2": 0, "x3": 0}, {"x1": 0, "x2": 0, "x3": 0}]})
    code, out = run(["verify", "--config", cfg], capsys)
    assert code == EXIT_INVALID
    assert "duplicate" in json.loads(out)["results"]["error"]


@pytest.mark.parametrize("content", ["not json", "[]", '{"other": 1}',
                                     '{"points": [{"x1": 0}]}'])
def test_verify_malformed(tmp_path, capsys, content):
    p = tmp_path / "bad.json"
    p.write_text(content)
    code, _ = run(["verify", "--config", str(p)], capsys)
    assert code == EXIT_INVALID


def test_verify_dihedral_config_with_radius(tmp_path, capsys):
    cfg = write(tmp_path, {"dihedral": {"m": 2, "a": [1, 7], "n": 3, "radius": 4, "offset": 3}})
    code, out = run(["verify", "--config", cfg], capsys)
    assert code == EXIT_OK
    res = json.loads(out)["results"]
    assert res["configuration"]["transform"] == {"offset": 3, "scale": "1/4"}
    assert res["configuration"]["dihedral"]["a"] == ["-1/2", 1]


def test_dihedral_command(capsys):
    code, out = run(["dihedral", "--m", "3", "--a=-1,0.5,2", "--n", "5", "--cross-check"], capsys)
    assert code == EXIT_OK
    res = json.loads(out)["results"]
    assert res["cross_check"]["ok"]
    assert res["closed_form"]["status"] == "CertifiedNonzero"
    assert res["outside_theorem"] is False


def test_dihedral_non_increasing_invalid(capsys):
    code, _ = run(["dihedral", "--m", "2", "--a", "1,0", "--n", "3"], capsys)
    assert code == EXIT_INVALID


def test_dihedral_count_mismatch_invalid(capsys):
    code, _ = run(["dihedral", "--m", "3", "--a", "1,2", "--n", "3"], capsys)
    assert code == EXIT_INVALID


def test_inequality_lambda_zero(capsys):
    code, out = run(["inequality", "--which", "lambda-zero", "--n", "3-12"], capsys)
    assert code == EXIT_OK
    assert json.loads(out)["results"]["summary"]["holds"] == 10


def test_inequality_explicit_lambdas(capsys):
    code, out = run(["inequality", "--which", "spec", "--lambda", "0.5,2", "--n", "4"], capsys)
    assert code == EXIT_OK
    rep = json.loads(out)["results"]["reports"][0]
    assert rep["params"] == {"m": 2, "n": 4, "lambda": [0.5, 2]}


def test_inequality_grid(capsys):
    code, out = run(["inequality", "--which", "spec-eq", "--m", "1-3", "--n", "3",
                     "--grid", "log:0.01:100:10"], capsys)
    assert code == EXIT_OK
    assert json.loads(out)["results"]["summary"]["count"] == 30


def test_inequality_m0_is_inconclusive_equality(capsys):
    # both sides coincide exactly: not a violation, not a strict Holds
    code, out = run(["inequality", "--which", "spec", "--m", "0", "--n", "3",
                     "--grid", "log:1:2:3"], capsys)
    assert code == EXIT_INCONCLUSIVE
    assert json.loads(out)["results"]["summary"]["overlapping"] == 1


def test_inequality_needs_input(capsys):
    code, _ = run(["inequality", "--which", "conj2", "--n", "3"], capsys)
    assert code == EXIT_INVALID


def test_inequality_bad_lambda(capsys):
    code, _ = run(["inequality", "--which", "spec-eq", "--m", "2", "--lambda", "-1"], capsys)
    assert code == EXIT_INVALID


def test_fuzz_general(capsys):
    code, out = run(["fuzz", "--count", "15", "--seed", "3", "--n-max", "6"], capsys)
    assert code == EXIT_OK
    rep = json.loads(out)
    assert rep["results"]["summary"]["status_counts"] == {"CertifiedNonzero": 15}
    assert rep["seed"] == 3


def test_fuzz_dihedral(capsys):
    code, out = run(["fuzz", "--count", "10", "--seed", "1", "--mode", "dihedral",
                     "--n-max", "9"], capsys)
    assert code == EXIT_OK
    assert json.loads(out)["results"]["summary"]["overlap_all"]


def test_usage_error_exits_invalid(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["dihedral", "--n", "3"])
    assert exc.value.code == EXIT_INVALID


def test_fuzz_bad_args(capsys):
    code, _ = run(["fuzz", "--count", "0", "--seed", "1"], capsys)
    assert code == EXIT_INVALID


def test_json_round_trip_and_determinism(capsys):
    argv = ["fuzz", "--count", "8", "--seed", "42", "--n-max", "5"]
    _, first = run(argv, capsys)
    _, second = run(argv, capsys)
    assert first == second
    assert RunReport.loads(first).dumps() == first


def test_timing_flag(capsys):
    _, out = run(["dihedral", "--m", "0", "--n", "3", "--timing"], capsys)
    assert json.loads(out)["duration_s"] >= 0


@pytest.mark.parametrize("fmt", ["csv", "text"])
def test_other_formats(capsys, fmt):
    code, out = run(["dihedral", "--m", "1", "--a", "0", "--n", "3", "--cross-check",
                     "--format", fmt], capsys)
    assert code == EXIT_OK
    assert "CertifiedNonzero" in out
    if fmt == "csv":
        assert out.splitlines()[0].startswith("command,")


def test_output_file(tmp_path, capsys):
    target = tmp_path / "out.json"
    code, out = run(["dihedral", "--m", "0", "--n", "4", "--output", str(target)], capsys)
    assert code == EXIT_OK and out == ""
    assert json.loads(target.read_text())["command"]["name"] == "dihedral"


def test_env_caps_precision(monkeypatch, capsys):
    monkeypatch.setenv("ATIYAH_MAX_BITS", "256")
    _, out = run(["fuzz", "--count", "2", "--seed", "0"], capsys)
    assert json.loads(out)["command"]["max_bits"] == 256


def test_env_below_initial_is_invalid(monkeypatch, capsys):
    monkeypatch.setenv("ATIYAH_MAX_BITS", "64")
    code, _ = run(["fuzz", "--count", "2", "--seed", "0"], capsys)
    assert code == EXIT_INVALID


def test_parsers():
    assert parse_int_range("1-3,5") == [1, 2, 3, 5]
    assert parse_number("3") == 3 and parse_number("1/4").denominator == 4
    assert parse_number(" 2.5 ") == 2.5
    with pytest.raises(ValueError):
        parse_number("nan")


def test_fuzz_workers_match_serial():
    a = cmd_fuzz(6, 9, n_max=5)
    b = cmd_fuzz(6, 9, n_max=5, workers=2)
    assert a.dumps() == b.dumps()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "atiyah", "inequality", "--which",
                           "lambda-zero", "--n", "3", "--format", "text"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "Holds" in proc.stdout
