import csv
import json

import pytest

from macrotypes import cli


def run(tmp_path, *args):
    return cli.main([*args, "--out", str(tmp_path)])


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_tradeoff_plumbing(tmp_path):
    assert run(tmp_path, "tradeoff", "--N", "100..10000", "--sigma", "0.05,0.3", "--beta", "0.5,0.5",
               "--points", "3") == 0
    r = rows(tmp_path / "tradeoff.csv")
    assert [int(x["N"]) for x in r] == [100, 100, 1000, 1000, 10000, 10000]
    summary = json.loads((tmp_path / "tradeoff.json").read_text())
    assert summary["summary"]["bound_violations"] == 0


def test_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run(out, "tomography", "--N", "200", "--runs", "3", "--mode", "fresh", "--seed", "99",
                   "--need", "0") == 0
    assert (a / "tomography.csv").read_bytes() == (b / "tomography.csv").read_bytes()
    assert (a / "tomography.json").read_bytes() == (b / "tomography.json").read_bytes()


def test_workers_do_not_change_results(tmp_path):
    run(tmp_path / "one", "oracle-check", "--cases", "6", "--seed", "7")
    run(tmp_path / "two", "oracle-check", "--cases", "6", "--seed", "7", "--workers", "2")
    assert (tmp_path / "one/oracle-check.csv").read_bytes() == (tmp_path / "two/oracle-check.csv").read_bytes()


def test_oracle_check(tmp_path):
    assert run(tmp_path, "oracle-check", "--max-qubits", "8", "--seed", "7", "--cases", "10") == 0
    assert all(r["pass"] == "True" for r in rows(tmp_path / "oracle-check.csv"))


def test_histories_family_file(tmp_path):
    fam = tmp_path / "family.cfg"
    fam.write_text(json.dumps({"events": [{"basis": "z"}, {"basis": "x"}]}))
    assert run(tmp_path, "histories", "--family", str(fam), "--xi", "1,2", "--N", "16", "--sigma", "0.1") == 0
    r = rows(tmp_path / "histories.csv")
    assert [int(x["xi"]) for x in r] == [1, 2]


def test_config_defaults_and_override(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"N": 30, "width": 0.05, "fractions": "1,0.5"}))
    assert run(tmp_path, "nmr", "--config", str(cfg), "--N", "20") == 0
    r = rows(tmp_path / "nmr.csv")
    assert len(r) == 2 and r[0]["N"] == "20" and float(r[0]["total_width"]) == 0.05


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "envout"))
    assert cli.main(["commutator", "--N", "2"]) == 0
    assert (tmp_path / "envout" / "commutator.csv").exists()


def test_exit_codes(tmp_path):
    assert run(tmp_path, "types", "--N", "100000", "--d", "6") == cli.EXIT_CAP
    assert run(tmp_path, "tradeoff", "--beta", "0,0") == cli.EXIT_INVALID
    assert run(tmp_path, "conditional", "--N", "100", "--sigma", "0.01") == cli.EXIT_INVALID
    assert run(tmp_path, "histories", "--family", str(tmp_path / "missing.json")) == cli.EXIT_IO
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    assert run(tmp_path, "nmr", "--config", str(bad)) == cli.EXIT_INVALID
    with pytest.raises(SystemExit) as e:
        cli.main(["no-such-command"])
    assert e.value.code == 2


def test_types_and_conditional(tmp_path):
    assert run(tmp_path, "types", "--N", "4", "--R", "0.9,0.1") == 0
    r = rows(tmp_path / "types.csv")
    assert float(r[3]["pmf"]) == pytest.approx(0.2916)
    assert run(tmp_path, "conditional", "--samples", "20") == 0
    s = json.loads((tmp_path / "conditional.json").read_text())["summary"]
    assert s["delta_star"] == pytest.approx(0.11284496819962895)


def test_parse_grid():
    assert cli.parse_grid("1..100", int, 3) == [1, 10, 100]
    assert cli.parse_grid("0.1,0.2") == [0.1, 0.2]
    with pytest.raises(cli.ValidationError):
        cli.parse_grid("0..1")
