import json

import pytest
import yaml

from hsecagg.cli import main
from tests.conftest import EXAMPLE_HOLDS

TINY = {"q": 3, "K": 3, "assignment": [[[1], [2, 3]], [[2], [2, 3], [3]], [[1, 2]]], "s2": [0, 1, 0], "T": [0, 1, 0]}


def write(tmp_path, doc, name="c.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(doc))
    return str(p)


def test_rates_example(capsys):
    assert main(["rates", "example"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "R1=1 R2=[1, 1/2] RZ=5/2 keys=5"
    assert "feasible yes" in out


def test_rates_structured(capsys):
    assert main(["rates", "example", "--format", "structured"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["RZ"] == "5/2" and d["keys"] == 5 and d["m"] == 2


def test_too_many_colluders_exit_2(tmp_path, capsys):
    cfg = write(tmp_path, {"K": 6, "assignment": EXAMPLE_HOLDS, "s2": [0, 1], "T": [1, 2]})
    assert main(["rates", cfg]) == 2
    assert "TooManyColluders" in capsys.readouterr().err


def test_build_tiny_field_exit_3(capsys):
    assert main(["build", "example", "--q", "2"]) == 3


def test_build_then_audit_and_tamper(tmp_path, capsys):
    out = tmp_path / "s.scheme"
    assert main(["build", "example", "--out", str(out)]) == 0
    assert capsys.readouterr().out.rstrip().splitlines()[-1].startswith("SUMMARY PASS")
    assert main(["audit", str(out)]) == 0
    assert "PASS dump-digest" in capsys.readouterr().out
    lines = out.read_text().splitlines()
    i = lines.index(next(ln for ln in lines if ln.startswith("matrix B1 "))) + 1
    lines[i] = " ".join(["0"] * len(lines[i].split()))
    out.write_text("\n".join(lines) + "\n")
    assert main(["audit", str(out)]) == 4
    captured = capsys.readouterr()
    assert "FAIL dump-digest" in captured.out and "first failure" in captured.err


def test_audit_garbage_exit_2(tmp_path):
    p = tmp_path / "junk"
    p.write_text("nope\n")
    assert main(["audit", str(p)]) == 2
    assert main(["audit", str(tmp_path / "absent")]) == 2


def test_fixture_exit_codes(capsys):
    assert main(["fixture"]) == 0
    assert capsys.readouterr().out.splitlines()[-1] == "SUMMARY PASS q=101 checks=30 failures=0"
    assert main(["fixture", "--q", "3"]) == 6
    assert "DenominatorVanishes" in capsys.readouterr().out


def test_run_example_and_drops(capsys):
    assert main(["run", "example"]) == 0
    out = capsys.readouterr().out
    assert "decode OK" in out and out.rstrip().endswith("SUMMARY patterns=1 decode OK")
    assert "link user (2,1) symbols=1 R2*L=1" in out
    assert main(["run", "example", "--drop", "2:1"]) == 0
    assert main(["run", "example", "--drop", "2:3,2:4"]) == 2
    assert main(["run", "example", "--drop", "3:1"]) == 2


def test_run_all_dropouts_and_scheme(tmp_path, capsys):
    assert main(["run", "example", "--all-dropouts", "--lprime", "2"]) == 0
    assert "SUMMARY patterns=5 decode OK" in capsys.readouterr().out
    sch = tmp_path / "s.scheme"
    assert main(["build", "example", "--out", str(sch)]) == 0
    capsys.readouterr()
    tr = tmp_path / "tr.json"
    assert main(["run", "--scheme", str(sch), "--format", "structured", "--out", str(tr)]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data[0]["ok"] and json.loads(tr.read_text())[0]["links_on_rate"]


def test_env_override(monkeypatch, capsys):
    monkeypatch.setenv("HSECAGG_Q", "2")
    assert main(["build", "example"]) == 3
    monkeypatch.setenv("HSECAGG_FORMAT", "structured")
    monkeypatch.setenv("HSECAGG_Q", "")
    assert main(["rates", "example"]) == 0
    assert json.loads(capsys.readouterr().out)["keys"] == 5


def test_oracle_agrees_on_tiny(tmp_path, capsys):
    cfg = write(tmp_path, TINY)
    assert main(["build", cfg, "--oracle", "--out", str(tmp_path / "t.scheme")]) == 0
    out = capsys.readouterr().out
    assert "PASS server-mi-oracle" in out and "FAIL" not in out


def test_determinism(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for p in (a, b):
        assert main(["build", "example", "--seed", "5", "--out", str(p)]) == 0
    assert a.read_text() == b.read_text()
    capsys.readouterr()


def test_usage_error():
    with pytest.raises(SystemExit) as e:
        main(["nonsense"])
    assert e.value.code == 2
