from __future__ import annotations

import json
import shutil

import pytest
import yaml

from authflaw.bench import synthetic_program
from authflaw.cli import main

from oracles import CORPUS


def analyze(*args):
    return main(["analyze", *map(str, args)])


def test_exit_codes(capsys):
    assert analyze(CORPUS / "p1_vulnerable.osl", "--properties", "P1") == 1
    assert analyze(CORPUS / "p1_fixed.osl", "--properties", "P1") == 0
    assert analyze(CORPUS / "missing.osl") == 2
    assert "error" in capsys.readouterr().err


def test_json_report_shape(capsys):
    assert analyze(CORPUS / "p1_vulnerable.osl", "--properties", "P1,P3") == 1
    rep = json.loads(capsys.readouterr().out)
    assert [r["property"] for r in rep["results"]] == ["P1", "P3"]
    assert rep["results"][0]["outcome"] == "violation"
    assert rep["results"][0]["witness"] == []
    assert "generated" in rep and rep["mode"] == "demand"
    assert analyze(CORPUS / "p1_fixed.osl", "--properties", "P1") == 0
    fixed = json.loads(capsys.readouterr().out)["results"][0]
    assert fixed["witness"] and set(fixed["embedding"]) >= {"L1"}


def test_report_is_byte_deterministic(tmp_path, capsys):
    outs = []
    for i in range(2):
        path = tmp_path / f"r{i}.json"
        analyze(CORPUS / "p2_vulnerable.osl", "--no-timestamps", "--report", path)
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    text = outs[0].decode()
    assert "generated" not in text and "_seconds" not in text
    assert "deltaLog" in text


def test_text_report_mentions_delta_test(capsys):
    assert analyze(CORPUS / "p2_vulnerable.osl", "--properties", "P2", "--format", "text") == 1
    out = capsys.readouterr().out
    assert "delta test" in out and "'a:'" in out


def test_eager_mode_without_query(capsys):
    assert analyze(CORPUS / "p3_fixed.osl", "--mode", "eager", "--properties", "P3") == 0


@pytest.mark.parametrize(
    "argv",
    [
        ["analyze"],
        ["analyze", "x.osl", "--mode", "lazy"],
        ["analyze", "x.osl", "--timeout", "-1"],
        ["analyze", "x.osl", "--frobnicate"],
        ["nonsense"],
    ],
)
def test_bad_flags_exit_2(argv, capsys):
    assert main(argv) == 2


def test_bad_inputs_exit_2(tmp_path, capsys):
    prog = CORPUS / "p1_fixed.osl"
    assert analyze(prog, "--properties", "P99") == 2
    bad_cfg = tmp_path / "tags.yaml"
    bad_cfg.write_text("markers:\n  AuthRequest: not_a_tag\n")
    assert analyze(prog, "--config", bad_cfg) == 2
    broken = tmp_path / "broken.osl"
    broken.write_text("fn f( {")
    assert analyze(broken) == 2
    assert analyze(prog, "--endpoint-query", "-> ->") == 2


def test_version(capsys):
    assert main(["--version"]) == 0
    assert "authflaw" in capsys.readouterr().out


def test_corpus_command(capsys):
    assert main(["corpus", str(CORPUS)]) == 0
    assert "0 mismatch" in capsys.readouterr().out


def test_corrupted_manifest_is_a_mismatch(tmp_path, capsys):
    d = tmp_path / "c"
    d.mkdir()
    shutil.copy(CORPUS / "p1_vulnerable.osl", d)
    data = yaml.safe_load((CORPUS / "manifest.yaml").read_text())
    entry = dict(data["files"]["p1_vulnerable.osl"])
    entry["P1"] = "satisfied"
    (d / "manifest.yaml").write_text(yaml.safe_dump({"files": {"p1_vulnerable.osl": entry}}))
    assert main(["corpus", str(d)]) == 1


def test_malformed_manifest_exit_2(tmp_path, capsys):
    d = tmp_path / "c"
    d.mkdir()
    shutil.copy(CORPUS / "p1_vulnerable.osl", d)
    (d / "manifest.yaml").write_text("files:\n  p1_vulnerable.osl:\n    P1: maybe\n")
    assert main(["corpus", str(d)]) == 2


def test_empty_corpus_directory(tmp_path, capsys):
    assert main(["corpus", str(tmp_path)]) == 0


def test_bench_command(tmp_path, capsys):
    path = tmp_path / "b.osl"
    path.write_text(synthetic_program(helpers=10))
    assert main(["bench", str(path), "--properties", "P1,P2"]) == 0
    out = capsys.readouterr().out
    assert "P1" in out and "MISMATCH" not in out
