"""Smoke tests for the pyvdc extension module."""

import json
import os
import pathlib

import pytest

pyvdc = pytest.importorskip("pyvdc")

CORPUS = pathlib.Path(os.environ.get("VDC_CORPUS_DIR", "corpus"))


def read(name: str) -> str:
    return (CORPUS / name).read_text()


def test_format_round_trips():
    text = read("avg.vdc")
    once = pyvdc.format(text)
    twice = pyvdc.format(once)
    assert once == twice
    assert "policy avg6(t)" in once


def test_parse_errors_raise():
    with pytest.raises(ValueError):
        pyvdc.format("proc broken(")


def test_verify_avg():
    report = json.loads(pyvdc.verify(read("avg.vdc")))
    assert report["result"] == "verified"
    assert len(report["triples"]) == 1
    assert all(vc["status"] == "valid" for vc in report["vcs"])


def test_verify_direct_leak_refuted():
    report = json.loads(pyvdc.verify(read("direct_leak.vdc")))
    assert report["result"] == "refuted"
    kinds = {vc["kind"] for vc in report["vcs"] if vc["status"] == "invalid"}
    assert kinds == {"output-value"}


def test_audit_avg():
    report = json.loads(pyvdc.audit(read("avg.vdc"), "avg6"))
    assert report["result"] == "verified"
    (obligation,) = report["audit"]
    assert obligation["when"]["status"] == "valid"
    assert obligation["release"]["status"] == "valid"


def test_audit_mutant_fails_at_when():
    report = json.loads(pyvdc.audit(read("avg_noguard.vdc"), "avg6"))
    assert report["result"] == "refuted"
    (obligation,) = report["audit"]
    assert obligation["when"]["status"] == "invalid"
    assert "countermodel" in obligation["when"]


def test_inline_audit_round_trip():
    inlined = pyvdc.inline_audit(read("avg.vdc"), "avg6")
    assert "release(" in inlined
    report = json.loads(pyvdc.verify(inlined))
    assert report["result"] == "verified"


def test_run_enumerates_schedules():
    report = json.loads(pyvdc.run(read("public_line.vdc"), max_steps=4))
    assert report["result"] == "done"
    finished = [r for r in report["runs"] if r["config"]["state"] == "stop"]
    assert len(finished) == 1
    assert finished[0]["schedule"] == ["tau", "out(low, 0)"]


def test_oracle_pass_and_violation():
    ok = json.loads(pyvdc.oracle(read("assume_out.vdc"), lo=0, hi=3, max_steps=6))
    assert ok["result"] == "pass"
    bad = json.loads(pyvdc.oracle(read("direct_leak.vdc"), lo=0, hi=3, max_steps=4))
    assert bad["result"] == "violation"
    assert bad["oracle"][0]["violations"]
