import json
import os
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import pytest

from artifact import cli

INST = Path(__file__).parent.parent / "instances"


def run(*argv, tmp_path=None):
    out = tmp_path / "report.json" if tmp_path else None
    args = list(map(str, argv)) + ["--format", "json"]
    if out is not None:
        args += ["--out", str(out)]
    code, rep = cli.run(args)
    return code, rep, (json.loads(out.read_text()) if out is not None else None)


def test_classify(tmp_path):
    code, rep, doc = run("classify", INST / "one3.json", tmp_path=tmp_path)
    assert code == cli.EXIT_PASS and rep.outputs["verdict"] == "NP-complete"
    assert doc["report"]["outputs"]["verdict"] == "NP-complete"
    assert doc["report"]["inputs"]["one3.json"]
    code, rep, _ = run("classify", INST / "neq2.json", tmp_path=tmp_path)
    assert rep.outputs["preserving"] == ["MAJ", "MIN"]


@pytest.mark.parametrize("sub", ["graph", "compress", "tableau", "simulate"])
def test_tvf_subcommands(sub, tmp_path):
    code, rep, _ = run("tvf", INST / "one3.json", sub, tmp_path=tmp_path)
    assert code == cli.EXIT_PASS, rep.outputs


def test_tvf_rejects_non_tvf(tmp_path):
    code, rep, _ = run("tvf", INST / "triangle_3col.json", "graph", tmp_path=tmp_path)
    assert code == cli.EXIT_INPUT


@pytest.mark.parametrize("argv", [("basic",), ("prism",), ("general", INST / "one3.json")])
def test_gadgets(argv, tmp_path):
    code, rep, _ = run("gadget", *argv, tmp_path=tmp_path)
    assert code == cli.EXIT_PASS and rep.outputs["certificate"]["ok"]


def test_general_gadget_refuses_tractable_language(tmp_path):
    code, rep, _ = run("gadget", "general", INST / "eq2.json", tmp_path=tmp_path)
    assert code == cli.EXIT_FAIL


TRANSFORM_INPUTS = {
    "booleanize": "triangle_3col.json",
    "subdivide": "triangle_3col.json",
    "oracularize": "one3_chain.json",
    "replace-empty": "prism_3col.json",
    "cv-to-2csp": "one3_chain.json",
    "cc-expand": "one3_chain.json",
}


@pytest.mark.parametrize("p", sorted(TRANSFORM_INPUTS))
def test_transforms(p, tmp_path):
    code, rep, _ = run("transform", INST / TRANSFORM_INPUTS[p], p, tmp_path=tmp_path)
    assert code == cli.EXIT_PASS, rep.outputs


@pytest.mark.parametrize("p, f", [("replace-empty", "one3.json"), ("cv-to-2csp", "triangle_3col.json")])
def test_transform_preconditions(p, f, tmp_path):
    code, rep, _ = run("transform", INST / f, p, tmp_path=tmp_path)
    assert code == cli.EXIT_INPUT and rep.outputs["error"] == "input"


def test_value_modes(tmp_path):
    code, rep, _ = run("value", INST / "k4_3col.json", "--game", "2cs", "--synchronous", tmp_path=tmp_path)
    assert code == cli.EXIT_PASS and rep.outputs["classical_value"] == Fraction(5, 6)
    for mode in ("random", "seesaw"):
        code, rep, _ = run("value", INST / "triangle_3col.json", "--game", "2cs", "--mode", mode, "--iters", 5,
                           tmp_path=tmp_path)
        assert code == cli.EXIT_PASS, rep.outputs


def test_search_bound_exit_code(tmp_path):
    code, rep, _ = run("value", INST / "k4_3col.json", "--game", "2cs", "--synchronous", "--search-bound", 2,
                       tmp_path=tmp_path)
    assert code == cli.EXIT_BOUND and rep.outputs["error"] == "resource"


def test_parse_error_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"k": 2,\n "constraints": [}')
    code, rep, _ = run("classify", bad, tmp_path=tmp_path)
    assert code == cli.EXIT_INPUT and rep.outputs["line"] == 2
    code, rep, _ = run("classify", tmp_path / "missing.json", tmp_path=tmp_path)
    assert code == cli.EXIT_INPUT


@pytest.mark.parametrize("suite", ["identities", "inequalities"])
def test_verify_suites(suite, tmp_path):
    code, rep, _ = run("verify", suite, "--trials", 3, tmp_path=tmp_path)
    assert code == cli.EXIT_PASS, rep.outputs


def test_verify_chom_subset(tmp_path):
    code, rep, _ = run("verify", "chom", "--trials", 3, "--transforms", "booleanize,cc_to_cv", tmp_path=tmp_path)
    assert code == cli.EXIT_PASS, rep.outputs


def test_json_body_is_deterministic(tmp_path):
    argv = ("verify", "inequalities", "--trials", 2, "--seed", 4)
    _, a, _ = run(*argv, tmp_path=tmp_path)
    _, b, _ = run(*argv, tmp_path=tmp_path)
    assert json.dumps(a.body(), sort_keys=True) == json.dumps(b.body(), sort_keys=True)


def test_out_leaves_no_temporary_files(tmp_path):
    run("classify", INST / "one3.json", tmp_path=tmp_path)
    assert sorted(os.listdir(tmp_path)) == ["report.json"]


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "artifact.cli", "classify", str(INST / "one3.json"), "--format", "text"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and proc.stdout.startswith("classify: PASS")
