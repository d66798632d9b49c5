import json
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artifact import core, gadgets, io, quantum
from artifact.core import Const, ConstraintSystem, Distribution, Neg, VarMap
from artifact.io import ParseError

from strategies import systems

INSTANCES = sorted((Path(__file__).parent.parent / "instances").glob("*.json"))


@settings(max_examples=100, deadline=None)
@given(systems(k=3, max_vars=4, max_constraints=3))
def test_system_round_trip(S):
    text = json.dumps(io.system_to_json(S))
    assert io.load_system(text) == S


def test_weighted_system_round_trip():
    S = ConstraintSystem.build(
        [core.eq(2, ("a", "b")), core.neq(2, ("b", "c"))],
        distribution=Distribution({0: Fraction(1, 3), 1: Fraction(2, 3)}),
    )
    assert io.load_system(json.dumps(io.system_to_json(S))) == S
    P = S.with_distribution(Distribution({(0, 1): Fraction(1, 2), (1, 0): Fraction(1, 2)}))
    assert io.load_system(json.dumps(io.system_to_json(P))) == P


@pytest.mark.parametrize("path", INSTANCES, ids=lambda p: p.stem)
def test_instances_load(path):
    S = io.load_system(path.read_text())
    assert S.m > 0


def test_varmap_round_trip():
    r = VarMap({"a": "x", "b": Neg("y"), "c": Const(1)})
    assert io.load_varmap(json.dumps(io.varmap_to_json(r))) == r


@pytest.mark.parametrize("model", ["cc", "cv", "a"])
def test_strategy_round_trip(model):
    S = ConstraintSystem.build([core.neq(3, ("a", "b")), core.neq(3, ("b", "c"))])
    s = quantum.random_strategy(model, S, 3, 5)
    t = io.load_strategy(json.dumps(io.strategy_to_json(s)), S)
    assert t.model == s.model and t.d == s.d
    for i, p in s.context_pvms.items():
        assert np.allclose(t.context_pvms[i].projectors, p.projectors)
    for x, p in s.variable_pvms.items():
        assert np.allclose(t.variable_pvms[x].projectors, p.projectors)


def test_gadget_round_trip():
    g = gadgets.basic_gadget()
    h = io.gadget_from_json(json.loads(json.dumps(io.gadget_to_json(g))))
    assert h.cs == g.cs and h.distinguished == g.distinguished and h.relation == g.relation
    assert h.claimed_constant == g.claimed_constant and h.provenance == g.provenance


def test_syntax_error_position():
    with pytest.raises(ParseError) as e:
        io.load_system('{\n "k": 2,\n "constraints": [}\n')
    assert e.value.line == 3


def test_unknown_field_position():
    text = '{\n "k": 2,\n "constraints": [],\n "colour": 1\n}'
    with pytest.raises(ParseError) as e:
        io.load_system(text)
    assert "colour" in str(e.value) and e.value.line == 4 and e.value.column == 12


def test_bad_tuple_position():
    text = '{"k": 2,\n "constraints": [{"context": ["a"],\n  "accepted": [[2]]}]}'
    with pytest.raises(ParseError) as e:
        io.load_system(text)
    assert e.value.line == 3 and "outside" in str(e.value)


@pytest.mark.parametrize(
    "obj, fragment",
    [
        ({"k": 1, "constraints": []}, "k must be"),
        ({"constraints": []}, "missing field"),
        ({"k": 2, "constraints": [{"context": ["a", "a"], "accepted": [[0, 0]]}]}, "repeats"),
        ({"k": 2, "constraints": [{"context": ["a"], "accepted": []}]}, "empty"),
        ({"k": 2, "variables": ["a"], "constraints": [{"context": ["b"], "accepted": [[0]]}]}, "unknown variable"),
        (
            {
                "k": 2,
                "constraints": [{"context": ["a"], "accepted": [[0]]}],
                "distribution": {"kind": "explicit", "weights": [[0, 1, 2]]},
            },
            "sum to 1",
        ),
        (
            {
                "k": 2,
                "constraints": [{"context": ["a"], "accepted": [[0]]}],
                "distribution": {"kind": "explicit", "weights": [[3, 1, 1]]},
            },
            "not a constraint index",
        ),
    ],
)
def test_validation_messages(obj, fragment):
    with pytest.raises(ParseError) as e:
        io.load_system(json.dumps(obj))
    assert fragment in str(e.value)


def test_strategy_validation():
    S = ConstraintSystem.build([core.neq(2, ("a", "b"))])
    good = io.strategy_to_json(quantum.random_strategy("cv", S, 2, 0))
    bad = dict(good, model="xx")
    with pytest.raises(ParseError):
        io.load_strategy(json.dumps(bad), S)
    bad = dict(good, d=0)
    with pytest.raises(ParseError):
        io.load_strategy(json.dumps(bad), S)
