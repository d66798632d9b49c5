"""Hypothesis strategies for constraints, systems and variable maps."""

from __future__ import annotations

import itertools

from hypothesis import strategies as st

from artifact.core import Const, Constraint, ConstraintSystem, Neg

NAMES = tuple(f"v{i}" for i in range(6))


@st.composite
def constraints(draw, k=None, min_arity=1, max_arity=3, names=NAMES):
    k = draw(st.sampled_from((2, 3))) if k is None else k
    arity = draw(st.integers(min_arity, max_arity))
    ctx = tuple(draw(st.permutations(names))[:arity])
    universe = list(itertools.product(range(k), repeat=arity))
    rows = draw(st.lists(st.sampled_from(universe), min_size=1, max_size=len(universe)))
    return Constraint(ctx, tuple(rows), k)


@st.composite
def systems(draw, k=None, max_vars=5, max_constraints=4, max_arity=3):
    k = draw(st.sampled_from((2, 3))) if k is None else k
    n = draw(st.integers(1, max_vars))
    names = NAMES[:n]
    m = draw(st.integers(1, max_constraints))
    cons = [draw(constraints(k=k, max_arity=min(max_arity, n), names=names)) for _ in range(m)]
    return ConstraintSystem.build(cons, variables=names, k=k)


@st.composite
def varmaps(draw, c: Constraint, targets=("x", "y", "z")):
    """Maps from the context of c into targets, their negations (boolean) and constants."""
    out = {}
    for v in c.context:
        kind = draw(st.sampled_from(("var", "neg", "const") if c.k == 2 else ("var", "const")))
        if kind == "const":
            out[v] = Const(draw(st.integers(0, c.k - 1)))
        elif kind == "neg":
            out[v] = Neg(draw(st.sampled_from(targets)))
        else:
            out[v] = draw(st.sampled_from(targets))
    return out


@st.composite
def boolean_rows(draw, n):
    universe = list(itertools.product((0, 1), repeat=n))
    return tuple(sorted(set(draw(st.lists(st.sampled_from(universe), min_size=1, max_size=len(universe))))))
