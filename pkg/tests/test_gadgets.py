import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artifact import core, gadgets, games, schaefer, tvf
from artifact.core import Constraint, ConstraintSystem, Distribution, InputError, PreconditionError

from corpus import brute_pushforward, brute_sat, constraint_from, random_constraint, tvf_orbit_reps


def _pinned(S, pins):
    extra = tuple(Constraint((v,), ((a,),), S.k) for v, a in pins.items())
    return ConstraintSystem(S.k, S.variables, S.constraints + extra)


def _brute_relation(g):
    """Distinguished tuples that extend, found by the independent search."""
    k = g.cs.k
    return {
        t for t in itertools.product(range(k), repeat=len(g.distinguished))
        if brute_sat(_pinned(g.cs, dict(zip(g.distinguished, t))))
    }


def _is_pushforward_of(d, c):
    for img in itertools.product(d.context, repeat=c.arity):
        if set(img) != set(d.context):
            continue
        if brute_pushforward(c, dict(zip(c.context, img)), d.context) == set(d.accepted):
            return True
    return False


def _np_complete_tvf_corpus():
    out = []
    for n in range(3, 6):
        for rows in tvf_orbit_reps(n):
            for mask in itertools.product((0, 1), repeat=n):
                flipped = tuple(sorted(tuple(a ^ m for a, m in zip(t, mask)) for t in rows))
                c = constraint_from(flipped, n)
                if schaefer.classify_boolean([c]).verdict == "NP-complete":
                    out.append(c)
    return list(dict.fromkeys(out))


NP_TVF = _np_complete_tvf_corpus()


class TestBasicGadget:
    def test_certificate(self):
        g = gadgets.basic_gadget()
        cert = gadgets.certify(g)
        assert cert.ok and g.claimed_constant == 512
        assert _brute_relation(g) == set(itertools.product((0, 1), repeat=2))

    @pytest.mark.parametrize("neg", [(), ("z",), ("y", "z"), ("x", "y", "z")])
    def test_negated_bases(self, neg):
        base = core.negate_at(core.one_in_three(), neg)
        g = gadgets.basic_gadget(base)
        assert gadgets.certify(g).ok
        assert _brute_relation(g) == set(itertools.product((0, 1), repeat=2))

    def test_rejects_other_bases(self):
        with pytest.raises(PreconditionError):
            gadgets.basic_gadget(core.eq(2))
        with pytest.raises(InputError):
            gadgets.basic_gadget(negation_pattern=("q",))


def test_general_gadget_all_branches():
    branches = set()
    for c in NP_TVF:
        g = gadgets.general_commutativity_gadget([c])
        branches.add(g.notes["branch"])
        assert g.distinguished == ("x", "y")
        assert _brute_relation(g) == set(itertools.product((0, 1), repeat=2)), c
    assert branches == {"no-00", "negation", "flipped"}


def test_general_gadget_uses_only_the_language():
    rng = random.Random(5)
    for c in rng.sample(NP_TVF, 12):
        g = gadgets.general_commutativity_gadget([c])
        for d in g.cs.constraints:
            assert _is_pushforward_of(d, c)


def test_general_gadget_multi_constraint_language():
    gamma = [core.one_in_three(("a", "b", "c")), Constraint(("p", "q", "r", "s"), ((1, 0, 0, 1), (0, 1, 0, 0), (0, 0, 1, 0)), 2)]
    g = gadgets.general_commutativity_gadget(gamma)
    assert gadgets.certify(g).ok


@pytest.mark.parametrize(
    "gamma, err",
    [
        ([], InputError),
        ([core.neq(3)], PreconditionError),
        ([core.neq(2)], PreconditionError),
        ([Constraint(("a", "b", "c"), ((0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0), (1, 1, 1)), 2)], PreconditionError),
    ],
)
def test_general_gadget_preconditions(gamma, err):
    with pytest.raises(err):
        gadgets.general_commutativity_gadget(gamma)


def test_prism_gadget():
    g = gadgets.prism_gadget()
    assert g.cs.k == 3 and len(g.cs.constraints) == 9
    assert _brute_relation(g) == set(itertools.product(range(3), repeat=2))
    assert gadgets.certify(g).ok


def test_extension_witnesses_are_solutions():
    g = gadgets.basic_gadget()
    for key, rows in gadgets.extension_witnesses(g).items():
        for t in rows:
            phi = dict(zip(g.cs.variables, t))
            assert g.cs.is_satisfied_by(phi)
            assert tuple(phi[v] for v in g.distinguished) == key


NONTVF = Constraint(("a", "b", "c"), ((0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0), (1, 1, 1)), 2)


def test_find_nontvf_witness():
    found = gadgets.find_nontvf_witness([core.one_in_three(), NONTVF])
    assert found == (NONTVF, "a", "b")
    assert gadgets.find_nontvf_witness([core.one_in_three()]) is None


@settings(max_examples=80, deadline=None)
@given(st.randoms(use_true_random=False))
def test_replace_empty_nontvf_preserves_satisfiability(rng):
    vs = [f"v{i}" for i in range(6)]
    cons = [NONTVF.renamed(dict(zip("abc", rng.sample(vs, 3))))]
    cons += [core.full(2, tuple(rng.sample(vs, 2))) for _ in range(rng.randint(1, 3))]
    cons += [random_constraint(rng, rng.sample(vs, rng.randint(1, 3)), 2, 0.4) for _ in range(rng.randint(0, 3))]
    S = ConstraintSystem.build(cons, variables=vs, k=2)
    T = gadgets.replace_empty_nontvf(S)
    assert not any(gadgets._is_empty_pair(c) for c in T.constraints)
    assert T.m == S.m and set(S.variables) <= set(T.variables)
    assert brute_sat(S) == brute_sat(T)


def test_replace_empty_nontvf_inputs():
    S = ConstraintSystem.build([core.one_in_three(("a", "b", "c")), core.full(2, ("a", "d"))])
    with pytest.raises(PreconditionError):
        gadgets.replace_empty_nontvf(S)
    with pytest.raises(InputError):
        gadgets.replace_empty_nontvf(S, NONTVF)
    with pytest.raises(PreconditionError):
        gadgets.replace_empty_nontvf(S, core.one_in_three(), ("x", "y"))
    T = gadgets.replace_empty_nontvf(S, NONTVF, ("a", "b"))
    assert T.constraints[1].context[:2] == ("a", "d")


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False))
def test_replace_empty_3col(rng):
    vs = [f"v{i}" for i in range(5)]
    pairs = rng.sample(list(itertools.combinations(vs, 2)), rng.randint(1, 10))
    cons = [core.full(3, p) if rng.random() < 0.4 else core.neq(3, p) for p in pairs]
    S = ConstraintSystem.build(cons, variables=vs, k=3)
    T, d = gadgets.replace_empty_3col(S)
    assert all(not c.is_full() for c in T.constraints)
    assert sum(d.values()) == 1
    empties = sum(c.is_full() for c in S.constraints)
    assert T.m == S.m + 8 * empties
    assert brute_sat(S) == brute_sat(T)


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False), st.sampled_from((3, 4)))
def test_cv_to_2csp(rng, k):
    vs = [f"v{i}" for i in range(6)]
    cons = [core.one_hot(tuple(rng.sample(vs, k))) for _ in range(rng.randint(1, 4))]
    S = ConstraintSystem.build(cons, variables=vs, k=2)
    T, d = gadgets.cv_to_2csp(S, k)
    assert T.k == k and all(c.arity == 2 for c in T.constraints)
    assert all(len(c.accepted) == 2 * k - 2 for c in T.constraints)
    assert d == Distribution({i: Fraction(1, S.m * k) for i in range(T.m)})
    assert brute_sat(S) == brute_sat(T)


def test_cv_to_2csp_rejects():
    S = ConstraintSystem.build([core.one_in_three(("a", "b", "c")), core.eq(2, ("a", "b"))])
    with pytest.raises(PreconditionError):
        gadgets.cv_to_2csp(S, 3)
    with pytest.raises(PreconditionError):
        gadgets.cv_to_2csp(ConstraintSystem.build([core.neq(3)]))


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False))
def test_cc_expand(rng):
    vs = [f"v{i}" for i in range(5)]
    cons = [random_constraint(rng, rng.sample(vs, rng.randint(1, 3)), 2, 0.5) for _ in range(rng.randint(1, 4))]
    S = ConstraintSystem.build(cons, variables=vs, k=2)
    if gadgets.find_free_variable(S.constraints) is None:
        with pytest.raises(PreconditionError):
            gadgets.cc_expand(S)
        return
    ex = gadgets.cc_expand(S)
    assert ex.cs.m == S.m + len(S.variables)
    assert sum(ex.pi_constraints.values()) == 1 and sum(ex.pi_pairs.values()) == 1
    for x, j in ex.anchor_index.items():
        assert x in ex.cs.constraints[j].context
    assert brute_sat(S) == brute_sat(ex.cs)


def test_pairwise_decomposition_and_subdivide():
    tri = Constraint(("a", "b", "c"), ((0, 1, 0), (1, 0, 1), (0, 1, 1)), 2)
    S = ConstraintSystem.build([core.neq(2, ("a", "b")), core.eq(2, ("b", "c"))])
    dec = gadgets.pairwise_decomposition(S)
    T, d = gadgets.subdivide(S, dec)
    assert T.constraints == S.constraints
    with pytest.raises(PreconditionError):
        gadgets.pairwise_decomposition(ConstraintSystem.build([core.one_in_three()]))
    with pytest.raises(PreconditionError):
        gadgets.subdivide(ConstraintSystem.build([tri]), [[core.restrict(tri, ("a", "b"))]])


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False))
def test_subdivide_distribution(rng):
    vs = [f"v{i}" for i in range(5)]
    cons, dec = [], []
    while len(cons) < 3:
        ctx = rng.sample(vs, 3)
        clauses = [random_constraint(rng, p, 2, 0.75) for p in itertools.combinations(ctx, 2)]
        rows = [t for t in itertools.product((0, 1), repeat=3)
                if all(tuple(t[ctx.index(v)] for v in cl.context) in cl for cl in clauses)]
        if rows:
            cons.append(Constraint(tuple(ctx), tuple(rows), 2))
            dec.append(clauses)
    S = ConstraintSystem.build(cons, variables=vs, k=2)
    T, d = gadgets.subdivide(S, dec)
    owner = [i for i, cl in enumerate(dec) for _ in cl]
    pi = S.pair_distribution()
    for a, b in itertools.product(range(T.m), repeat=2):
        assert d[(a, b)] == pi[(owner[a], owner[b])] / (len(dec[owner[a]]) * len(dec[owner[b]]))
    assert brute_sat(S) == brute_sat(T)


def test_oracularize_distribution_and_value():
    S = ConstraintSystem.build([core.eq(2, ("a", "b")), core.neq(2, ("b", "c"))])
    G = games.cc_game(S)
    O = gadgets.oracularize(G)
    assert sum(O.distribution.values()) == 1
    for (i, j), p in G.distribution.items():
        assert O.distribution[((i, j), (i, j))] >= p / 2
    assert games.classical_value(O, synchronous=True) == 1
    U = ConstraintSystem.build([core.eq(2, ("a", "b")), core.neq(2, ("a", "b"))])
    with pytest.raises(PreconditionError):
        gadgets.oracularize(games.cc_game(U))


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False))
def test_oracularize_cs_satisfiability(rng):
    vs = [f"v{i}" for i in range(4)]
    cons = [random_constraint(rng, rng.sample(vs, rng.randint(1, 3)), 2, 0.5) for _ in range(rng.randint(1, 3))]
    S = ConstraintSystem.build(cons, variables=vs, k=2)
    try:
        T, d = gadgets.oracularize_cs(games.cc_game(S))
    except PreconditionError:
        assert not brute_sat(S)
        return
    assert sum(d.values()) == 1
    assert brute_sat(S) == brute_sat(T)


def test_oracularize_rejects():
    S = ConstraintSystem.build([core.eq(2, ("a", "b"))])
    with pytest.raises(PreconditionError):
        gadgets.oracularize(games.cv_game(S))
    G = games.GameSpec((0, 1, (0, 1)), {0: (0, 1), 1: (0, 1), (0, 1): (0,)}, Distribution({(0, 1): 1}),
                       lambda a, b, i, j: True, True)
    with pytest.raises(InputError):
        gadgets.oracularize(G)


def test_the_bends_restores_language_members():
    gam = [Constraint(("p", "q", "r", "s"), ((1, 0, 0, 1), (0, 1, 0, 0), (0, 0, 1, 0)), 2)]
    c0 = tvf.compress_constraint(gam[0]).constraint
    S = ConstraintSystem.build([c0.renamed(dict(zip(c0.context, ("a", "b", "c")))),
                                c0.renamed(dict(zip(c0.context, ("c", "d", "e"))))])
    T = gadgets.the_bends(S, gam)
    assert all(_is_pushforward_of(c, gam[0]) for c in T.constraints)
    assert brute_sat(S) == brute_sat(T)
    with pytest.raises(PreconditionError):
        gadgets.the_bends(ConstraintSystem.build([core.neq(2)]), gam)


def test_prism_reports_unquantified_composed_constant():
    chain = gadgets.prism_gadget().notes["constant_chain"]
    assert chain["prism"] == 6240 and chain["acomm_to_a_3col"] == 145
    assert chain["composed"] == "unquantified"
