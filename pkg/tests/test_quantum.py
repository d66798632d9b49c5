import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artifact import core, gadgets, games, quantum
from artifact.core import ConstraintSystem, InputError, PreconditionError
from artifact.quantum import PVM, SyncStrategy

from strategies import systems


def _triangle():
    return ConstraintSystem.build([core.neq(3, e) for e in (("a", "b"), ("b", "c"), ("a", "c"))])


class TestPVM:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 7), st.integers(2, 4), st.integers(0, 2**31))
    def test_random_pvm_is_projective(self, d, n, seed):
        p = quantum.random_pvm(range(n), d, np.random.default_rng(seed))
        proj, comp = p.residuals()
        assert proj < 1e-9 and comp < 1e-9
        ranks = sorted(round(float(np.trace(x).real)) for x in p.projectors)
        assert sum(ranks) == d and ranks[-1] - ranks[0] <= 1

    def test_shape_mismatch(self):
        with pytest.raises(InputError):
            PVM((0, 1), np.zeros((3, 2, 2)))

    def test_unitary_has_order_k(self):
        p = quantum.random_pvm(range(3), 5, np.random.default_rng(1))
        u = p.unitary()
        assert np.allclose(np.linalg.matrix_power(u, 3), np.eye(5))

    def test_validate_flags_broken_measurements(self):
        S = _triangle()
        s = quantum.random_strategy("a", S, 3, 0)
        assert quantum.validate(s).ok
        bad = dict(s.variable_pvms)
        bad["a"] = PVM((0, 1, 2), s.variable_pvms["a"].projectors * 0.9)
        diag = quantum.validate(SyncStrategy("a", 3, {}, bad))
        assert not diag.ok and "variable a" in diag.failures

    def test_strategy_dimension_mismatch(self):
        p = quantum.random_pvm(range(2), 2, np.random.default_rng(0))
        with pytest.raises(InputError):
            SyncStrategy("a", 3, {}, {"x": p})
        with pytest.raises(InputError):
            SyncStrategy("z", 2, {}, {"x": p})


def _fraction_satisfied(S, phi, pi=None):
    pi = pi or S.constraint_distribution()
    return sum((pi[i] for i, c in enumerate(S.constraints) if core.eval_constraint(c, phi)), Fraction(0))


@settings(max_examples=40, deadline=None)
@given(systems(k=2, max_vars=4, max_constraints=3), st.data())
def test_classical_embedding_defects(S, data):
    phi = {v: data.draw(st.integers(0, 1)) for v in S.variables}
    s = quantum.embed_classical(S, phi, model="a")
    assert quantum.defect(s, S).total == pytest.approx(float(1 - _fraction_satisfied(S, phi)), abs=1e-12)
    s_cv = quantum.embed_classical(S, phi, model="cv")
    if S.is_satisfied_by(phi):
        assert quantum.defect(s_cv, S).total == pytest.approx(0, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(systems(k=2, max_vars=4, max_constraints=3), st.integers(1, 4), st.integers(0, 1000))
def test_value_plus_defect_is_one(S, d, seed):
    for model, G in (("cc", games.cc_game(S)), ("cv", games.cv_game(S))):
        s = quantum.random_strategy(model, S, d, seed)
        assert quantum.winning_probability(s, G) + quantum.defect(s, S).total == pytest.approx(1, abs=1e-9)


def test_value_plus_defect_on_twocs():
    S = _triangle()
    G = games.twocs_game(S)
    for seed in range(10):
        s = quantum.random_strategy("a", S, 1 + seed % 5, seed)
        assert quantum.winning_probability(s, G) + quantum.defect(s, S).total == pytest.approx(1, abs=1e-9)


def test_defect_model_checks():
    S = _triangle()
    s = quantum.random_strategy("a", S, 2, 0)
    with pytest.raises(InputError):
        quantum.defect(s, S, model="cc")
    with pytest.raises(InputError):
        quantum.defect(s, S, model="nope")
    rep = quantum.defect(s, S, model="a+comm")
    assert rep.total == pytest.approx(rep.terms["a"] + rep.terms["comm"])


def test_seesaw_is_monotone_and_finds_triangle_colouring():
    S = _triangle()
    G = games.twocs_game(S)
    res = quantum.seesaw(quantum.random_strategy("a", S, 3, 7), G, iters=30)
    assert all(b >= a - 1e-9 for a, b in zip(res.history, res.history[1:]))
    assert res.value == pytest.approx(1, abs=1e-9)
    assert quantum.validate(res.strategy).ok


def test_seesaw_respects_classical_bound_in_dimension_one():
    S = ConstraintSystem.build([core.neq(3, e) for e in itertools.combinations("abcd", 2)])
    G = games.twocs_game(S)
    res = quantum.seesaw(quantum.random_strategy("a", S, 1, 3), G, iters=20)
    assert res.value <= float(games.classical_value(G, synchronous=True)) + 1e-9


def test_three_clique_identity():
    rng = np.random.default_rng(0)
    for d in range(1, 7):
        x, y, z = (quantum.random_pvm(range(3), d, rng) for _ in range(3))
        assert quantum.verify_identity_3clique(x, y, z) < 1e-9


@pytest.mark.parametrize("k, c", [(1, 1), (2, 2), (3, 4), (4, 4), (5, 8), (8, 8)])
def test_hermitian_square_constant(k, c):
    assert quantum.hermitian_square_constant(k) == c


def test_inequalities_hold_on_samples():
    rng = np.random.default_rng(9)
    S = _triangle()
    for d in range(1, 5):
        s = quantum.random_strategy("a", S, d, int(rng.integers(1000)))
        for norm in ("per-context", "definition"):
            r = quantum.verify_inequality("acomm_to_a_3col", strategy=s, system=S, normalization=norm)
            assert r.passed and r.constant == (145 if norm == "per-context" else 289)
    with pytest.raises(InputError):
        quantum.verify_inequality("nope")


def test_commutator_sum_vanishes_for_commuting():
    p = quantum.random_pvm(range(2), 4, np.random.default_rng(2))
    assert quantum.commutator_sum(p, p) == pytest.approx(0, abs=1e-12)


# ---- pullbacks ----------------------------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(systems(k=3, max_vars=3, max_constraints=3, max_arity=2), st.integers(1, 3), st.integers(0, 1000))
def test_booleanize_pullback_is_exact(S, d, seed):
    for t in ("booleanize", "booleanize_inverse"):
        setup = quantum.chom_setup(t, S)
        s = quantum.random_strategy("cc", setup.target, d, seed)
        r = quantum.verify_chom(t, S, s, setup=setup)
        assert r.passed and r.exact
        assert abs(r.defect_source - r.defect_target) < 1e-9


@settings(max_examples=25, deadline=None)
@given(systems(k=2, max_vars=4, max_constraints=3), st.integers(1, 3), st.integers(0, 1000))
def test_general_pullbacks(S, d, seed):
    for t in ("cc_to_cv", "cv_to_cc", "acomm_to_cv", "a_to_acomm"):
        try:
            setup = quantum.chom_setup(t, S)
        except PreconditionError:
            continue
        model = "a" if setup.target_model == "a+comm" else setup.target_model
        s = quantum.random_strategy(model, setup.target, d, seed)
        r = quantum.verify_chom(t, S, s, setup=setup)
        assert r.passed, (t, r)
        assert quantum.validate(quantum.pullback(setup, s)).ok


def test_cc_expand_and_one_hot_pullbacks():
    one3 = core.one_in_three
    S = ConstraintSystem.build([one3(("a", "b", "c")), one3(("c", "d", "e"))])
    for t in ("cc_expand", "cc_expand_inverse", "cc_expand_cc", "cv_to_2csp", "2csp_to_cv"):
        setup = quantum.chom_setup(t, S)
        model = "a" if setup.target_model == "a+comm" else setup.target_model
        for seed in range(8):
            s = quantum.random_strategy(model, setup.target, 1 + seed % 3, seed)
            assert quantum.verify_chom(t, S, s, setup=setup).passed


def test_pullback_constants():
    S = ConstraintSystem.build([core.one_in_three(("a", "b", "c")), core.one_in_three(("c", "d", "e"))])
    assert quantum.chom_setup("cc_to_cv", S).constant == 12
    assert quantum.chom_setup("acomm_to_cv", S).constant == 180
    assert quantum.chom_setup("cv_to_2csp", S).exact


def test_pullback_preconditions():
    S = _triangle()
    with pytest.raises(PreconditionError):
        quantum.chom_setup("cv_to_acomm", S)
    with pytest.raises(InputError):
        quantum.chom_setup("the_bends", S)
    with pytest.raises(InputError):
        quantum.chom_setup("unknown", S)
    asym = S.with_distribution(core.Distribution({(0, 1): 1}))
    with pytest.raises(PreconditionError):
        quantum.chom_setup("cc_to_cv", asym)
    B = ConstraintSystem.build([core.one_in_three()])
    with pytest.raises(PreconditionError):
        quantum.chom_setup("replace_empty_nontvf", B)


def test_basic_gadget_commutation_bound():
    g = gadgets.basic_gadget()
    rng = np.random.default_rng(4)
    for d in (2, 3, 4):
        s = quantum.random_strategy("cv", g.cs, d, int(rng.integers(1000)))
        assert quantum.verify_inequality("basic_gadget", strategy=s, system=g.cs).passed
