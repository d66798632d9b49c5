import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artifact import core, games, gadgets
from artifact.core import ConstraintSystem, Distribution, InputError, PreconditionError, SearchBoundExceeded
from artifact.games import GameSpec

from corpus import brute_value
from strategies import systems


def _colouring(edges):
    return ConstraintSystem.build([core.neq(3, e) for e in edges])


def _oracle(G, synchronous):
    return brute_value(G.questions, G.answers, dict(G.distribution), G.predicate, synchronous)


@settings(max_examples=40, deadline=None)
@given(systems(k=2, max_vars=3, max_constraints=2, max_arity=2))
def test_cc_value_matches_enumeration(S):
    G = games.cc_game(S)
    assert games.classical_value(G, synchronous=True) == _oracle(G, True)
    assert games.classical_value(G) == _oracle(G, False)


@settings(max_examples=40, deadline=None)
@given(systems(k=2, max_vars=3, max_constraints=2, max_arity=2))
def test_cv_value_matches_enumeration(S):
    G = games.cv_game(S)
    assert games.classical_value(G) == _oracle(G, False)
    H = games.cv_game(S, symmetrize=True, consistency=Fraction(1, 3))
    assert H.distribution.is_symmetric()
    assert games.classical_value(H, synchronous=True) == _oracle(H, True)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from(list(itertools.combinations("abcd", 2))), min_size=1, max_size=6, unique=True))
def test_twocs_value_matches_enumeration(edges):
    S = _colouring(edges)
    G = games.twocs_game(S)
    assert games.classical_value(G, synchronous=True) == _oracle(G, True)


def test_satisfiable_systems_have_value_one():
    S = ConstraintSystem.build([core.one_in_three(("a", "b", "c")), core.one_in_three(("c", "d", "e"))])
    assert games.classical_value(games.cc_game(S), synchronous=True) == 1
    assert games.classical_value(games.cv_game(S)) == 1


def test_k4_values():
    G = games.twocs_game(_colouring(list(itertools.combinations("abcd", 2))))
    assert games.classical_value(G, synchronous=True) == Fraction(5, 6)
    # two independent functions can satisfy every edge question asked in one direction
    assert games.classical_value(G) == 1 == _oracle(G, False)


def test_prism_value():
    G = games.twocs_game(_colouring(gadgets.PRISM_EDGES))
    assert games.classical_value(G, synchronous=True) == 1


def test_classical_value_bound():
    G = games.twocs_game(_colouring(list(itertools.combinations("abcdef", 2))))
    with pytest.raises(SearchBoundExceeded):
        games.classical_value(G, synchronous=True, search_bound=100)


def test_gamespec_validation():
    with pytest.raises(InputError):
        GameSpec((0,), {0: (0, 1)}, Distribution({(0, 1): 1}), lambda a, b, i, j: True)
    with pytest.raises(InputError):
        GameSpec((0,), {0: (0, 1)}, Distribution({(0, 0): 1}), lambda a, b, i, j: True, synchronous=True)


def test_relabeled_game_keeps_value():
    G = games.twocs_game(_colouring([("a", "b"), ("b", "c"), ("a", "c"), ("c", "d")]))
    H = G.relabeled({q: f"q{n}" for n, q in enumerate(G.questions)})
    assert games.classical_value(H, synchronous=True) == games.classical_value(G, synchronous=True)
    with pytest.raises(InputError):
        G.relabeled({q: "same" for q in G.questions})


def test_twocs_rejections():
    with pytest.raises(PreconditionError):
        games.twocs_game(ConstraintSystem.build([core.one_in_three()]))
    with pytest.raises(PreconditionError):
        games.twocs_game(ConstraintSystem.build([core.neq(3, ("a", "b")), core.eq(3, ("b", "a"))]))


def test_cv_game_consistency_range():
    S = ConstraintSystem.build([core.eq(2)])
    with pytest.raises(InputError):
        games.cv_game(S, symmetrize=True, consistency=2)


def test_diagonal_dominance():
    pi = Distribution({(0, 0): Fraction(1, 2), (0, 1): Fraction(1, 4), (1, 1): Fraction(1, 4)})
    assert games.is_diagonally_dominant(pi, Fraction(1, 2))
    assert games.is_diagonally_dominant(pi, Fraction(3, 5), subset=[0])
    assert not games.is_diagonally_dominant(pi, Fraction(3, 5))
