"""Nonlocal games generated from constraint systems, and exact classical values."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

from .core import (
    ConstraintSystem,
    Distribution,
    InputError,
    PreconditionError,
    check_search_bound,
)

__all__ = [
    "Distribution",
    "GameSpec",
    "cc_game",
    "cv_game",
    "twocs_game",
    "classical_value",
    "is_diagonally_dominant",
]

Predicate = Callable[[Any, Any, Hashable, Hashable], bool]


@dataclass(frozen=True)
class GameSpec:
    """Questions, answer sets, a distribution on question pairs and a 0/1 predicate."""

    questions: tuple[Hashable, ...]
    answers: Mapping[Hashable, tuple[Any, ...]]
    distribution: Distribution
    predicate: Predicate = field(compare=False)
    synchronous: bool = False
    measurement_of: Mapping[Hashable, tuple[str, Any]] = field(default_factory=dict, compare=False)
    name: str = ""

    def __post_init__(self) -> None:
        qs = set(self.questions)
        for key in self.distribution:
            if not (isinstance(key, tuple) and len(key) == 2 and key[0] in qs and key[1] in qs):
                raise InputError(f"distribution key {key!r} is not a pair of questions")
        if self.synchronous:
            for q in self.questions:
                if (q, q) not in self.distribution:
                    continue
                ans = self.answers[q]
                for a, b in itertools.permutations(ans, 2):
                    if self.predicate(a, b, q, q):
                        raise InputError(f"synchronous game accepts unequal answers on ({q!r}, {q!r})")

    def win(self, a: Any, b: Any, q1: Hashable, q2: Hashable) -> bool:
        return bool(self.predicate(a, b, q1, q2))

    def first_questions(self) -> list[Hashable]:
        return [q for q in self.questions if any(key[0] == q for key in self.distribution)]

    def second_questions(self) -> list[Hashable]:
        return [q for q in self.questions if any(key[1] == q for key in self.distribution)]

    def relabeled(self, mapping: Mapping[Hashable, Hashable]) -> "GameSpec":
        """Same game with questions renamed through a bijection."""
        inv = {v: k for k, v in mapping.items()}
        if len(inv) != len(mapping):
            raise InputError("relabelling must be a bijection")
        pred = self.predicate
        return GameSpec(
            tuple(mapping[q] for q in self.questions),
            {mapping[q]: a for q, a in self.answers.items()},
            Distribution({(mapping[i], mapping[j]): w for (i, j), w in self.distribution.items()}),
            lambda a, b, i, j: pred(a, b, inv[i], inv[j]),
            self.synchronous,
            {mapping[q]: m for q, m in self.measurement_of.items()},
            self.name,
        )


def _overlap_agree(S: ConstraintSystem) -> Predicate:
    pos = [{v: p for p, v in enumerate(c.context)} for c in S.constraints]
    shared = {}
    for i, j in itertools.product(range(S.m), repeat=2):
        common = [v for v in S.constraints[i].context if v in pos[j]]
        shared[(i, j)] = [(pos[i][v], pos[j][v]) for v in common]

    def pred(a, b, i, j):
        return all(a[p] == b[q] for p, q in shared[(i, j)])

    return pred


def cc_game(S: ConstraintSystem, pi: Distribution | None = None) -> GameSpec:
    """Both players get constraint indices and must agree on shared variables."""
    pi = pi if pi is not None else S.pair_distribution()
    qs = tuple(range(S.m))
    return GameSpec(
        qs,
        {i: S.constraints[i].accepted for i in qs},
        pi,
        _overlap_agree(S),
        True,
        {i: ("context", i) for i in qs},
        "cc",
    )


def cv_game(
    S: ConstraintSystem,
    pi_prime: Distribution | None = None,
    symmetrize: bool = False,
    consistency: Fraction | int = 0,
) -> GameSpec:
    """Constraint player answers phi in C_i, variable player answers a, win iff a = phi(x).

    With symmetrize, each role order gets half the mass after reserving `consistency` for
    equal-question pairs (weighted by the question marginal), where equal answers win.
    """
    pi_prime = pi_prime if pi_prime is not None else S.constraint_distribution()
    nu: dict[tuple, Fraction] = {}
    for i, c in enumerate(S.constraints):
        for x in c.context:
            key = (("c", i), ("v", x))
            nu[key] = nu.get(key, Fraction(0)) + pi_prime[i] / c.arity
    qs = tuple([("c", i) for i in range(S.m)] + [("v", x) for x in S.variables])
    answers: dict[Hashable, tuple] = {("c", i): S.constraints[i].accepted for i in range(S.m)}
    answers.update({("v", x): tuple(range(S.k)) for x in S.variables})
    meas: dict[Hashable, tuple[str, Any]] = {("c", i): ("context", i) for i in range(S.m)}
    meas.update({("v", x): ("variable", x) for x in S.variables})
    pos = [{v: p for p, v in enumerate(c.context)} for c in S.constraints]

    def pred(a, b, q1, q2):
        if q1 == q2:
            return a == b
        if q1[0] == "v" and q2[0] == "c":
            a, b, q1, q2 = b, a, q2, q1
        if q1[0] == "c" and q2[0] == "v":
            p = pos[q1[1]].get(q2[1])
            return p is not None and a[p] == b
        return False

    if not symmetrize:
        return GameSpec(qs, answers, Distribution(nu), pred, False, meas, "cv")
    cons = Fraction(consistency)
    if not 0 <= cons <= 1:
        raise InputError("consistency mass must lie in [0, 1]")
    w: dict[tuple, Fraction] = {}
    marg: dict[Hashable, Fraction] = {}
    for (q1, q2), v in nu.items():
        w[(q1, q2)] = w.get((q1, q2), Fraction(0)) + (1 - cons) * v / 2
        w[(q2, q1)] = w.get((q2, q1), Fraction(0)) + (1 - cons) * v / 2
        marg[q1] = marg.get(q1, Fraction(0)) + v / 2
        marg[q2] = marg.get(q2, Fraction(0)) + v / 2
    for q, v in marg.items():
        w[(q, q)] = w.get((q, q), Fraction(0)) + cons * v
    return GameSpec(qs, answers, Distribution(w), pred, True, meas, "cv-sym")


def twocs_game(S: ConstraintSystem, pi_prime: Distribution | None = None) -> GameSpec:
    """Players get the two variables of a random constraint and must answer an accepted pair."""
    pi_prime = pi_prime if pi_prime is not None else S.constraint_distribution()
    table: dict[tuple[str, str], frozenset] = {}
    nu: dict[tuple, Fraction] = {}
    for i, c in enumerate(S.constraints):
        if c.arity != 2:
            raise PreconditionError(f"constraint {i} has arity {c.arity}, not 2")
        x, y = c.context
        if (x, y) in table:
            raise PreconditionError(f"two constraints on the pair {x}, {y}")
        table[(x, y)] = c.accepted_set
        table[(y, x)] = frozenset((b, a) for a, b in c.accepted)
        if pi_prime[i]:
            nu[(x, y)] = pi_prime[i] / 2
            nu[(y, x)] = pi_prime[i] / 2

    def pred(a, b, x, y):
        if x == y:
            return a == b
        acc = table.get((x, y))
        return acc is not None and (a, b) in acc

    qs = tuple(S.variables)
    return GameSpec(
        qs,
        {x: tuple(range(S.k)) for x in qs},
        Distribution(nu),
        pred,
        True,
        {x: ("variable", x) for x in qs},
        "2cs",
    )


def _integer_tables(G: GameSpec) -> tuple[int, dict[tuple, np.ndarray]]:
    """Payoff matrices scaled to integers by the common denominator of the weights."""
    den = 1
    for w in G.distribution.values():
        den = den * w.denominator // math.gcd(den, w.denominator)
    tables = {}
    for (q1, q2), w in G.distribution.items():
        a1, a2 = G.answers[q1], G.answers[q2]
        t = np.zeros((len(a1), len(a2)), dtype=np.int64)
        scale = int(w * den)
        for x, a in enumerate(a1):
            for y, b in enumerate(a2):
                if G.predicate(a, b, q1, q2):
                    t[x, y] = scale
        tables[(q1, q2)] = t
    return den, tables


def classical_value(
    G: GameSpec, synchronous: bool = False, search_bound: int | None = None
) -> Fraction:
    """Exact optimum over deterministic strategies (pairs, or a single shared function)."""
    den, tables = _integer_tables(G)
    if synchronous:
        return Fraction(_synchronous_optimum(G, tables, search_bound), den)
    first = G.first_questions()
    second = G.second_questions()
    size_a = math.prod(len(G.answers[q]) for q in first)
    size_b = math.prod(len(G.answers[q]) for q in second)
    if size_b < size_a:
        tables = {(q2, q1): t.T for (q1, q2), t in tables.items()}
        first, second = second, first
    check_search_bound(min(size_a, size_b), search_bound)
    col = {q: n for n, q in enumerate(second)}
    width = max(len(G.answers[q]) for q in second)
    # padding keeps absent answers from ever being the best response
    base = np.zeros((len(second), width), dtype=np.int64)
    for q, n in col.items():
        base[n, len(G.answers[q]):] = -(1 << 60)
    contrib = {}
    for q1 in first:
        mats = []
        for a in range(len(G.answers[q1])):
            d = np.zeros_like(base)
            for (p1, q2), t in tables.items():
                if p1 == q1:
                    d[col[q2], : t.shape[1]] += t[a]
            mats.append(d)
        contrib[q1] = mats
    best = 0

    def rec(n: int, scores: np.ndarray) -> None:
        nonlocal best
        if n == len(first):
            best = max(best, int(scores.max(axis=1).sum()))
            return
        for d in contrib[first[n]]:
            rec(n + 1, scores + d)

    rec(0, base)
    return Fraction(best, den)


def _synchronous_optimum(
    G: GameSpec, tables: dict[tuple, np.ndarray], search_bound: int | None
) -> int:
    qs = sorted({q for key in tables for q in key}, key=G.questions.index)
    check_search_bound(math.prod(len(G.answers[q]) for q in qs), search_bound)
    idx = {q: n for n, q in enumerate(qs)}
    closing: list[list[tuple[int, int, np.ndarray]]] = [[] for _ in qs]
    tail = [0] * (len(qs) + 1)
    for (q1, q2), t in tables.items():
        i, j = idx[q1], idx[q2]
        closing[max(i, j)].append((i, j, t))
    for n in range(len(qs) - 1, -1, -1):
        tail[n] = tail[n + 1] + sum(int(t.max()) for _, _, t in closing[n])
    f = [0] * len(qs)
    best = -1

    def rec(n: int, acc: int) -> None:
        nonlocal best
        if acc + tail[n] <= best:
            return
        if n == len(qs):
            best = acc
            return
        for a in range(len(G.answers[qs[n]])):
            f[n] = a
            gain = sum(int(t[f[i], f[j]]) for i, j, t in closing[n])
            rec(n + 1, acc + gain)

    rec(0, 0)
    return max(best, 0)


def is_diagonally_dominant(
    pi: Distribution, C: Fraction | int | float, subset: Iterable[Hashable] | None = None
) -> bool:
    """pi(a,a) >= C * sum_b pi(a,b) and pi(a,a) >= C * sum_b pi(b,a) for each question a."""
    rows: dict[Hashable, Fraction] = {}
    cols: dict[Hashable, Fraction] = {}
    for (a, b), w in pi.items():
        rows[a] = rows.get(a, Fraction(0)) + w
        cols[b] = cols.get(b, Fraction(0)) + w
    qs = list(subset) if subset is not None else sorted(set(rows) | set(cols), key=repr)
    C = Fraction(C) if not isinstance(C, float) else C
    for a in qs:
        d = pi[(a, a)]
        if d < C * rows.get(a, 0) or d < C * cols.get(a, 0):
            return False
    return True
