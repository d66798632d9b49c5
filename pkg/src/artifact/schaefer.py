"""Polymorphisms and the boolean dichotomy classifier."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .core import Assignment, Constraint, InputError, PreconditionError


@dataclass(frozen=True)
class Polymorphism:
    """A function Z_k^arity -> Z_k given by its table in lexicographic argument order."""

    arity: int
    k: int
    table: tuple[int, ...]
    name: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if self.arity < 0:
            raise InputError("arity must be non-negative")
        if len(self.table) != self.k**self.arity:
            raise InputError(f"table has {len(self.table)} entries, expected {self.k ** self.arity}")
        if any(not 0 <= a < self.k for a in self.table):
            raise InputError("table entries must lie in Z_k")

    @classmethod
    def from_function(cls, arity: int, k: int, fn: Callable[..., int], name: str = "") -> "Polymorphism":
        table = tuple(fn(*args) for args in itertools.product(range(k), repeat=arity))
        return cls(arity, k, table, name)

    def index(self, args: Sequence[int]) -> int:
        n = 0
        for a in args:
            n = n * self.k + a
        return n

    def __call__(self, *args: int) -> int:
        if len(args) != self.arity:
            raise InputError(f"expected {self.arity} arguments, got {len(args)}")
        return self.table[self.index(args)]


ZERO = Polymorphism(0, 2, (0,), "0")
ONE = Polymorphism(0, 2, (1,), "1")
AND = Polymorphism.from_function(2, 2, lambda a, b: a & b, "AND")
OR = Polymorphism.from_function(2, 2, lambda a, b: a | b, "OR")
MAJ = Polymorphism.from_function(3, 2, lambda a, b, c: (a & b) | (b & c) | (c & a), "MAJ")
MIN = Polymorphism.from_function(3, 2, lambda a, b, c: a ^ b ^ c, "MIN")
SCHAEFER_POLYMORPHISMS = (ZERO, ONE, AND, OR, MAJ, MIN)


def apply(f: Polymorphism, rows: Sequence[Assignment], length: int | None = None) -> Assignment:
    """Componentwise application; length is needed only for arity 0."""
    if len(rows) != f.arity:
        raise InputError(f"expected {f.arity} rows, got {len(rows)}")
    if f.arity == 0:
        if length is None:
            raise InputError("arity-0 application needs an explicit length")
        return (f.table[0],) * length
    n = len(rows[0])
    if any(len(r) != n for r in rows):
        raise InputError("rows must have equal length")
    return tuple(f(*col) for col in zip(*rows))


def preserves(f: Polymorphism, c: Constraint) -> tuple[bool, tuple[Assignment, ...] | None]:
    """Exhaustive check; the first violating row tuple in lexicographic order is returned."""
    if f.k != c.k:
        raise InputError(f"polymorphism over Z_{f.k} applied to a constraint over Z_{c.k}")
    for rows in itertools.product(c.accepted, repeat=f.arity):
        if apply(f, rows, c.arity) not in c:
            return False, rows
    return True, None


def is_weak_near_unanimity(f: Polymorphism) -> bool:
    """f(b,a,...,a) = f(a,b,a,...,a) = ... = f(a,...,a,b) for all a, b."""
    n = f.arity
    if n <= 1:
        return True
    for a, b in itertools.product(range(f.k), repeat=2):
        vals = {f(*[b if p == q else a for q in range(n)]) for p in range(n)}
        if len(vals) > 1:
            return False
    return True


@dataclass(frozen=True)
class DichotomyVerdict:
    verdict: str  # "P" or "NP-complete"
    preserving: tuple[str, ...]
    counterexamples: dict[str, tuple[int, tuple[Assignment, ...]]]

    def recheck(self, gamma: Sequence[Constraint]) -> bool:
        by_name = {f.name: f for f in SCHAEFER_POLYMORPHISMS}
        for name in self.preserving:
            if not all(preserves(by_name[name], c)[0] for c in gamma):
                return False
        for name, (i, rows) in self.counterexamples.items():
            c = gamma[i]
            if apply(by_name[name], rows, c.arity) in c:
                return False
        return (self.verdict == "P") == bool(self.preserving)


def classify_boolean(gamma: Sequence[Constraint]) -> DichotomyVerdict:
    """P iff one of 0, 1, AND, OR, MAJ, MIN preserves every constraint."""
    gamma = list(gamma)
    if any(c.k != 2 for c in gamma):
        raise PreconditionError("classify_boolean needs boolean constraints")
    preserving: list[str] = []
    counter: dict[str, tuple[int, tuple[Assignment, ...]]] = {}
    for f in SCHAEFER_POLYMORPHISMS:
        for i, c in enumerate(gamma):
            ok, rows = preserves(f, c)
            if not ok:
                counter[f.name] = (i, rows)  # type: ignore[assignment]
                break
        else:
            preserving.append(f.name)
    return DichotomyVerdict("P" if preserving else "NP-complete", tuple(preserving), counter)


def has_wnu_homomorphism_smallarity(
    gamma: Sequence[Constraint], max_arity: int = 3, min_arity: int = 2
) -> Polymorphism | None:
    """Lexicographically first preserving WNU of arity in [min_arity, max_arity], or None.

    None only means no such polymorphism exists up to max_arity; it is not a hardness proof.
    """
    gamma = list(gamma)
    if not gamma:
        raise InputError("empty constraint language")
    k = gamma[0].k
    if any(c.k != k for c in gamma):
        raise InputError("mixed alphabets")
    for n in range(min_arity, max_arity + 1):
        f = _search_wnu(gamma, k, n)
        if f is not None:
            return f
    return None


def _search_wnu(gamma: list[Constraint], k: int, n: int) -> Polymorphism | None:
    size = k**n

    def idx(args: Sequence[int]) -> int:
        r = 0
        for a in args:
            r = r * k + a
        return r

    # checks[j]: tests that become decidable once entry j is assigned
    checks: list[list[tuple[str, tuple]]] = [[] for _ in range(size)]
    for a, b in itertools.product(range(k), repeat=2):
        if a == b:
            continue
        group = tuple(idx([b if p == q else a for q in range(n)]) for p in range(n))
        checks[max(group)].append(("wnu", group))
    for c in gamma:
        for rows in itertools.product(c.accepted, repeat=n):
            cols = tuple(idx(col) for col in zip(*rows))
            if cols:
                checks[max(cols)].append(("pres", (cols, c)))
            elif () not in c:
                return None
    table = [0] * size

    def ok(j: int) -> bool:
        for kind, data in checks[j]:
            if kind == "wnu":
                v = table[data[0]]
                if any(table[g] != v for g in data[1:]):
                    return False
            else:
                cols, c = data
                if tuple(table[x] for x in cols) not in c:
                    return False
        return True

    def rec(j: int) -> bool:
        if j == size:
            return True
        for a in range(k):
            table[j] = a
            if ok(j) and rec(j + 1):
                return True
        return False

    if rec(0):
        return Polymorphism(n, k, tuple(table), f"wnu{n}")
    return None
