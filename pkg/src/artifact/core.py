"""Constraints, constraint systems and their purely classical transformations."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Hashable, Iterable, Iterator, Mapping, Sequence, Union

DEFAULT_SEARCH_BOUND = 2**24


class ArtifactError(Exception):
    """Base class for all library errors."""


class InputError(ArtifactError):
    """Malformed input data."""


class PreconditionError(ArtifactError):
    """An operation was called outside its precondition."""


class EmptyConstraintError(PreconditionError):
    """A transformation produced a constraint with no accepted tuple."""


class SearchBoundExceeded(ArtifactError):
    """A brute-force search would exceed the configured bound."""


Assignment = tuple[int, ...]


def _as_fraction(x: Any) -> Fraction:
    if isinstance(x, float):
        raise InputError("distribution weights must be exact (int, Fraction or 'p/q' strings)")
    return Fraction(x)


@dataclass(frozen=True)
class Constraint:
    """A context of distinct variables with a non-empty set of accepted tuples over Z_k."""

    context: tuple[str, ...]
    accepted: tuple[Assignment, ...]
    k: int = 2

    def __post_init__(self) -> None:
        ctx = tuple(self.context)
        if self.k < 2:
            raise InputError(f"alphabet size must be >= 2, got {self.k}")
        if len(set(ctx)) != len(ctx):
            raise InputError(f"context repeats a variable: {ctx}")
        rows = set()
        for t in self.accepted:
            t = tuple(int(a) for a in t)
            if len(t) != len(ctx):
                raise InputError(f"tuple {t} has length {len(t)}, context has {len(ctx)}")
            if any(a < 0 or a >= self.k for a in t):
                raise InputError(f"tuple {t} has entries outside Z_{self.k}")
            rows.add(t)
        if not rows:
            raise EmptyConstraintError("accepted set must be non-empty")
        object.__setattr__(self, "context", ctx)
        object.__setattr__(self, "accepted", tuple(sorted(rows)))
        object.__setattr__(self, "_set", frozenset(rows))

    @property
    def arity(self) -> int:
        return len(self.context)

    @property
    def accepted_set(self) -> frozenset[Assignment]:
        return self._set  # type: ignore[attr-defined]

    def __contains__(self, t: object) -> bool:
        return t in self._set  # type: ignore[attr-defined]

    def __len__(self) -> int:
        return len(self.accepted)

    def index(self, v: str) -> int:
        return self.context.index(v)

    def is_full(self) -> bool:
        return len(self.accepted) == self.k**self.arity

    def renamed(self, names: Mapping[str, str]) -> "Constraint":
        return Constraint(tuple(names.get(v, v) for v in self.context), self.accepted, self.k)

    def sort_key(self) -> tuple:
        return (self.arity, self.accepted)


@dataclass(frozen=True)
class Neg:
    """Negated target of a variable map (boolean only)."""

    var: str


@dataclass(frozen=True)
class Const:
    """Constant target of a variable map."""

    value: int


Target = Union[str, Neg, Const]


def target_var(t: Target) -> str | None:
    if isinstance(t, str):
        return t
    if isinstance(t, Neg):
        return t.var
    return None


@dataclass(frozen=True)
class VarMap:
    """An augmented map r: V -> W u not-W u Z_k."""

    targets: tuple[tuple[str, Target], ...]

    def __init__(self, targets: Mapping[str, Target] | Iterable[tuple[str, Target]]):
        items = targets.items() if isinstance(targets, Mapping) else targets
        object.__setattr__(self, "targets", tuple(items))
        object.__setattr__(self, "_map", dict(self.targets))

    def __getitem__(self, v: str) -> Target:
        return self._map[v]  # type: ignore[attr-defined]

    def get(self, v: str, default: Target | None = None) -> Target | None:
        return self._map.get(v, default)  # type: ignore[attr-defined]

    def as_dict(self) -> dict[str, Target]:
        return dict(self._map)  # type: ignore[attr-defined]

    def image(self, source: Sequence[str]) -> tuple[str, ...]:
        out: list[str] = []
        for v in source:
            w = target_var(self[v])
            if w is not None and w not in out:
                out.append(w)
        return tuple(out)

    def then(self, s: "VarMap") -> "VarMap":
        """Composite s after self, resolving double negations and constants."""
        res: dict[str, Target] = {}
        for v, t in self.targets:
            if isinstance(t, Const):
                res[v] = t
            elif isinstance(t, str):
                res[v] = s[t]
            else:
                u = s[t.var]
                if isinstance(u, Const):
                    res[v] = Const(1 - u.value)
                elif isinstance(u, Neg):
                    res[v] = u.var
                else:
                    res[v] = Neg(u)
        return VarMap(res)

    @staticmethod
    def identity(context: Sequence[str]) -> "VarMap":
        return VarMap({v: v for v in context})


def eval_constraint(c: Constraint, phi: Mapping[str, int]) -> bool:
    """Whether the assignment phi, restricted to the context of c, is accepted."""
    missing = [v for v in c.context if v not in phi]
    if missing:
        raise InputError(f"assignment undefined on {missing}")
    return tuple(phi[v] for v in c.context) in c


def pushforward(
    c: Constraint,
    r: VarMap | Mapping[str, Target],
    context: Sequence[str] | None = None,
) -> Constraint:
    """The constraint {phi : phi o r in C} over the image context of r."""
    if not isinstance(r, VarMap):
        r = VarMap(r)
    targets = [r[v] for v in c.context]
    for t in targets:
        if isinstance(t, Neg) and c.k != 2:
            raise PreconditionError("negation targets require k = 2")
        if isinstance(t, Const) and not 0 <= t.value < c.k:
            raise InputError(f"constant {t.value} outside Z_{c.k}")
    image = r.image(c.context)
    ctx = tuple(context) if context is not None else image
    if len(set(ctx)) != len(ctx) or not set(image) <= set(ctx):
        raise InputError(f"target context {ctx} must list each image variable {image} once")
    pos = {w: i for i, w in enumerate(ctx)}
    free = [i for i, w in enumerate(ctx) if w not in image]
    rows: set[Assignment] = set()
    for t in c.accepted:
        val: dict[int, int] = {}
        ok = True
        for a, tg in zip(t, targets):
            if isinstance(tg, Const):
                ok = a == tg.value
            else:
                i = pos[target_var(tg)]  # type: ignore[index]
                b = a if isinstance(tg, str) else 1 - a
                ok = val.setdefault(i, b) == b
            if not ok:
                break
        if not ok:
            continue
        for fill in itertools.product(range(c.k), repeat=len(free)):
            val.update(zip(free, fill))
            rows.add(tuple(val[i] for i in range(len(ctx))))
    if not rows:
        raise EmptyConstraintError(f"pushforward of {c.context} is empty")
    return Constraint(ctx, tuple(rows), c.k)


def restrict(c: Constraint, subset: Sequence[str]) -> Constraint:
    """Projection C|_U, with context in the order given."""
    idx = []
    for v in subset:
        if v not in c.context:
            raise InputError(f"{v} is not in the context {c.context}")
        idx.append(c.index(v))
    return Constraint(tuple(subset), tuple(tuple(t[i] for i in idx) for t in c.accepted), c.k)


def negate_at(c: Constraint, subset: Iterable[str]) -> Constraint:
    """Flip every accepted tuple on the variables of subset (boolean only)."""
    if c.k != 2:
        raise PreconditionError("negation requires k = 2")
    u = set(subset)
    flips = [v in u for v in c.context]
    rows = tuple(tuple(1 - a if f else a for a, f in zip(t, flips)) for t in c.accepted)
    return Constraint(c.context, rows, 2)


class Distribution(Mapping[Hashable, Fraction]):
    """Exact probability distribution on a finite set, zero entries pruned."""

    def __init__(self, weights: Mapping[Hashable, Any] | Iterable[tuple[Hashable, Any]]):
        items = weights.items() if isinstance(weights, Mapping) else weights
        w: dict[Hashable, Fraction] = {}
        for key, val in items:
            f = _as_fraction(val)
            if f < 0:
                raise InputError(f"negative weight {f} on {key!r}")
            if f:
                w[key] = w.get(key, Fraction(0)) + f
        if sum(w.values(), Fraction(0)) != 1:
            raise InputError(f"weights sum to {sum(w.values(), Fraction(0))}, not 1")
        self._w = w

    @classmethod
    def uniform(cls, keys: Iterable[Hashable]) -> "Distribution":
        keys = list(keys)
        if not keys:
            raise InputError("uniform distribution over an empty set")
        return cls({k: Fraction(1, len(keys)) for k in keys})

    def __getitem__(self, key: Hashable) -> Fraction:
        return self._w.get(key, Fraction(0))

    def __iter__(self) -> Iterator[Hashable]:
        return iter(self._w)

    def __len__(self) -> int:
        return len(self._w)

    def __contains__(self, key: object) -> bool:
        return key in self._w

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Distribution):
            return self._w == other._w
        return NotImplemented

    def __hash__(self) -> int:
        return hash(frozenset(self._w.items()))

    def __repr__(self) -> str:
        return f"Distribution({self._w!r})"

    def support(self) -> list[Hashable]:
        return list(self._w)

    def marginal(self) -> "Distribution":
        """Row marginal of a distribution on pairs: p(i) = sum_j p(i, j)."""
        out: dict[Hashable, Fraction] = {}
        for key, val in self._w.items():
            i = key[0]  # type: ignore[index]
            out[i] = out.get(i, Fraction(0)) + val
        return Distribution(out)

    def is_symmetric(self) -> bool:
        return all(self[(j, i)] == v for (i, j), v in self._w.items())  # type: ignore[misc]


@dataclass(frozen=True)
class ConstraintSystem:
    """Variables, constraints over one alphabet, and an optional question distribution."""

    k: int
    variables: tuple[str, ...]
    constraints: tuple[Constraint, ...]
    distribution: Distribution | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        vs = tuple(self.variables)
        if len(set(vs)) != len(vs):
            raise InputError("variable table repeats a name")
        known = set(vs)
        for i, c in enumerate(self.constraints):
            if c.k != self.k:
                raise InputError(f"constraint {i} has alphabet {c.k}, system has {self.k}")
            bad = [v for v in c.context if v not in known]
            if bad:
                raise InputError(f"constraint {i} uses unknown variables {bad}")
        object.__setattr__(self, "variables", vs)
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "_order", {v: n for n, v in enumerate(vs)})

    @classmethod
    def build(
        cls,
        constraints: Sequence[Constraint],
        variables: Sequence[str] | None = None,
        distribution: Distribution | None = None,
        k: int | None = None,
    ) -> "ConstraintSystem":
        """Infer k and the variable table (first-appearance order) when not given."""
        if k is None:
            if not constraints:
                raise InputError("cannot infer k from an empty constraint list")
            k = constraints[0].k
        if variables is None:
            seen: dict[str, None] = {}
            for c in constraints:
                for v in c.context:
                    seen.setdefault(v)
            variables = tuple(seen)
        return cls(k, tuple(variables), tuple(constraints), distribution)

    @property
    def m(self) -> int:
        return len(self.constraints)

    def order(self, v: str) -> int:
        return self._order[v]  # type: ignore[attr-defined]

    def sorted_vars(self, vs: Iterable[str]) -> tuple[str, ...]:
        return tuple(sorted(vs, key=self.order))

    def with_distribution(self, d: Distribution | None) -> "ConstraintSystem":
        return ConstraintSystem(self.k, self.variables, self.constraints, d)

    def constraint_distribution(self) -> Distribution:
        """pi' on constraint indices: the stored one, the marginal of a pair one, or uniform."""
        d = self.distribution
        if d is None:
            return Distribution.uniform(range(self.m))
        keys = d.support()
        if keys and all(isinstance(key, tuple) for key in keys):
            return d.marginal()
        return d

    def pair_distribution(self) -> Distribution:
        """pi on index pairs: the stored one, or uniform over all ordered pairs."""
        d = self.distribution
        if d is not None and all(isinstance(key, tuple) for key in d.support()):
            return d
        return Distribution.uniform(itertools.product(range(self.m), repeat=2))

    def is_satisfied_by(self, phi: Mapping[str, int]) -> bool:
        return all(eval_constraint(c, phi) for c in self.constraints)


def check_search_bound(count: int, bound: int | None) -> None:
    bound = DEFAULT_SEARCH_BOUND if bound is None else bound
    if count > bound:
        raise SearchBoundExceeded(f"search space {count} exceeds bound {bound}")


def boolean_variable(x: str, a: int) -> str:
    return f"{x}#{a}"


def boolean_form(S: ConstraintSystem) -> ConstraintSystem:
    """The BCS on indicator variables x#a encoding each accepted tuple one-hot per variable."""
    k = S.k
    variables = tuple(boolean_variable(x, a) for x in S.variables for a in range(k))
    cons = []
    for c in S.constraints:
        ctx = tuple(boolean_variable(x, a) for x in c.context for a in range(k))
        rows = [tuple(int(t[p] == a) for p in range(c.arity) for a in range(k)) for t in c.accepted]
        cons.append(Constraint(ctx, tuple(rows), 2))
    return ConstraintSystem(2, variables, tuple(cons), S.distribution)


def iter_assignments(variables: Sequence[str], k: int) -> Iterator[dict[str, int]]:
    for vals in itertools.product(range(k), repeat=len(variables)):
        yield dict(zip(variables, vals))


def _search_order(S: ConstraintSystem) -> list[str]:
    """Most-constrained-first ordering: unary-pinned variables, then maximum connectivity."""
    touching: dict[str, list[int]] = {v: [] for v in S.variables}
    for n, c in enumerate(S.constraints):
        for v in set(c.context):
            touching[v].append(n)
    score = {v: 0 for v in S.variables}
    for c in S.constraints:
        if c.arity == 1:
            score[c.context[0]] += len(S.constraints) + 1
    order: list[str] = []
    placed: set[str] = set()
    rank = {v: n for n, v in enumerate(S.variables)}
    while len(order) < len(S.variables):
        v = max((u for u in S.variables if u not in placed), key=lambda u: (score[u], -rank[u]))
        order.append(v)
        placed.add(v)
        for n in touching[v]:
            for u in S.constraints[n].context:
                if u not in placed:
                    score[u] += 1
    return order


def _backtrack(S: ConstraintSystem, on_solution: Callable[[dict[str, int]], bool]) -> None:
    """Depth-first search with partial-tuple pruning; stops when on_solution returns True."""
    order = _search_order(S)
    cons_of: dict[str, list[Constraint]] = {v: [] for v in S.variables}
    for c in S.constraints:
        for v in set(c.context):
            cons_of[v].append(c)
    if any(() not in c for c in S.constraints if c.arity == 0):
        return
    phi: dict[str, int] = {}

    def consistent(c: Constraint) -> bool:
        known = [(p, phi[u]) for p, u in enumerate(c.context) if u in phi]
        return any(all(t[p] == a for p, a in known) for t in c.accepted)

    def rec(n: int) -> bool:
        if n == len(order):
            return on_solution(phi)
        v = order[n]
        for a in range(S.k):
            phi[v] = a
            if all(consistent(c) for c in cons_of[v]) and rec(n + 1):
                return True
        del phi[v]
        return False

    rec(0)


def is_satisfiable(
    S: ConstraintSystem, search_bound: int | None = None
) -> tuple[bool, dict[str, int] | None]:
    """Exhaustive backtracking search; returns a witness over all variables when satisfiable."""
    check_search_bound(S.k ** len(S.variables), search_bound)
    found: list[dict[str, int]] = []

    def take(phi: dict[str, int]) -> bool:
        found.append({v: phi[v] for v in S.variables})
        return True

    _backtrack(S, take)
    return (True, found[0]) if found else (False, None)


def all_solutions(S: ConstraintSystem, search_bound: int | None = None) -> list[Assignment]:
    """Every satisfying assignment, as tuples in variable-table order, lexicographically."""
    check_search_bound(S.k ** len(S.variables), search_bound)
    out: list[Assignment] = []

    def take(phi: dict[str, int]) -> bool:
        out.append(tuple(phi[v] for v in S.variables))
        return False

    _backtrack(S, take)
    out.sort()
    return out


def max_satisfying_fraction(
    S: ConstraintSystem,
    weights: Distribution | None = None,
    search_bound: int | None = None,
) -> Fraction:
    """Maximum weighted fraction of satisfied constraints over all assignments."""
    pi = weights if weights is not None else S.constraint_distribution()
    check_search_bound(S.k ** len(S.variables), search_bound)
    best = Fraction(0)
    idx = [(pi[i], [S.order(v) for v in c.context], c) for i, c in enumerate(S.constraints)]
    for vals in itertools.product(range(S.k), repeat=len(S.variables)):
        tot = sum((w for w, pos, c in idx if tuple(vals[p] for p in pos) in c), Fraction(0))
        if tot > best:
            best = tot
            if best == 1:
                break
    return best


# Named constraints used throughout.

def one_in_three(context: Sequence[str] = ("x", "y", "z")) -> Constraint:
    return Constraint(tuple(context), ((1, 0, 0), (0, 1, 0), (0, 0, 1)), 2)


def one_hot(context: Sequence[str]) -> Constraint:
    n = len(context)
    return Constraint(tuple(context), tuple(tuple(int(i == j) for j in range(n)) for i in range(n)), 2)


def neq(k: int, context: Sequence[str] = ("x", "y")) -> Constraint:
    return Constraint(tuple(context), tuple((a, b) for a in range(k) for b in range(k) if a != b), k)


def eq(k: int, context: Sequence[str] = ("x", "y")) -> Constraint:
    return Constraint(tuple(context), tuple((a, a) for a in range(k)), k)


def full(k: int, context: Sequence[str]) -> Constraint:
    return Constraint(tuple(context), tuple(itertools.product(range(k), repeat=len(context))), k)
