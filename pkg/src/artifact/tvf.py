"""TVF graphs, compression, tableau forms and simulation of the 1-in-3 constraint."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .core import (
    ArtifactError,
    Assignment,
    Const,
    Constraint,
    Neg,
    PreconditionError,
    Target,
    VarMap,
    negate_at,
    one_in_three,
    pushforward,
    restrict,
)
from .schaefer import MAJ, preserves

ONE_IN_THREE = ((1, 0, 0), (0, 1, 0), (0, 0, 1))
ONE_IN_THREE_NEG_Z = ((0, 0, 0), (0, 1, 1), (1, 0, 1))
SIM_VARS = ("x", "y", "z")
AUX_VAR = "z'"


@dataclass(frozen=True)
class TVFGraph:
    """Vertices with undirected 00/11 edges (singletons are loops) and directed 01 edges."""

    vertices: tuple[str, ...]
    e00: frozenset[frozenset[str]] = frozenset()
    e11: frozenset[frozenset[str]] = frozenset()
    e01: frozenset[tuple[str, str]] = frozenset()

    def __post_init__(self) -> None:
        vs = set(self.vertices)
        if len(vs) != len(self.vertices):
            raise PreconditionError("repeated vertex")
        e00 = frozenset(frozenset(e) for e in self.e00)
        e11 = frozenset(frozenset(e) for e in self.e11)
        e01 = frozenset(tuple(e) for e in self.e01)
        for e in itertools.chain(e00, e11):
            if not 1 <= len(e) <= 2 or not e <= vs:
                raise PreconditionError(f"bad undirected edge {set(e)}")
        for u, v in e01:
            if u == v:
                raise PreconditionError("01 loops are not allowed")
            if u not in vs or v not in vs:
                raise PreconditionError(f"bad directed edge {(u, v)}")
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "e00", e00)
        object.__setattr__(self, "e11", e11)
        object.__setattr__(self, "e01", e01)

    def forbidden(self) -> list[tuple[str, str, int, int]]:
        """Every edge as a forbidden pattern (u, v, a, b): phi(u)=a and phi(v)=b is excluded."""
        out = []
        for e in self.e00:
            u, v = (tuple(e) * 2)[:2] if len(e) == 1 else sorted(e, key=self.vertices.index)
            out.append((u, v, 0, 0))
        for e in self.e11:
            u, v = (tuple(e) * 2)[:2] if len(e) == 1 else sorted(e, key=self.vertices.index)
            out.append((u, v, 1, 1))
        for u, v in self.e01:
            out.append((u, v, 0, 1))
        return out

    def edges_between(self, u: str, v: str) -> list[tuple[str, str, int, int]]:
        return [e for e in self.forbidden() if {e[0], e[1]} == {u, v} and (u != v or e[0] == e[1])]

    def is_complete(self) -> bool:
        covered = {frozenset((u, v)) for u, v, _, _ in self.forbidden() if u != v}
        return all(frozenset(p) in covered for p in itertools.combinations(self.vertices, 2))

    def has_loop(self) -> bool:
        return any(len(e) == 1 for e in itertools.chain(self.e00, self.e11))

    def value_on(self, edge: tuple[str, str, int, int], v: str) -> int | None:
        """The forbidden value this edge assigns to endpoint v."""
        u, w, a, b = edge
        if u == v:
            return a
        if w == v:
            return b
        return None

    def induced(self, subset: Iterable[str]) -> "TVFGraph":
        keep = [v for v in self.vertices if v in set(subset)]
        ks = set(keep)
        return TVFGraph(
            tuple(keep),
            frozenset(e for e in self.e00 if e <= ks),
            frozenset(e for e in self.e11 if e <= ks),
            frozenset(e for e in self.e01 if set(e) <= ks),
        )

    def negated(self, subset: Iterable[str]) -> "TVFGraph":
        """Graph of the negation at subset: each forbidden pattern flips on those vertices."""
        s = set(subset)
        e00, e11, e01 = set(), set(), set()
        for u, v, a, b in self.forbidden():
            a2 = 1 - a if u in s else a
            b2 = 1 - b if v in s else b
            if u == v:
                if a2 == b2:
                    (e00 if a2 == 0 else e11).add(frozenset((u,)))
                continue
            if a2 == b2:
                (e00 if a2 == 0 else e11).add(frozenset((u, v)))
            elif a2 == 0:
                e01.add((u, v))
            else:
                e01.add((v, u))
        return TVFGraph(self.vertices, frozenset(e00), frozenset(e11), frozenset(e01))


def tvf_graph(c: Constraint) -> TVFGraph:
    """Edges record the value patterns on pairs (and loops) that no accepted tuple realizes."""
    if c.k != 2:
        raise PreconditionError("TVF graphs are defined for boolean constraints")
    vs = c.context
    e00, e11, e01 = set(), set(), set()
    for p in range(len(vs)):
        seen = {t[p] for t in c.accepted}
        for b in (0, 1):
            if b not in seen:
                (e00 if b == 0 else e11).add(frozenset((vs[p],)))
    for p, q in itertools.combinations(range(len(vs)), 2):
        seen = {(t[p], t[q]) for t in c.accepted}
        if (0, 0) not in seen:
            e00.add(frozenset((vs[p], vs[q])))
        if (1, 1) not in seen:
            e11.add(frozenset((vs[p], vs[q])))
        if (0, 1) not in seen:
            e01.add((vs[p], vs[q]))
        if (1, 0) not in seen:
            e01.add((vs[q], vs[p]))
    return TVFGraph(vs, frozenset(e00), frozenset(e11), frozenset(e01))


def is_tvf(c: Constraint) -> bool:
    return tvf_graph(c).is_complete()


def assignments(g: TVFGraph) -> list[Assignment]:
    """All assignments to g (tuples over g.vertices), lexicographically sorted."""
    pos = {v: i for i, v in enumerate(g.vertices)}
    # checks[i]: patterns decidable once vertex i is assigned
    checks: list[list[tuple[int, int, int, int]]] = [[] for _ in g.vertices]
    for u, v, a, b in g.forbidden():
        i, j = pos[u], pos[v]
        checks[max(i, j)].append((i, j, a, b))
    n = len(g.vertices)
    out: list[Assignment] = []
    phi = [0] * n

    def rec(i: int) -> None:
        if i == n:
            out.append(tuple(phi))
            return
        for a in (0, 1):
            phi[i] = a
            if all(not (phi[p] == x and phi[q] == y) for p, q, x, y in checks[i]):
                rec(i + 1)

    rec(0)
    return out


def graph_constraint(g: TVFGraph) -> Constraint:
    """C_TVF(g) as a constraint on g.vertices."""
    return Constraint(g.vertices, tuple(assignments(g)), 2)


def tvf_completion(c: Constraint) -> Constraint:
    return graph_constraint(tvf_graph(c))


@dataclass(frozen=True)
class CompressionWitness:
    at: str
    kind: str  # "constant" | "equality" | "negation"
    value: int | None = None
    to: str | None = None

    def holds(self, vertices: Sequence[str], rows: Iterable[Assignment]) -> bool:
        i = vertices.index(self.at)
        if self.kind == "constant":
            return all(t[i] == self.value for t in rows)
        j = vertices.index(self.to)  # type: ignore[arg-type]
        if self.kind == "equality":
            return all(t[i] == t[j] for t in rows)
        return all(t[i] != t[j] for t in rows)

    def target(self, r: VarMap | dict[str, Target]) -> Target:
        """Where a map defined on the compression set sends self.at."""
        if self.kind == "constant":
            return Const(self.value)  # type: ignore[arg-type]
        t = r[self.to]  # type: ignore[index]
        if self.kind == "equality":
            return t
        return negate_target(t)


def negate_target(t: Target) -> Target:
    if isinstance(t, Const):
        return Const(1 - t.value)
    if isinstance(t, Neg):
        return t.var
    return Neg(t)


@dataclass(frozen=True)
class Compression:
    subset: tuple[str, ...]
    witnesses: tuple[CompressionWitness, ...]
    patterns: tuple[str, ...]


def _find_witness(
    v: str, candidates: Sequence[str], vertices: Sequence[str], rows: Sequence[Assignment]
) -> CompressionWitness | None:
    i = vertices.index(v)
    vals = {t[i] for t in rows}
    if len(vals) <= 1:
        return CompressionWitness(v, "constant", value=min(vals) if vals else 0)
    for kind in ("equality", "negation"):
        for u in candidates:
            if u == v:
                continue
            w = CompressionWitness(v, kind, to=u)
            if w.holds(vertices, rows):
                return w
    return None


def _patterns(g: TVFGraph) -> tuple[str, ...]:
    out = []
    if g.has_loop():
        out.append("loop")
    if any(len(g.edges_between(u, v)) >= 2 for u, v in itertools.combinations(g.vertices, 2)):
        out.append("double-edge")
    # literal implication graph: an edge forbidding (u=a, v=b) gives u=a -> v=1-b and v=b -> u=1-a
    lits = [(v, a) for v in g.vertices for a in (0, 1)]
    reach = {p: {p} for p in lits}
    for u, v, a, b in g.forbidden():
        reach[(u, a)].add((v, 1 - b))
        reach[(v, b)].add((u, 1 - a))
    for mid in lits:
        for p in lits:
            if mid in reach[p]:
                reach[p] |= reach[mid]
    if any(q[0] != p[0] and p in reach[q] for p in lits for q in reach[p]):
        out.append("cycle")
    return tuple(out)


def find_compression(g: TVFGraph) -> Compression | None:
    """A proper compression set with per-vertex witnesses, or None if g is incompressible."""
    rows = assignments(g)
    vs = g.vertices
    keep = list(vs)
    for v in reversed(vs):
        if len(keep) == 1 and len(vs) > 1:
            break
        # a lone vertex only compresses (to the empty set) by a constant
        if _find_witness(v, [u for u in keep if u != v], vs, rows) is not None:
            keep.remove(v)
    if len(keep) == len(vs):
        return None
    witnesses = []
    for v in vs:
        if v in keep:
            continue
        w = _find_witness(v, keep, vs, rows)
        if w is None:
            raise ArtifactError(f"no witness for {v} relative to {keep}")
        witnesses.append(w)
    pats = _patterns(g) or ("dependence",)
    return Compression(tuple(keep), tuple(witnesses), pats)


def is_incompressible(g: TVFGraph) -> bool:
    return find_compression(g) is None


def functional_dependences(g: TVFGraph) -> list[CompressionWitness]:
    """Independent oracle: every single-vertex constant/equality/negation dependence."""
    rows = assignments(g)
    vs = g.vertices
    out = []
    for i, v in enumerate(vs):
        if len({t[i] for t in rows}) <= 1:
            out.append(CompressionWitness(v, "constant", value=rows[0][i] if rows else 0))
        for j, u in enumerate(vs):
            if u == v:
                continue
            if all(t[i] == t[j] for t in rows):
                out.append(CompressionWitness(v, "equality", to=u))
            if all(t[i] != t[j] for t in rows):
                out.append(CompressionWitness(v, "negation", to=u))
    return out


@dataclass(frozen=True)
class CompressedConstraint:
    original: Constraint
    subset: tuple[str, ...]
    constraint: Constraint
    witnesses: tuple[CompressionWitness, ...]

    def lift(self, r: dict[str, Target]) -> dict[str, Target]:
        """Extend a map on the compression set to the whole context through the witnesses."""
        out = dict(r)
        for w in self.witnesses:
            out[w.at] = w.target(r)
        return {v: out[v] for v in self.original.context}


def compress_constraint(c: Constraint) -> CompressedConstraint:
    """Iterate compression on restrictions until incompressible, keeping at least one variable."""
    g_full = tvf_graph(c)
    cur = tuple(c.context)
    while True:
        comp = find_compression(g_full.induced(cur))
        if comp is None or not comp.subset:
            break
        cur = tuple(v for v in c.context if v in set(comp.subset))
    rows = assignments(g_full)
    witnesses = []
    for v in c.context:
        if v in cur:
            continue
        w = _find_witness(v, cur, c.context, rows)
        if w is None:
            raise ArtifactError(f"no witness for {v} relative to {cur}")
        witnesses.append(w)
    return CompressedConstraint(c, cur, restrict(c, cur), tuple(witnesses))


AUX_CONSTRAINTS = {
    "constant0": Constraint(("p",), ((0,),), 2),
    "constant1": Constraint(("p",), ((1,),), 2),
    "equality": Constraint(("p", "q"), ((0, 0), (1, 1)), 2),
    "negation": Constraint(("p", "q"), ((0, 1), (1, 0)), 2),
}


@dataclass(frozen=True)
class AuxConstraint:
    kind: str
    constraint: Constraint
    parent: int
    positions: tuple[str, ...]


@dataclass(frozen=True)
class MaximalCompression:
    gamma: tuple[Constraint, ...]
    compressed: tuple[CompressedConstraint, ...]
    aux: tuple[AuxConstraint, ...]

    @property
    def comp(self) -> tuple[Constraint, ...]:
        return tuple(cc.constraint for cc in self.compressed)

    def all_constraints(self) -> list[tuple[str, Constraint]]:
        out = [(f"comp{i}", cc.constraint) for i, cc in enumerate(self.compressed)]
        out += [(a.kind, a.constraint) for a in self.aux]
        return out


def maximal_compression(gamma: Sequence[Constraint]) -> MaximalCompression:
    compressed = tuple(compress_constraint(c) for c in gamma)
    aux: dict[str, AuxConstraint] = {}
    for i, cc in enumerate(compressed):
        for w in cc.witnesses:
            kind = f"constant{w.value}" if w.kind == "constant" else w.kind
            if kind in aux:
                continue
            pos = (w.at,) if w.kind == "constant" else (w.at, w.to)
            aux[kind] = AuxConstraint(kind, AUX_CONSTRAINTS[kind], i, pos)  # type: ignore[arg-type]
    order = ["constant0", "constant1", "equality", "negation"]
    return MaximalCompression(tuple(gamma), compressed, tuple(aux[k] for k in order if k in aux))


@dataclass(frozen=True)
class Tableau:
    variable_order: tuple[str, ...]
    rows: tuple[Assignment, ...]  # over variable_order
    negated: frozenset[str] = frozenset()
    index_set: tuple[int, ...] | None = None

    @property
    def matrix(self) -> tuple[Assignment, ...]:
        return self.rows

    def is_upper_triangular(self) -> bool:
        return all(row[j] == 0 for i, row in enumerate(self.rows) for j in range(min(i, len(row))))

    def row_over(self, i: int, context: Sequence[str]) -> Assignment:
        d = dict(zip(self.variable_order, self.rows[i]))
        return tuple(d[v] for v in context)


def _edges_to_remaining(g: TVFGraph, v: str, remaining: Sequence[str]) -> list[int]:
    vals = []
    for u in remaining:
        if u == v:
            continue
        for e in g.edges_between(v, u):
            vals.append(g.value_on(e, v))
    return vals  # type: ignore[return-value]


def _staircase(g: TVFGraph, order: Sequence[str], negated: frozenset[str]) -> Tableau:
    rows = assignments(g.negated(negated)) if negated else assignments(g)
    pos = [g.vertices.index(v) for v in order]
    reordered = {tuple(t[p] for p in pos) for t in rows}
    n = len(order)
    if len(reordered) != n + 1:
        raise PreconditionError(f"expected {n + 1} assignments, found {len(reordered)}")
    out = []
    for i in range(n):
        cand = [t for t in reordered if all(t[j] == 0 for j in range(i)) and t[i] == 1]
        if len(cand) != 1:
            raise PreconditionError("assignments do not form a staircase")
        out.append(cand[0])
    zero = (0,) * n
    if zero not in reordered:
        raise PreconditionError("zero assignment missing")
    out.append(zero)
    return Tableau(tuple(order), tuple(out), negated)


def _check_incompressible_complete(g: TVFGraph) -> None:
    if not g.is_complete():
        raise PreconditionError("graph is not complete")
    if find_compression(g) is not None:
        raise PreconditionError("graph is compressible")


def tableau_no00(g: TVFGraph) -> Tableau:
    """Upper triangular tableau for an incompressible complete graph without 00 edges."""
    if g.e00:
        raise PreconditionError("graph has 00 edges")
    _check_incompressible_complete(g)
    remaining = list(g.vertices)
    order = []
    while remaining:
        for v in remaining:
            if all(a == 1 for a in _edges_to_remaining(g, v, remaining)):
                break
        else:
            raise PreconditionError("no vertex with all incident edges 1 on it")
        order.append(v)
        remaining.remove(v)
    return _staircase(g, order, frozenset())


def tableau_01(g: TVFGraph) -> Tableau:
    """Staircase tableau for an incompressible complete graph with only 01 edges."""
    if g.e00 or g.e11:
        raise PreconditionError("graph has 00 or 11 edges")
    return tableau_no00(g)


def tableau_negated(g: TVFGraph) -> tuple[frozenset[str], Tableau]:
    """A negation set U and the upper triangular tableau of C_TVF(g) negated at U."""
    _check_incompressible_complete(g)
    remaining = list(g.vertices)
    order: list[str] = []
    neg: set[str] = set()
    while remaining:
        pick = None
        if len(remaining) == 1 and order:
            # no edges left to test: keep the polarity of the previous vertex
            pick, want = remaining[0], 0 if order[-1] in neg else 1
        for want in () if pick else (1, 0):
            for v in remaining:
                if all(a == want for a in _edges_to_remaining(g, v, remaining)):
                    pick = v
                    break
            if pick is not None:
                break
        if pick is None:
            raise PreconditionError("no vertex with all incident edges 0 on it or 1 on it")
        if want == 0:
            neg.add(pick)
        order.append(pick)
        remaining.remove(pick)
    u = frozenset(neg)
    return u, _staircase(g, order, u)


def is_staircase(t: Tableau) -> bool:
    n = len(t.variable_order)
    return (
        len(t.rows) == n + 1
        and t.is_upper_triangular()
        and all(t.rows[i][i] == 1 for i in range(n))
        and t.rows[n] == (0,) * n
    )


@dataclass(frozen=True)
class SimulationResult:
    source: Constraint
    target: Constraint
    map: VarMap
    aux_vars: tuple[str, ...]
    negation_set: frozenset[str]
    tableau: Tableau
    triple: tuple[int, int, int]
    case: str
    compression: CompressedConstraint
    verified: bool = field(default=False)

    def pushforward_context(self) -> tuple[str, ...]:
        return SIM_VARS + self.aux_vars


def _maj_index(t: Tableau, i: int, j: int, k: int) -> int:
    m = tuple((a & b) | (b & c) | (c & a) for a, b, c in zip(t.rows[i], t.rows[j], t.rows[k]))
    return t.rows.index(m)


def _violating_triple(t: Tableau, index_set: Sequence[int]) -> tuple[int, int, int]:
    ids = set(index_set)
    for i, j, k in itertools.combinations(sorted(index_set), 3):
        if _maj_index(t, i, j, k) not in ids:
            return i, j, k
    raise PreconditionError("constraint satisfies MAJ on its tableau rows")


def _check_simulation_input(c: Constraint) -> None:
    if c.k != 2:
        raise PreconditionError("simulation needs a boolean constraint")
    if not is_tvf(c):
        raise PreconditionError("constraint is not TVF")
    if preserves(MAJ, c)[0]:
        raise PreconditionError("constraint satisfies the majority polymorphism")


def _verify(c: Constraint, r: VarMap, aux: tuple[str, ...], target: Constraint) -> bool:
    ctx = SIM_VARS + aux
    pf = pushforward(c, r, context=ctx)
    return restrict(pf, SIM_VARS) == target


def simulate_one_in_three(c: Constraint) -> SimulationResult:
    """Simulate ONE3 or its z-negation without negation, for TVF non-MAJ constraints lacking 00 edges."""
    _check_simulation_input(c)
    if tvf_graph(c).e00:
        raise PreconditionError("TVF graph has a 00 edge")
    cc = compress_constraint(c)
    cw = cc.constraint
    tab = tableau_no00(tvf_graph(cw))
    ctx = cw.context
    index_set = tuple(n for n in range(len(tab.rows)) if tab.row_over(n, ctx) in cw)
    tab = Tableau(tab.variable_order, tab.rows, tab.negated, index_set)
    i, j, k = _violating_triple(tab, index_set)
    order = tab.variable_order
    pi, pj, pk = tab.rows[i], tab.rows[j], tab.rows[k]
    case1 = any(pi[h] == pj[h] == 1 for h in range(j + 1, k))
    r: dict[str, Target] = {}
    for col, v in enumerate(order):
        pat = (pi[col], pj[col], pk[col])
        if pat[0] == pat[1] == pat[2]:
            r[v] = Const(pat[0])
        elif pat == (1, 0, 0):
            r[v] = "x"
        elif pat == (0, 1, 0):
            r[v] = "y"
        elif case1:
            r[v] = {(0, 0, 1): AUX_VAR, (1, 1, 0): "z"}.get(pat)  # type: ignore[assignment]
            if r[v] is None:
                raise ArtifactError(f"unexpected column pattern {pat}")
        else:
            r[v] = "z" if pat == (0, 0, 1) else AUX_VAR
    aux: tuple[str, ...] = (AUX_VAR,)
    target_rows: tuple[Assignment, ...] = ONE_IN_THREE_NEG_Z
    label = "pair-overlap"
    if not case1:
        pf = pushforward(cw, r, context=SIM_VARS + aux)
        if (0, 0, 0) not in restrict(pf, SIM_VARS):
            target_rows, label = ONE_IN_THREE, "one-in-three"
            if AUX_VAR not in r.values():
                aux = ()
        else:
            label = "relabelled"
            s = _relabel_for(pf)
            r = {v: _apply_target(s, t) for v, t in r.items()}
            aux = ()
    full = VarMap(cc.lift(r))
    if any(isinstance(t, Neg) for _, t in full.targets):
        raise ArtifactError("simulation without negation produced a negated target")
    target = Constraint(SIM_VARS, target_rows, 2)
    ok = _verify(c, full, aux, target)
    if not ok:
        raise ArtifactError("simulation failed its pushforward check")
    return SimulationResult(c, target, full, aux, frozenset(), tab, (i, j, k), label, cc, True)


_RELABEL = [
    ({(1, 0, 0, 0), (0, 1, 0, 1), (0, 0, 1, 1), (0, 0, 0, 0)}, {"x": Const(0), "y": "x", "z": "y"}),
    ({(1, 0, 0, 1), (0, 1, 0, 0), (0, 0, 1, 1), (0, 0, 0, 0)}, {"x": "x", "y": Const(0), "z": "y"}),
    ({(1, 0, 0, 1), (0, 1, 0, 1), (0, 0, 1, 0), (0, 0, 0, 0)}, {"x": "x", "y": "y", "z": Const(0)}),
]


def _relabel_for(pf: Constraint) -> dict[str, Target]:
    rows = set(pf.accepted)
    for pattern, s in _RELABEL:
        if rows == pattern:
            out: dict[str, Target] = dict(s)
            out[AUX_VAR] = "z"
            return out
    raise ArtifactError(f"pushforward {sorted(rows)} matches none of the expected forms")


def _apply_target(s: dict[str, Target], t: Target) -> Target:
    if isinstance(t, Const):
        return t
    if isinstance(t, Neg):
        return negate_target(s[t.var])
    return s[t]


_NEG_PATTERNS: dict[tuple[int, int, int], Target] = {
    (1, 0, 0): "x",
    (0, 1, 1): Neg("x"),
    (0, 1, 0): "y",
    (1, 0, 1): Neg("y"),
    (0, 0, 1): "z",
    (1, 1, 0): Neg("z"),
}


def simulate_one_in_three_neg(c: Constraint) -> SimulationResult:
    """Simulate ONE3 with negation from any TVF constraint failing MAJ."""
    _check_simulation_input(c)
    cc = compress_constraint(c)
    cw = cc.constraint
    u, tab = tableau_negated(tvf_graph(cw))
    cneg = negate_at(cw, u)
    ctx = cw.context
    index_set = tuple(n for n in range(len(tab.rows)) if tab.row_over(n, ctx) in cneg)
    tab = Tableau(tab.variable_order, tab.rows, tab.negated, index_set)
    i, j, k = _violating_triple(tab, index_set)
    r: dict[str, Target] = {}
    for col, v in enumerate(tab.variable_order):
        flip = 1 if v in u else 0
        pat = tuple(tab.rows[n][col] ^ flip for n in (i, j, k))
        r[v] = Const(pat[0]) if pat[0] == pat[1] == pat[2] else _NEG_PATTERNS[pat]  # type: ignore[index]
    full = VarMap(cc.lift(r))
    target = one_in_three(SIM_VARS)
    if not _verify(c, full, (), target):
        raise ArtifactError("negated simulation failed its pushforward check")
    return SimulationResult(c, target, full, (), u, tab, (i, j, k), "negation", cc, True)
