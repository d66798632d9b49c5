"""Gadget constructions and reductions between constraint systems."""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Hashable, Iterable, Mapping, Sequence

from .core import (
    ArtifactError,
    Const,
    Constraint,
    ConstraintSystem,
    Distribution,
    InputError,
    Neg,
    PreconditionError,
    VarMap,
    is_satisfiable,
    negate_at,
    neq,
    one_in_three,
    pushforward,
    restrict,
)
from .games import GameSpec
from .schaefer import MAJ, classify_boolean, preserves
from .tvf import (
    SIM_VARS,
    SimulationResult,
    is_incompressible,
    is_tvf,
    maximal_compression,
    simulate_one_in_three,
    simulate_one_in_three_neg,
    tvf_graph,
)

CERT_SEARCH_BOUND = 2**128
BASIC_VARS = ("u", "v", "w", "x", "y", "z")
BASIC_TRIPLES = (("x", "u", "v"), ("y", "u", "w"), ("z", "v", "w"))
# negated gadget variables giving each triple exactly j negated members
DEFAULT_NEGATION = {0: (), 1: ("x", "y", "z"), 2: ("u", "v", "w"), 3: BASIC_VARS}
PRISM_VARS = ("x", "y", "z", "x'", "y'", "z'")
PRISM_EDGES = (
    ("x", "y"), ("y", "z"), ("z", "x"),
    ("x'", "y'"), ("y'", "z'"), ("z'", "x'"),
    ("x", "x'"), ("y", "y'"), ("z", "z'"),
)


@dataclass(frozen=True)
class GadgetOutput:
    """A constraint system, its distinguished variables and their intended joint relation."""

    cs: ConstraintSystem
    distinguished: tuple[str, ...]
    claimed_constant: Fraction
    provenance: str
    relation: Constraint
    notes: Mapping[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        missing = [v for v in self.distinguished if v not in self.cs.variables]
        if missing:
            raise ArtifactError(f"distinguished variables {missing} are not in the system")
        if self.relation.context != self.distinguished:
            raise ArtifactError("relation must be stated over the distinguished variables")
        object.__setattr__(self, "claimed_constant", Fraction(self.claimed_constant))


@dataclass(frozen=True)
class Certificate:
    ok: bool
    witnesses: dict[tuple[int, ...], dict[str, int] | None]
    expected: frozenset[tuple[int, ...]]


def extension(
    S: ConstraintSystem, pins: Mapping[str, int], search_bound: int = CERT_SEARCH_BOUND
) -> dict[str, int] | None:
    """A satisfying assignment agreeing with pins, or None."""
    extra = [Constraint((v,), ((a,),), S.k) for v, a in pins.items()]
    ok, phi = is_satisfiable(
        ConstraintSystem(S.k, S.variables, S.constraints + tuple(extra)), search_bound
    )
    return phi if ok else None


def certify(g: GadgetOutput, search_bound: int = CERT_SEARCH_BOUND) -> Certificate:
    """Each value of the distinguished tuple extends iff it lies in the stated relation."""
    wit: dict[tuple[int, ...], dict[str, int] | None] = {}
    ok = True
    for t in itertools.product(range(g.cs.k), repeat=len(g.distinguished)):
        phi = extension(g.cs, dict(zip(g.distinguished, t)), search_bound)
        wit[t] = phi
        ok &= (phi is not None) == (t in g.relation)
    return Certificate(ok, wit, g.relation.accepted_set)


def extension_witnesses(g: GadgetOutput) -> dict[tuple[int, ...], list[tuple[int, ...]]]:
    """All satisfying assignments (tuples in table order) grouped by the distinguished values."""
    from .core import all_solutions

    out: dict[tuple[int, ...], list[tuple[int, ...]]] = {}
    pos = [g.cs.order(v) for v in g.distinguished]
    for t in all_solutions(g.cs):
        out.setdefault(tuple(t[p] for p in pos), []).append(t)
    return out


class _Namer:
    def __init__(self, gid: str):
        self.gid = gid
        self.counts: Counter[str] = Counter()

    def fresh(self, role: str) -> str:
        n = self.counts[role]
        self.counts[role] += 1
        return f"{self.gid}.{role}.{n}"


def _embed(
    g: GadgetOutput, binding: Mapping[str, str], namer: _Namer, role: str
) -> tuple[list[Constraint], list[str]]:
    """Constraints of g with distinguished variables bound and the rest renamed freshly."""
    names = dict(binding)
    fresh = []
    for v in g.cs.variables:
        if v not in names:
            names[v] = namer.fresh(role)
            fresh.append(names[v])
    return [c.renamed(names) for c in g.cs.constraints], fresh


def _system(constraints: Sequence[Constraint], variables: Sequence[str], k: int = 2) -> ConstraintSystem:
    seen = dict.fromkeys(variables)
    for c in constraints:
        for v in c.context:
            seen.setdefault(v)
    return ConstraintSystem(k, tuple(seen), tuple(constraints))


def _full(ctx: Sequence[str], k: int = 2) -> Constraint:
    return Constraint(tuple(ctx), tuple(itertools.product(range(k), repeat=len(ctx))), k)


# ---- basic commutativity gadget ------------------------------------------------------


def _negated_positions(base: Constraint) -> tuple[int, ...]:
    if base.k != 2 or base.arity != 3:
        raise PreconditionError("base must be a boolean constraint on three variables")
    ref = one_in_three(base.context)
    for r in range(4):
        for pos in itertools.combinations(range(3), r):
            if negate_at(ref, [base.context[p] for p in pos]).accepted == base.accepted:
                return pos
    raise PreconditionError("base is not 1-in-3 with some positions negated")


def basic_gadget(
    base: Constraint | None = None, negation_pattern: Iterable[str] | None = None
) -> GadgetOutput:
    """Three copies of base on (x,u,v), (y,u,w), (z,v,w); negated slots take only negated variables."""
    base = base if base is not None else one_in_three(SIM_VARS)
    pos = _negated_positions(base)
    neg = set(DEFAULT_NEGATION[len(pos)] if negation_pattern is None else negation_pattern)
    if not neg <= set(BASIC_VARS):
        raise InputError(f"negation pattern {sorted(neg)} names unknown gadget variables")
    cons = []
    for triple in BASIC_TRIPLES:
        negs = [v for v in triple if v in neg]
        plain = [v for v in triple if v not in neg]
        if len(negs) != len(pos):
            raise InputError(
                f"triple {triple} has {len(negs)} negated variables, base negates {len(pos)} slots"
            )
        ctx = [""] * 3
        for p in range(3):
            ctx[p] = negs.pop(0) if p in pos else plain.pop(0)
        cons.append(Constraint(tuple(ctx), base.accepted, 2))
    cs = ConstraintSystem(2, BASIC_VARS, tuple(cons))
    return GadgetOutput(cs, ("x", "y"), Fraction(512), "basic-gadget", _full(("x", "y")),
                        {"negated": tuple(sorted(neg))})


# ---- empty-constraint replacement ----------------------------------------------------


def _all_pairs_extend(c: Constraint, u: str, v: str) -> bool:
    return len(restrict(c, (u, v)).accepted) == c.k**2


def find_nontvf_witness(constraints: Iterable[Constraint]) -> tuple[Constraint, str, str] | None:
    """Smallest constraint with a pair of positions taking every joint value."""
    for c in sorted(set(constraints), key=Constraint.sort_key):
        for u, v in itertools.combinations(c.context, 2):
            if _all_pairs_extend(c, u, v):
                return c, u, v
    return None


def _is_empty_pair(c: Constraint) -> bool:
    return c.arity == 2 and c.is_full()


def replace_empty_nontvf(
    S: ConstraintSystem,
    witness: Constraint | None = None,
    pair: tuple[str, str] | None = None,
) -> ConstraintSystem:
    """Each empty two-variable constraint becomes the witness with (u, v) bound to its pair."""
    if witness is None:
        found = find_nontvf_witness(c for c in S.constraints if not _is_empty_pair(c))
        if found is None:
            raise PreconditionError("no non-TVF witness among the non-empty constraints")
        witness, u, v = found
    else:
        if pair is None:
            raise InputError("a witness constraint needs its pair (u, v)")
        u, v = pair
        if u not in witness.context or v not in witness.context or u == v:
            raise InputError("pair must be two distinct variables of the witness")
        if not _all_pairs_extend(witness, u, v):
            raise PreconditionError(f"({u}, {v}) does not take every joint value in the witness")
    if witness.k != S.k:
        raise InputError("witness alphabet differs from the system")
    cons = []
    fresh: list[str] = []
    for i, c in enumerate(S.constraints):
        if not _is_empty_pair(c):
            cons.append(c)
            continue
        x, y = c.context
        names = {u: x, v: y}
        for w in witness.context:
            if w not in names:
                names[w] = f"nontvf.{i}.{w}"
                fresh.append(names[w])
        cons.append(witness.renamed(names))
    return ConstraintSystem(S.k, S.variables + tuple(fresh), tuple(cons), S.distribution)


# ---- lifting compressed constraints back to the language -----------------------------


def _lift_candidates(gamma: Sequence[Constraint]):
    mc = maximal_compression(gamma)
    out = []
    for cc in mc.compressed:
        out.append((cc.original, cc.subset, cc.constraint))
    for a in mc.aux:
        parent = gamma[a.parent]
        out.append((parent, a.positions, restrict(parent, a.positions)))
    for c in gamma:
        out.append((c, c.context, c))
    return out


def _match(d: Constraint, comp: Constraint) -> dict[str, str] | None:
    """A map r from comp's context onto d's context with r_* comp = d."""
    if comp.arity < d.arity or comp.k != d.k:
        return None
    if comp.arity == d.arity and comp.accepted == d.accepted:
        return dict(zip(comp.context, d.context))
    for img in itertools.product(d.context, repeat=comp.arity):
        if set(img) != set(d.context):
            continue
        r = dict(zip(comp.context, img))
        try:
            if pushforward(comp, r, context=d.context) == d:
                return r
        except ArtifactError:
            continue
    return None


def the_bends(S: ConstraintSystem, gamma: Sequence[Constraint], gid: str = "bend") -> ConstraintSystem:
    """Replace each constraint (a pushforward of a compressed one) by its parent on fresh extras."""
    cands = _lift_candidates(gamma)
    cons = []
    fresh: list[str] = []
    for i, d in enumerate(S.constraints):
        for parent, subset, comp in cands:
            r = _match(d, comp)
            if r is None:
                continue
            full = dict(r)
            extra = []
            for v in parent.context:
                if v not in subset:
                    full[v] = f"{gid}.{i}.{v}"
                    extra.append(full[v])
            cons.append(pushforward(parent, full, context=tuple(d.context) + tuple(extra)))
            fresh += extra
            break
        else:
            raise PreconditionError(f"constraint {i} is not a pushforward of a compressed constraint")
    return ConstraintSystem(S.k, S.variables + tuple(fresh), tuple(cons), S.distribution)


# ---- constant, negation and simulation gadgets ---------------------------------------


def _edges(c: Constraint, a: int) -> list[tuple[str, str]]:
    g = tvf_graph(c)
    es = g.e00 if a == 0 else g.e11
    out = []
    for e in es:
        if len(e) == 2:
            out.append(tuple(sorted(e, key=c.context.index)))
    return sorted(out, key=lambda e: (c.index(e[0]), c.index(e[1])))  # type: ignore[arg-type]


def _incompressible(c: Constraint) -> bool:
    return c.k == 2 and is_tvf(c) and is_incompressible(tvf_graph(c))


def _with_edge(gamma: Iterable[Constraint], a: int) -> list[tuple[Constraint, tuple[str, str]]]:
    out = []
    for c in sorted(set(gamma), key=Constraint.sort_key):
        if _incompressible(c):
            for e in _edges(c, a):
                out.append((c, e))
    return out


def _zero(c: Constraint, e: tuple[str, str], gid: str) -> GadgetOutput:
    u, v = e
    names = {w: (f"{gid}.out.0" if w == u else f"{gid}.aux.{n}") for n, w in enumerate(c.context)}
    r = {w: names[u] if w == v else names[w] for w in c.context}
    cons = pushforward(c, r)
    cs = _system([cons], [names[u]])
    rel = Constraint((names[u],), ((0,),), 2)
    return GadgetOutput(cs, (names[u],), Fraction(c.arity - 1), "zero-gadget", rel)


def const_gadgets(
    gamma_max: Sequence[Constraint], gamma: Sequence[Constraint] = ()
) -> tuple[GadgetOutput, GadgetOutput]:
    """Gadgets forcing one variable to 0 and one to 1.

    The one-gadget prefers incompressible members of gamma_max and falls back to any member
    of gamma excluding the all-0 tuple, since compression can add that tuple.
    """
    zero = one = None
    for c, e in _with_edge(gamma_max, 1):
        g = _zero(c, e, "zero")
        if certify(g).ok:
            zero = g
            break
    if zero is None:
        raise PreconditionError("no incompressible constraint with an 11 edge")
    for c, e in _with_edge(gamma_max, 1):
        base = _zero(c, e, "one")
        u = "one.mid.0"
        base_cons = [d.renamed({base.distinguished[0]: u}) for d in base.cs.constraints]
        pool = [d for d in sorted(set(gamma_max), key=Constraint.sort_key) if _incompressible(d)]
        pool += [d for d in gamma if d not in pool]
        for c2 in pool:
            if (0,) * c2.arity in c2:
                continue
            phi0 = c2.accepted[0]
            out = "one.out.0"
            s = {w: (u if a == 0 else out) for w, a in zip(c2.context, phi0)}
            cons = base_cons + [pushforward(c2, s)]
            cs = _system(cons, [out])
            g = GadgetOutput(cs, (out,), Fraction(8 * (c.arity - 1)), "one-gadget",
                             Constraint((out,), ((1,),), 2))
            if certify(g).ok:
                one = g
                break
        if one is not None:
            break
    if one is None:
        raise PreconditionError("no incompressible non-empty constraint excluding the all-0 tuple")
    return zero, one


def negation_gadget(gamma_max: Sequence[Constraint]) -> GadgetOutput:
    """Two constraints sharing (u, v): one forbids 00 there, the other 11."""
    zeros = _with_edge(gamma_max, 0)
    ones = _with_edge(gamma_max, 1)
    if not zeros or not ones:
        raise PreconditionError("negation gadget needs incompressible constraints with 00 and 11 edges")
    for (c, (u, v)), (c2, (u2, v2)) in itertools.product(zeros, ones):
        n1 = {w: f"neg.aux.{n}" for n, w in enumerate(c.context)}
        n1[u], n1[v] = "neg.out.0", "neg.out.1"
        n2 = {w: f"neg.aux.{c.arity + n}" for n, w in enumerate(c2.context)}
        n2[u2], n2[v2] = "neg.out.0", "neg.out.1"
        cs = _system([c.renamed(n1), c2.renamed(n2)], ["neg.out.0", "neg.out.1"])
        g = GadgetOutput(
            cs, ("neg.out.0", "neg.out.1"), Fraction(4 * max(c.arity, c2.arity)), "negation-gadget",
            neq(2, ("neg.out.0", "neg.out.1")),
        )
        if certify(g).ok:
            return g
    raise PreconditionError("no certified negation gadget")


def simulate_gadget(
    sim: SimulationResult,
    zero: GadgetOutput | None = None,
    one: GadgetOutput | None = None,
    neg: GadgetOutput | None = None,
    gid: str = "sim",
) -> GadgetOutput:
    """Realize sim.target on (x, y, z): constants via constant gadgets, negations via negation gadgets."""
    namer = _Namer(gid)
    names: dict[str, str] = {v: v for v in SIM_VARS}
    for a in sim.aux_vars:
        names[a] = namer.fresh("aux")
    cons: list[Constraint] = []
    variables: list[str] = list(SIM_VARS)
    const_var: dict[int, str] = {}
    neg_var: dict[str, str] = {}
    r: dict[str, str] = {}
    uses_const = uses_neg = False
    for v, t in sim.map.targets:
        if isinstance(t, Const):
            uses_const = True
            if t.value not in const_var:
                const_var[t.value] = namer.fresh("one" if t.value else "zero")
            r[v] = const_var[t.value]
        elif isinstance(t, Neg):
            uses_neg = True
            if t.var not in neg_var:
                neg_var[t.var] = namer.fresh("neg")
            r[v] = neg_var[t.var]
        else:
            r[v] = names[t]
    cons.append(pushforward(sim.source, r))
    constant = Fraction(1)
    image = {w for w in r.values() if w not in const_var.values()}
    if uses_const:
        constant *= 24 * (len(image) + 2)
    if uses_neg:
        constant *= 4 * (sim.source.arity + 1)
    for value, var in sorted(const_var.items()):
        g = one if value else zero
        if g is None:
            raise PreconditionError(f"simulation uses the constant {value} but no gadget was given")
        cs, fresh = _embed(g, {g.distinguished[0]: var}, namer, f"c{value}")
        cons += cs
        variables += [var] + fresh
        constant *= g.claimed_constant
    for t, var in neg_var.items():
        if neg is None:
            raise PreconditionError("simulation uses negation but no negation gadget was given")
        cs, fresh = _embed(neg, {neg.distinguished[0]: var, neg.distinguished[1]: names[t]}, namer, "n")
        cons += cs
        variables += [var] + fresh
        constant *= neg.claimed_constant
    cs = _system(cons, variables)
    return GadgetOutput(cs, SIM_VARS, constant, "simulation-gadget", sim.target,
                        {"case": sim.case})


# ---- general commutativity gadget ----------------------------------------------------


def _gamma_max(gamma: Sequence[Constraint]) -> list[Constraint]:
    mc = maximal_compression(gamma)
    out = list(dict.fromkeys(list(mc.comp) + [a.constraint for a in mc.aux]))
    return out


def _complement(c: Constraint) -> Constraint:
    return negate_at(c, c.context)


def general_commutativity_gadget(gamma: Sequence[Constraint]) -> GadgetOutput:
    """Commutativity gadget over an NP-complete boolean TVF language."""
    gamma = list(gamma)
    if not gamma:
        raise InputError("empty constraint language")
    if any(c.k != 2 for c in gamma):
        raise PreconditionError("language must be boolean")
    if not all(is_tvf(c) for c in gamma):
        raise PreconditionError("language is not TVF; use replace_empty_nontvf instead")
    if classify_boolean(gamma).verdict != "NP-complete":
        raise PreconditionError("language is tractable")
    gmax = _gamma_max(gamma)
    has11 = bool(_with_edge(gmax, 1))
    has00 = bool(_with_edge(gmax, 0))
    if has11:
        return _general(gamma, gmax, negation=has00, flipped=False)
    if has00:
        flipped = [_complement(c) for c in gamma]
        g = _general(flipped, _gamma_max(flipped), negation=False, flipped=True)
        cs = ConstraintSystem(2, g.cs.variables, tuple(_complement(c) for c in g.cs.constraints))
        out = GadgetOutput(cs, g.distinguished, g.claimed_constant, g.provenance, g.relation,
                           dict(g.notes, branch="flipped"))
        if not certify(out).ok:
            raise ArtifactError("flipped gadget failed its completeness certificate")
        return out
    raise PreconditionError("no incompressible constraint with a 00 or 11 edge")


def _general(gamma, gmax, negation: bool, flipped: bool) -> GadgetOutput:
    sim = None
    for c1 in sorted(gmax, key=Constraint.sort_key):
        if preserves(MAJ, c1)[0] or not is_tvf(c1):
            continue
        sim = simulate_one_in_three_neg(c1) if negation else simulate_one_in_three(c1)
        break
    if sim is None:
        raise PreconditionError("every compressed constraint satisfies MAJ")
    targets = [t for _, t in sim.map.targets]
    zero = one = neg = None
    if any(isinstance(t, Const) for t in targets):
        zero, one = const_gadgets(gmax, gamma)
    if any(isinstance(t, Neg) for t in targets):
        neg = negation_gadget(gmax)
    sg = simulate_gadget(sim, zero, one, neg)
    bg = basic_gadget(sim.target)
    namer = _Namer("gen")
    cons: list[Constraint] = []
    variables = list(BASIC_VARS)
    for i, c in enumerate(bg.cs.constraints):
        binding = dict(zip(SIM_VARS, c.context))
        part, fresh = _embed(sg, binding, namer, f"copy{i}")
        cons += part
        variables += fresh
    s2 = ConstraintSystem(2, tuple(variables), tuple(cons))
    S = the_bends(s2, gamma)
    L = max(c.arity for c in gamma)
    branch = "negation" if negation else ("flipped" if flipped else "no-00")
    out = GadgetOutput(
        S, ("x", "y"), bg.claimed_constant * sg.claimed_constant * L, "general-gadget",
        _full(("x", "y")), {"branch": branch, "simulation": sim.case, "target": sim.target.accepted},
    )
    if not flipped and not certify(out).ok:
        raise ArtifactError("general gadget failed its completeness certificate")
    return out


# ---- 3-colouring ---------------------------------------------------------------------


def prism_gadget() -> GadgetOutput:
    """Nine 3-colouring edges on the triangular prism, distinguished pair (x, y')."""
    cons = tuple(neq(3, e) for e in PRISM_EDGES)
    cs = ConstraintSystem(3, PRISM_VARS, cons)
    # the end-to-end 3-colouring constant has no stated value; only its known factors are reported
    chain = {"prism": 6240, "acomm_to_a_3col": 145, "cv_to_acomm": "unquantified", "composed": "unquantified"}
    return GadgetOutput(cs, ("x", "y'"), Fraction(6240), "prism-gadget", _full(("x", "y'"), 3),
                        {"constant_chain": chain})


def replace_empty_3col(
    S: ConstraintSystem, pi: Distribution | None = None
) -> tuple[ConstraintSystem, Distribution]:
    """Each empty constraint on (a, b) becomes a prism with x = a and y' = b, mass split in nine."""
    if S.k != 3 or any(c.arity != 2 for c in S.constraints):
        raise PreconditionError("expected a 3-ary 2-CS")
    pi = pi if pi is not None else S.constraint_distribution()
    cons: list[Constraint] = []
    w: dict[int, Fraction] = {}
    fresh: list[str] = []
    for i, c in enumerate(S.constraints):
        if not c.is_full():
            w[len(cons)] = pi[i]
            cons.append(c)
            continue
        a, b = c.context
        names = {"x": a, "y'": b}
        for v in PRISM_VARS:
            if v not in names:
                names[v] = f"prism.{i}.{v}"
                fresh.append(names[v])
        for e in PRISM_EDGES:
            w[len(cons)] = pi[i] / 9
            cons.append(neq(3, (names[e[0]], names[e[1]])))
    d = Distribution({j: v for j, v in w.items() if v})
    return ConstraintSystem(3, S.variables + tuple(fresh), tuple(cons), d), d


# ---- one-hot to binary ---------------------------------------------------------------


def cv_to_2csp(
    S: ConstraintSystem, k: int | None = None, pi: Distribution | None = None
) -> tuple[ConstraintSystem, Distribution]:
    """One-hot constraints on k variables become binary constraints between a question variable and each x."""
    if S.k != 2:
        raise PreconditionError("expected a boolean system")
    if k is None:
        k = S.constraints[0].arity if S.constraints else 3
    if k < 3:
        raise PreconditionError("alphabet size must be at least 3")
    pi = pi if pi is not None else S.constraint_distribution()
    cons = []
    w: dict[int, Fraction] = {}
    ys = []
    for i, c in enumerate(S.constraints):
        if c.arity != k or set(c.accepted) != {tuple(int(p == a) for p in range(k)) for a in range(k)}:
            raise PreconditionError(f"constraint {i} is not one-hot on {k} variables")
        y = f"cv2.y.{i}"
        ys.append(y)
        for p, x in enumerate(c.context):
            rows = [(a, 0) for a in range(k) if a != p] + [(p, b) for b in range(1, k)]
            w[len(cons)] = pi[i] / c.arity
            cons.append(Constraint((y, x), tuple(rows), k))
    d = Distribution({j: v for j, v in w.items() if v})
    return ConstraintSystem(k, S.variables + tuple(ys), tuple(cons), d), d


# ---- anchors for constraint-constraint games -----------------------------------------


def find_free_variable(constraints: Iterable[Constraint]) -> tuple[Constraint, str] | None:
    for c in sorted(set(constraints), key=Constraint.sort_key):
        for p, v in enumerate(c.context):
            if {t[p] for t in c.accepted} == set(range(c.k)):
                return c, v
    return None


@dataclass(frozen=True)
class Expansion:
    cs: ConstraintSystem
    pi_constraints: Distribution
    pi_pairs: Distribution
    anchor: Constraint
    free: str
    anchor_index: dict[str, int]


def cc_expand(
    S: ConstraintSystem,
    pi: Distribution | None = None,
    anchor: tuple[Constraint, str] | None = None,
) -> Expansion:
    """Append an anchor constraint per variable, binding the anchor's free slot to that variable."""
    pi = pi if pi is not None else S.constraint_distribution()
    found = anchor if anchor is not None else find_free_variable(S.constraints)
    if found is None:
        raise PreconditionError("no constraint has a variable taking every value")
    c0, v0 = found
    if {t[c0.index(v0)] for t in c0.accepted} != set(range(c0.k)):
        raise PreconditionError(f"{v0} does not take every value in the anchor constraint")
    cons = list(S.constraints)
    fresh = []
    index: dict[str, int] = {}
    for x in S.variables:
        names = {}
        for u in c0.context:
            if u == v0:
                names[u] = x
            else:
                names[u] = f"anchor.{x}.{u}"
                fresh.append(names[u])
        index[x] = len(cons)
        cons.append(c0.renamed(names))
    w: dict[int, Fraction] = {}
    pairs: dict[tuple[int, int], Fraction] = {}
    for i, c in enumerate(S.constraints):
        if pi[i]:
            w[i] = w.get(i, Fraction(0)) + pi[i] / 2
        for x in c.context:
            j = index[x]
            w[j] = w.get(j, Fraction(0)) + pi[i] / (2 * c.arity)
            if pi[i]:
                pairs[(i, j)] = pi[i] / c.arity
    d1 = Distribution({j: v for j, v in w.items() if v})
    d2 = Distribution(pairs)
    cs = ConstraintSystem(S.k, S.variables + tuple(fresh), tuple(cons), d1)
    return Expansion(cs, d1, d2, c0, v0, index)


# ---- subdivision ---------------------------------------------------------------------


def pairwise_decomposition(S: ConstraintSystem) -> list[list[Constraint]]:
    """One clause per pair of context variables (the pair projection); fails if that loses information."""
    out = []
    for i, c in enumerate(S.constraints):
        if c.arity <= 2:
            out.append([c])
            continue
        clauses = [restrict(c, p) for p in itertools.combinations(c.context, 2)]
        if _conjunction(c.context, clauses, c.k) != c.accepted_set:
            raise PreconditionError(f"constraint {i} is not the conjunction of its pair projections")
        out.append(clauses)
    return out


def _conjunction(ctx: Sequence[str], clauses: Sequence[Constraint], k: int) -> frozenset:
    pos = {v: n for n, v in enumerate(ctx)}
    out = set()
    for t in itertools.product(range(k), repeat=len(ctx)):
        if all(tuple(t[pos[v]] for v in d.context) in d for d in clauses):
            out.add(t)
    return frozenset(out)


def subdivide(
    B: ConstraintSystem,
    decomposition: Sequence[Sequence[Constraint]],
    pi: Distribution | None = None,
) -> tuple[ConstraintSystem, Distribution]:
    """Clauses as separate constraints, with pi_sub(ij, kl) = pi(i, k) / (m_i m_k)."""
    if len(decomposition) != B.m:
        raise InputError(f"decomposition has {len(decomposition)} entries for {B.m} constraints")
    pi = pi if pi is not None else B.pair_distribution()
    flat: list[Constraint] = []
    owner: list[int] = []
    for i, (c, clauses) in enumerate(zip(B.constraints, decomposition)):
        if not clauses:
            raise PreconditionError(f"constraint {i} has no clauses")
        for d in clauses:
            if not set(d.context) <= set(c.context):
                raise PreconditionError(f"clause {d.context} leaves the context of constraint {i}")
        for x, y in itertools.combinations(c.context, 2):
            if not any(x in d.context and y in d.context for d in clauses):
                raise PreconditionError(f"pair ({x}, {y}) of constraint {i} is in no clause")
        if _conjunction(c.context, clauses, B.k) != c.accepted_set:
            raise PreconditionError(f"clauses of constraint {i} do not conjoin to it")
        for d in clauses:
            flat.append(d)
            owner.append(i)
    sizes = Counter(owner)
    w = {}
    for a, b in itertools.product(range(len(flat)), repeat=2):
        v = pi[(owner[a], owner[b])]
        if v:
            w[(a, b)] = v / (sizes[owner[a]] * sizes[owner[b]])
    d = Distribution(w)
    return ConstraintSystem(B.k, B.variables, tuple(flat), d), d


# ---- oracularization -----------------------------------------------------------------


def _orac_distribution(G: GameSpec) -> tuple[list[Hashable], dict[tuple, Fraction]]:
    pairs = [key for key in G.distribution.support()]
    qs = set(G.questions)
    for key in pairs:
        if key in qs:
            raise InputError(f"question {key!r} collides with a pair question")
    w: dict[tuple, Fraction] = {}

    def add(k, v):
        w[k] = w.get(k, Fraction(0)) + v

    for (i, j), p in G.distribution.items():
        q = (i, j)
        add((q, i), p / 8)
        add((q, j), p / 8)
        add((i, q), p / 8)
        add((j, q), p / 8)
        add((q, q), p / 2)
    return pairs, w


def oracularize(G: GameSpec) -> GameSpec:
    """Pair questions answered jointly, checked for consistency against single questions."""
    if not G.synchronous:
        raise PreconditionError("oracularization expects a synchronous game")
    pairs, w = _orac_distribution(G)
    answers: dict[Hashable, tuple] = dict(G.answers)
    for i, j in pairs:
        answers[(i, j)] = tuple(
            (a, b) for a in G.answers[i] for b in G.answers[j]
            if (i != j or a == b) and G.predicate(a, b, i, j)
        )
        if not answers[(i, j)]:
            raise PreconditionError(f"pair question {(i, j)!r} has no accepted answer")
    pair_set = set(pairs)

    def parts(q, a):
        if q in pair_set:
            return [(q[0], a[0]), (q[1], a[1])]
        return [(q, a)]

    def pred(a, b, q1, q2):
        if q1 == q2:
            return a == b
        left, right = parts(q1, a), parts(q2, b)
        return all(x == y for p, x in left for r, y in right if p == r)

    qs = tuple(G.questions) + tuple(pairs)
    meas = {q: ("context", n) for n, q in enumerate(qs)}
    return GameSpec(qs, answers, Distribution(w), pred, True, meas, "orac")


def oracularize_cs(G: GameSpec) -> tuple[ConstraintSystem, Distribution]:
    """The boolean system whose constraint-constraint game is the oracularization of G.

    Answers must be equal-length bit tuples per question.
    """
    if not G.synchronous:
        raise PreconditionError("oracularization expects a synchronous game")
    pairs, w = _orac_distribution(G)
    width = {}
    for q in G.questions:
        lens = {len(a) for a in G.answers[q]}
        if len(lens) != 1 or any(b not in (0, 1) for a in G.answers[q] for b in a):
            raise InputError(f"answers to {q!r} must be bit tuples of one length")
        width[q] = lens.pop()
    qs = list(G.questions)
    names = {q: tuple(f"q{n}.{j}" for j in range(width[q])) for n, q in enumerate(qs)}
    cons = [Constraint(names[q], tuple(G.answers[q]), 2) for q in qs]
    index = {q: n for n, q in enumerate(qs)}
    for i, j in pairs:
        index[(i, j)] = len(cons)
        if i == j:
            rows = [a for a in G.answers[i] if G.predicate(a, a, i, i)]
            cons.append(Constraint(names[i], tuple(rows), 2))
        else:
            rows = [a + b for a in G.answers[i] for b in G.answers[j] if G.predicate(a, b, i, j)]
            if not rows:
                raise PreconditionError(f"pair question {(i, j)!r} has no accepted answer")
            cons.append(Constraint(names[i] + names[j], tuple(rows), 2))
    d = Distribution({(index[a], index[b]): v for (a, b), v in w.items()})
    variables = tuple(v for q in qs for v in names[q])
    return ConstraintSystem(2, variables, tuple(cons), d), d
