"""Finite-dimensional synchronous strategies, defect functionals and inequality checks."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Hashable, Iterable, Mapping, Sequence

import numpy as np
from scipy.stats import unitary_group

from .core import (
    ConstraintSystem,
    Distribution,
    InputError,
    PreconditionError,
)
from .games import GameSpec

TOL_PROJ = 1e-9
TOL_NUM = 1e-7
MODELS = ("cc", "cv", "a")


def tau(a: np.ndarray) -> complex:
    """Normalized trace."""
    return complex(np.trace(a)) / a.shape[0]


def hsq(a: np.ndarray) -> float:
    """Squared tracial 2-norm tau(a* a)."""
    return float(np.vdot(a, a).real) / a.shape[0]


def omega(k: int) -> complex:
    return complex(np.exp(2j * np.pi / k))


@dataclass(frozen=True)
class PVM:
    """Projectors indexed by outcomes."""

    outcomes: tuple[Any, ...]
    projectors: np.ndarray  # shape (n, d, d)

    def __post_init__(self) -> None:
        p = np.asarray(self.projectors, dtype=complex)
        if p.ndim != 3 or p.shape[0] != len(self.outcomes) or p.shape[1] != p.shape[2]:
            raise InputError(f"projector array of shape {p.shape} does not match {len(self.outcomes)} outcomes")
        object.__setattr__(self, "projectors", p)
        object.__setattr__(self, "_index", {o: n for n, o in enumerate(self.outcomes)})

    @property
    def d(self) -> int:
        return self.projectors.shape[1]

    def __getitem__(self, outcome: Any) -> np.ndarray:
        return self.projectors[self._index[outcome]]  # type: ignore[attr-defined]

    def index(self, outcome: Any) -> int:
        return self._index[outcome]  # type: ignore[attr-defined]

    def residuals(self) -> tuple[float, float]:
        """(max projector residual, completeness residual) in max-abs entry norm."""
        proj = 0.0
        for p in self.projectors:
            proj = max(proj, float(np.abs(p @ p - p).max()), float(np.abs(p - p.conj().T).max()))
        comp = float(np.abs(self.projectors.sum(axis=0) - np.eye(self.d)).max())
        return proj, comp

    def unitary(self) -> np.ndarray:
        """sum_a omega^a P_a for outcomes in Z_k (k = number of outcomes)."""
        k = len(self.outcomes)
        w = omega(k)
        return sum(w ** int(a) * p for a, p in zip(self.outcomes, self.projectors))  # type: ignore[return-value]

    def coarse(self, key) -> dict[Any, np.ndarray]:
        """Projectors summed over outcomes with the same key(outcome)."""
        out: dict[Any, np.ndarray] = {}
        for o, p in zip(self.outcomes, self.projectors):
            kk = key(o)
            out[kk] = out[kk] + p if kk in out else p.copy()
        return out

    def conjugated(self, u: np.ndarray) -> "PVM":
        return PVM(self.outcomes, np.einsum("ij,njk,lk->nil", u, self.projectors, u.conj()))


@dataclass(frozen=True)
class SyncStrategy:
    """Context PVMs over accepted tuples and/or variable PVMs over Z_k, all of dimension d."""

    model: str
    d: int
    context_pvms: Mapping[int, PVM] = field(default_factory=dict)
    variable_pvms: Mapping[str, PVM] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.model not in MODELS:
            raise InputError(f"unknown model {self.model!r}")
        for p in itertools.chain(self.context_pvms.values(), self.variable_pvms.values()):
            if p.d != self.d:
                raise InputError(f"PVM of dimension {p.d} in a strategy of dimension {self.d}")

    def with_model(self, model: str) -> "SyncStrategy":
        return SyncStrategy(model, self.d, dict(self.context_pvms), dict(self.variable_pvms))

    def measurement(self, kind: str, key: Any) -> PVM:
        try:
            return self.context_pvms[key] if kind == "context" else self.variable_pvms[key]
        except KeyError:
            raise InputError(f"strategy has no {kind} measurement for {key!r}") from None

    def check_for(self, S: ConstraintSystem, model: str | None = None) -> None:
        model = model or self.model
        if model in ("cc", "cv"):
            for i, c in enumerate(S.constraints):
                p = self.context_pvms.get(i)
                if p is None or set(p.outcomes) != set(c.accepted):
                    raise InputError(f"context PVM {i} missing or not indexed by the accepted set")
        if model in ("cv", "a", "a+comm"):
            for x in S.variables:
                p = self.variable_pvms.get(x)
                if p is None or set(p.outcomes) != set(range(S.k)):
                    raise InputError(f"variable PVM {x} missing or not indexed by Z_{S.k}")


@dataclass(frozen=True)
class Diagnostics:
    ok: bool
    max_projector_residual: float
    max_completeness_residual: float
    unitary_residual: float
    failures: tuple[str, ...]


def validate(s: SyncStrategy, tol_proj: float = TOL_PROJ) -> Diagnostics:
    """Projector, completeness and order-k unitary residuals against tol_proj."""
    proj = comp = uni = 0.0
    fails = []
    items = [(f"context {i}", p) for i, p in s.context_pvms.items()]
    items += [(f"variable {x}", p) for x, p in s.variable_pvms.items()]
    for name, p in items:
        a, b = p.residuals()
        proj, comp = max(proj, a), max(comp, b)
        if a > tol_proj or b > tol_proj:
            fails.append(name)
    for x, p in s.variable_pvms.items():
        k = len(p.outcomes)
        u = p.unitary()
        eye = np.eye(s.d)
        r = max(
            float(np.abs(u @ u.conj().T - eye).max()),
            float(np.abs(np.linalg.matrix_power(u, k) - eye).max()),
        )
        uni = max(uni, r)
        if r > tol_proj and f"variable {x}" not in fails:
            fails.append(f"variable {x}")
    return Diagnostics(not fails, proj, comp, uni, tuple(fails))


# ---- defect functionals -------------------------------------------------------------


def _pair_pi(S: ConstraintSystem, pi: Distribution | None) -> Distribution:
    return pi if pi is not None else S.pair_distribution()


def _single_pi(S: ConstraintSystem, pi: Distribution | None) -> Distribution:
    if pi is None:
        return S.constraint_distribution()
    if pi.support() and all(isinstance(k, tuple) for k in pi.support()):
        return pi.marginal()
    return pi


def _overlap(S: ConstraintSystem, i: int, j: int) -> list[tuple[int, int]]:
    ci, cj = S.constraints[i], S.constraints[j]
    return [(p, cj.index(v)) for p, v in enumerate(ci.context) if v in cj.context]


def defect_cc(s: SyncStrategy, S: ConstraintSystem, pi: Distribution | None = None) -> dict:
    """sum pi(i,j) sum over overlap-disagreeing (phi, psi) of ||P_phi P_psi||^2."""
    pi = _pair_pi(S, pi)
    out = {}
    for (i, j), w in pi.items():
        ov = _overlap(S, i, j)
        pi_, pj = s.context_pvms[i], s.context_pvms[j]
        tot = 0.0
        for a, pa in zip(pi_.outcomes, pi_.projectors):
            for b, pb in zip(pj.outcomes, pj.projectors):
                if any(a[p] != b[q] for p, q in ov):
                    tot += hsq(pa @ pb)
        out[(i, j)] = float(w) * tot
    return out


def _sigma_powers(pvm: PVM, pos: int, k: int) -> list[np.ndarray]:
    marg = pvm.coarse(lambda t: t[pos])
    w = omega(k)
    return [
        sum(w ** (l * a) * p for a, p in marg.items()) for l in range(1, k)  # type: ignore[misc]
    ]


def defect_inter(s: SyncStrategy, S: ConstraintSystem, pi: Distribution | None = None) -> dict:
    """sum pi(i,j) sum_{x shared} sum_{l=1}^{k-1} ||sigma_i(x)^l - sigma_j(x)^l||^2."""
    pi = _pair_pi(S, pi)
    out = {}
    for (i, j), w in pi.items():
        tot = 0.0
        for p, q in _overlap(S, i, j):
            si = _sigma_powers(s.context_pvms[i], p, S.k)
            sj = _sigma_powers(s.context_pvms[j], q, S.k)
            tot += sum(hsq(a - b) for a, b in zip(si, sj))
        out[(i, j)] = float(w) * tot
    return out


def defect_cv(s: SyncStrategy, S: ConstraintSystem, pi: Distribution | None = None) -> dict:
    """sum pi'(i)/|V_i| sum_{x, phi in C_i} ||P_phi (1 - Q^x_{phi(x)})||^2."""
    pi = _single_pi(S, pi)
    out = {}
    eye = np.eye(s.d)
    for i, c in enumerate(S.constraints):
        w = pi[i]
        if not w:
            continue
        pv = s.context_pvms[i]
        tot = 0.0
        for p, x in enumerate(c.context):
            q = s.variable_pvms[x]
            for phi, P in zip(pv.outcomes, pv.projectors):
                tot += hsq(P @ (eye - q[phi[p]]))
        out[i] = float(w) / c.arity * tot
    return out


def phi_products(s: SyncStrategy, S: ConstraintSystem, i: int) -> dict[tuple[int, ...], np.ndarray]:
    """Phi_{V_i, phi} for every phi (keyed in context order), multiplied in global variable order."""
    c = S.constraints[i]
    order = S.sorted_vars(c.context)
    pos = [c.index(v) for v in order]
    out = {}
    prods: list[tuple[tuple[int, ...], np.ndarray]] = [((), np.eye(s.d, dtype=complex))]
    for v in order:
        q = s.variable_pvms[v]
        prods = [(key + (a,), m @ q[a]) for key, m in prods for a in range(S.k)]
    for key, m in prods:
        phi = [0] * c.arity
        for p, a in zip(pos, key):
            phi[p] = a
        out[tuple(phi)] = m
    return out


def defect_a(s: SyncStrategy, S: ConstraintSystem, pi: Distribution | None = None) -> dict:
    """sum pi'(i) sum_{phi not in C_i} ||Phi_{V_i,phi}||^2."""
    pi = _single_pi(S, pi)
    out = {}
    for i, c in enumerate(S.constraints):
        w = pi[i]
        if not w:
            continue
        tot = sum(hsq(m) for phi, m in phi_products(s, S, i).items() if phi not in c)
        out[i] = float(w) * tot
    return out


def comm_weights(S: ConstraintSystem, pi: Distribution, normalization: str = "definition") -> dict:
    """Weight of [Pi_a(x), Pi_b(y)] for ordered x != y: sum over constraints holding both.

    normalization "per-context" divides each constraint's contribution by |V_i|.
    """
    w: dict[tuple[str, str], float] = {}
    for i, c in enumerate(S.constraints):
        if not pi[i]:
            continue
        f = float(pi[i]) / (c.arity if normalization == "per-context" else 1)
        for x, y in itertools.permutations(c.context, 2):
            w[(x, y)] = w.get((x, y), 0.0) + f
    return w


def commutator_sum(p: PVM, q: PVM) -> float:
    """sum_{a,b} ||[P_a, Q_b]||^2."""
    tot = 0.0
    for a in p.projectors:
        for b in q.projectors:
            tot += hsq(a @ b - b @ a)
    return tot


def defect_comm(
    s: SyncStrategy,
    S: ConstraintSystem,
    pi: Distribution | None = None,
    normalization: str = "definition",
) -> dict:
    pi = _single_pi(S, pi)
    return {
        (x, y): w * commutator_sum(s.variable_pvms[x], s.variable_pvms[y])
        for (x, y), w in comm_weights(S, pi, normalization).items()
    }


@dataclass(frozen=True)
class DefectReport:
    model: str
    total: float
    terms: dict[str, float]
    breakdown: dict[str, dict]


TERMS_FOR_MODEL = {
    "cc": ("cc",),
    "cv": ("cv",),
    "a": ("a",),
    "a+comm": ("a", "comm"),
}


def defect(
    s: SyncStrategy,
    S: ConstraintSystem,
    pi: Distribution | None = None,
    model: str | None = None,
    comm_normalization: str = "definition",
) -> DefectReport:
    """Defect of the strategy in the given model; cc also reports the inter term."""
    model = model or s.model
    if model not in TERMS_FOR_MODEL:
        raise InputError(f"unknown model {model!r}")
    s.check_for(S, model)
    parts: dict[str, dict] = {}
    if model == "cc":
        parts["cc"] = defect_cc(s, S, pi)
        parts["inter"] = defect_inter(s, S, pi)
    if model == "cv":
        parts["cv"] = defect_cv(s, S, pi)
    if model in ("a", "a+comm"):
        parts["a"] = defect_a(s, S, pi)
    if model == "a+comm":
        parts["comm"] = defect_comm(s, S, pi, comm_normalization)
    terms = {k: float(sum(v.values())) for k, v in parts.items()}
    total = sum(terms[t] for t in TERMS_FOR_MODEL[model])
    return DefectReport(model, total, terms, parts)


# ---- games ---------------------------------------------------------------------------


def _measurements(s: SyncStrategy, G: GameSpec) -> dict[Hashable, PVM]:
    out = {}
    for q in G.questions:
        kind, key = G.measurement_of[q]
        out[q] = s.measurement(kind, key)
    return out


def winning_probability(s: SyncStrategy, G: GameSpec) -> float:
    """sum pi(q1,q2) sum_{winning (a,b)} tau(M_a M_b)."""
    meas = _measurements(s, G)
    return _value(meas, G)


def _value(meas: Mapping[Hashable, PVM], G: GameSpec) -> float:
    tot = 0.0
    for (q1, q2), w in G.distribution.items():
        m1, m2 = meas[q1], meas[q2]
        sub = 0.0
        for a, pa in zip(m1.outcomes, m1.projectors):
            for b, pb in zip(m2.outcomes, m2.projectors):
                if G.predicate(a, b, q1, q2):
                    sub += float(np.einsum("ij,ji->", pa, pb).real)
        tot += float(w) * sub / m1.d
    return tot


# ---- constructors --------------------------------------------------------------------


def _indicator_pvm(outcomes: Sequence[Any], chosen: Any) -> PVM:
    return PVM(tuple(outcomes), np.array([[[1.0 if o == chosen else 0.0]] for o in outcomes], dtype=complex))


def _nearest(accepted: Sequence[tuple[int, ...]], t: tuple[int, ...]) -> tuple[int, ...]:
    return min(accepted, key=lambda r: (sum(a != b for a, b in zip(r, t)), r))


def embed_classical(
    S: ConstraintSystem,
    assignment: Mapping[str, int] | None = None,
    contexts: Mapping[int, tuple[int, ...]] | None = None,
    model: str = "cv",
) -> SyncStrategy:
    """Dimension-1 strategy from a global assignment and/or per-context choices.

    A context without an explicit choice gets the accepted tuple nearest (in Hamming
    distance, then lexicographically) to the assignment's restriction.
    """
    cpvms: dict[int, PVM] = {}
    vpvms: dict[str, PVM] = {}
    if model in ("cc", "cv"):
        for i, c in enumerate(S.constraints):
            if contexts is not None and i in contexts:
                choice = tuple(contexts[i])
                if choice not in c:
                    raise InputError(f"choice {choice} is not accepted by constraint {i}")
            elif assignment is not None:
                choice = _nearest(c.accepted, tuple(assignment[v] for v in c.context))
            else:
                raise InputError(f"no choice for constraint {i}")
            cpvms[i] = _indicator_pvm(c.accepted, choice)
    if model in ("cv", "a"):
        if assignment is None:
            raise InputError("variable measurements need a global assignment")
        for x in S.variables:
            vpvms[x] = _indicator_pvm(range(S.k), assignment[x])
    return SyncStrategy(model, 1, cpvms, vpvms)


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    if d == 1:
        return np.eye(1, dtype=complex)
    return unitary_group.rvs(d, random_state=rng)


def random_pvm(outcomes: Sequence[Any], d: int, rng: np.random.Generator) -> PVM:
    """Ranks as equal as possible, assigned to a random permutation of outcomes, Haar-rotated."""
    n = len(outcomes)
    base, extra = divmod(d, n)
    perm = rng.permutation(n)
    ranks = [0] * n
    for pos, o in enumerate(perm):
        ranks[o] = base + (1 if pos < extra else 0)
    u = haar_unitary(d, rng)
    projs = []
    start = 0
    for r in ranks:
        v = u[:, start : start + r]
        projs.append(v @ v.conj().T)
        start += r
    return PVM(tuple(outcomes), np.array(projs))


def random_strategy(model: str, S: ConstraintSystem, d: int, seed: int | None = 0) -> SyncStrategy:
    rng = np.random.default_rng(seed)
    cpvms: dict[int, PVM] = {}
    vpvms: dict[str, PVM] = {}
    if model in ("cc", "cv"):
        for i, c in enumerate(S.constraints):
            cpvms[i] = random_pvm(c.accepted, d, rng)
    if model in ("cv", "a"):
        for x in S.variables:
            vpvms[x] = random_pvm(range(S.k), d, rng)
    return SyncStrategy(model, d, cpvms, vpvms)


# ---- seesaw --------------------------------------------------------------------------


@dataclass(frozen=True)
class SeesawResult:
    strategy: SyncStrategy
    history: tuple[float, ...]

    @property
    def value(self) -> float:
        return self.history[-1]


def _linear_terms(q: Hashable, meas: Mapping[Hashable, PVM], G: GameSpec) -> list[np.ndarray]:
    """H_a with value = sum_a tau(M^q_a H_a) + (terms not involving q)."""
    mq = meas[q]
    d = mq.d
    hs = [np.zeros((d, d), dtype=complex) for _ in mq.outcomes]
    for (q1, q2), w in G.distribution.items():
        wf = float(w)
        if q1 == q and q2 == q:
            for n, a in enumerate(mq.outcomes):
                if G.predicate(a, a, q, q):
                    hs[n] += wf * np.eye(d)
        elif q1 == q:
            m2 = meas[q2]
            for n, a in enumerate(mq.outcomes):
                for b, pb in zip(m2.outcomes, m2.projectors):
                    if G.predicate(a, b, q, q2):
                        hs[n] += wf * pb
        elif q2 == q:
            m1 = meas[q1]
            for n, a in enumerate(mq.outcomes):
                for b, pb in zip(m1.outcomes, m1.projectors):
                    if G.predicate(b, a, q1, q):
                        hs[n] += wf * pb
    return hs


def _range_basis(r: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((r + r.conj().T) / 2)
    return vecs[:, vals > 0.5]


def _pair_update(pa: np.ndarray, pb: np.ndarray, ha: np.ndarray, hb: np.ndarray):
    """Best split of the projector pa + pb between outcomes a and b."""
    b = _range_basis(pa + pb)
    if b.shape[1] == 0:
        return pa, pb
    k = b.conj().T @ (ha - hb) @ b
    vals, vecs = np.linalg.eigh((k + k.conj().T) / 2)
    keep = vecs[:, vals > 0]
    new_a = b @ keep @ keep.conj().T @ b.conj().T
    new_b = b @ b.conj().T - new_a
    old = float(np.einsum("ij,ji->", pa, ha - hb).real)
    new = float(np.einsum("ij,ji->", new_a, ha - hb).real)
    if new < old:
        return pa, pb
    return new_a, new_b


def seesaw(
    s0: SyncStrategy, G: GameSpec, iters: int = 50, tol: float = 1e-10
) -> SeesawResult:
    """Coordinate ascent: each outcome pair of each measurement is re-split optimally."""
    keys = {q: G.measurement_of[q] for q in G.questions}
    store: dict[tuple[str, Any], np.ndarray] = {}
    outcomes: dict[tuple[str, Any], tuple] = {}
    for q, key in keys.items():
        p = s0.measurement(*key)
        store[key] = p.projectors.copy()
        outcomes[key] = p.outcomes

    def meas() -> dict[Hashable, PVM]:
        return {q: PVM(outcomes[key], store[key]) for q, key in keys.items()}

    history = [_value(meas(), G)]
    for _ in range(iters):
        for q, key in keys.items():
            n = len(outcomes[key])
            for a, b in itertools.combinations(range(n), 2):
                hs = _linear_terms(q, meas(), G)
                pa, pb = _pair_update(store[key][a], store[key][b], hs[a], hs[b])
                store[key][a], store[key][b] = pa, pb
        history.append(_value(meas(), G))
        if history[-1] - history[-2] < tol:
            break
    cp = dict(s0.context_pvms)
    vp = dict(s0.variable_pvms)
    for (kind, k), arr in store.items():
        (cp if kind == "context" else vp)[k] = PVM(outcomes[(kind, k)], arr)
    return SeesawResult(SyncStrategy(s0.model, s0.d, cp, vp), tuple(history))


# ---- identities and inequalities -----------------------------------------------------


def verify_identity_3clique(x: PVM, y: PVM, z: PVM) -> float:
    """|sum_a ||x_a+y_a+z_a-1||^2 - 2 sum_a (||x_a y_a||^2+||y_a z_a||^2+||z_a x_a||^2)|."""
    eye = np.eye(x.d)
    lhs = sum(hsq(x[a] + y[a] + z[a] - eye) for a in range(3))
    rhs = 2 * sum(hsq(x[a] @ y[a]) + hsq(y[a] @ z[a]) + hsq(z[a] @ x[a]) for a in range(3))
    return abs(lhs - rhs)


@dataclass(frozen=True)
class InequalityResult:
    name: str
    lhs: float
    rhs: float
    constant: float
    passed: bool

    @property
    def slack(self) -> float:
        return self.constant * self.rhs - self.lhs


def _result(name: str, lhs: float, rhs: float, c: float, tol: float) -> InequalityResult:
    return InequalityResult(name, lhs, rhs, c, lhs <= c * rhs + tol)


def hermitian_square_constant(k: int) -> int:
    return 2 ** math.ceil(math.log2(k)) if k > 1 else 1


def _ineq_hermitian_square(ops: Sequence[np.ndarray], tol: float) -> InequalityResult:
    lhs = hsq(sum(ops))  # type: ignore[arg-type]
    rhs = sum(hsq(a) for a in ops)
    return _result("hermitian_square", lhs, rhs, hermitian_square_constant(len(ops)), tol)


def _ineq_three_colour(x: PVM, y: PVM, tol: float) -> InequalityResult:
    rhs = sum(hsq(x[c] @ y[c]) for c in range(3))
    lhs = max(hsq(x[a] @ y[b] - y[b] @ x[a]) for a in range(3) for b in range(3))
    return _result("three_colour", lhs, rhs, 16, tol)


def _ineq_basic_gadget(
    s: SyncStrategy, S: ConstraintSystem, pair: tuple[str, str], tol: float
) -> InequalityResult:
    x, y = pair
    sx, sy = s.variable_pvms[x].unitary(), s.variable_pvms[y].unitary()
    lhs = hsq(sx @ sy - sy @ sx)
    eye = np.eye(s.d)
    rhs = 0.0
    for i, c in enumerate(S.constraints):
        pv = s.context_pvms[i]
        for phi, P in zip(pv.outcomes, pv.projectors):
            for p, z in enumerate(c.context):
                rhs += hsq(P @ (eye - s.variable_pvms[z][phi[p]]))
    return _result("basic_gadget", lhs, rhs, 512, tol)


PRISM_EDGES = (
    ("x", "y"), ("y", "z"), ("z", "x"),
    ("x'", "y'"), ("y'", "z'"), ("z'", "x'"),
    ("x", "x'"), ("y", "y'"), ("z", "z'"),
)


def _ineq_prism(pvms: Mapping[str, PVM], tol: float, edges=PRISM_EDGES, pair=("x", "y'")) -> InequalityResult:
    lhs = commutator_sum(pvms[pair[0]], pvms[pair[1]])
    rhs = sum(hsq(pvms[u][c] @ pvms[v][c]) for u, v in edges for c in range(3))
    return _result("prism", lhs, rhs, 6240, tol)


def _ineq_acomm_to_a(
    name: str, s: SyncStrategy, S: ConstraintSystem, pi: Distribution | None, c: float,
    normalization: str, tol: float,
) -> InequalityResult:
    rep = defect(s, S, pi, "a+comm", comm_normalization=normalization)
    return _result(name, rep.total, rep.terms["a"], c, tol)


def verify_inequality(name: str, tol_num: float = TOL_NUM, **kw: Any) -> InequalityResult:
    """Evaluate one trace inequality lhs <= C * rhs on the supplied operators.

    names: hermitian_square(ops), three_colour(x, y), basic_gadget(strategy, system, pair),
    prism(pvms), acomm_to_a_3col(strategy, system, pi, normalization),
    acomm_to_a_tvf(strategy, system, pi).
    """
    if name == "hermitian_square":
        return _ineq_hermitian_square(kw["ops"], tol_num)
    if name == "three_colour":
        return _ineq_three_colour(kw["x"], kw["y"], tol_num)
    if name == "basic_gadget":
        return _ineq_basic_gadget(kw["strategy"], kw["system"], kw.get("pair", ("x", "y")), tol_num)
    if name == "prism":
        return _ineq_prism(kw["pvms"], tol_num)
    if name == "acomm_to_a_3col":
        norm = kw.get("normalization", "per-context")
        c = 145 if norm == "per-context" else 289
        return _ineq_acomm_to_a(name, kw["strategy"], kw["system"], kw.get("pi"), c, norm, tol_num)
    if name == "acomm_to_a_tvf":
        S = kw["system"]
        L = max(c.arity for c in S.constraints)
        return _ineq_acomm_to_a(name, kw["strategy"], S, kw.get("pi"), 16 * L * L + 1, "definition", tol_num)
    raise InputError(f"unknown inequality {name!r}")


INEQUALITIES = ("hermitian_square", "three_colour", "basic_gadget", "prism", "acomm_to_a_3col", "acomm_to_a_tvf")


# ---- C-homomorphism pullbacks --------------------------------------------------------


@dataclass(frozen=True)
class ChomSetup:
    """Source and target of one transform, with the models, distributions and constant."""

    transform: str
    source: ConstraintSystem
    source_pi: Distribution
    source_model: str
    target: ConstraintSystem
    target_pi: Distribution
    target_model: str
    constant: Fraction
    exact: bool
    data: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class ChomResult:
    transform: str
    defect_source: float
    defect_target: float
    constant: Fraction
    passed: bool
    exact: bool


def _zero_pvm(outcomes: Sequence[Any], d: int, blocks: Mapping[Any, np.ndarray]) -> PVM:
    z = np.zeros((d, d), dtype=complex)
    return PVM(tuple(outcomes), np.array([blocks.get(o, z) for o in outcomes]))


def _marginal(p: PVM, pos: int, k: int) -> PVM:
    return _zero_pvm(range(k), p.d, p.coarse(lambda t: t[pos]))


def _restricted(p: PVM, c_small, c_big) -> PVM:
    """P_phi = sum of P'_psi over psi agreeing with phi on c_small's context."""
    pos = [c_big.index(v) for v in c_small.context]
    blocks = p.coarse(lambda t: tuple(t[q] for q in pos))
    return _zero_pvm(c_small.accepted, p.d, blocks)


def _trivial(k: int, d: int) -> PVM:
    return _zero_pvm(range(k), d, {0: np.eye(d, dtype=complex)})


def _max_arity(cs: Iterable) -> int:
    return max((c.arity for c in cs), default=1)


def chom_setup(transform: str, S: ConstraintSystem, pi: Distribution | None = None, **kw: Any) -> ChomSetup:
    """Build the target system of a transform applied to S and record its defect constant."""
    from . import core, gadgets

    if transform == "cv_to_acomm":
        raise PreconditionError("cv_to_acomm has no trace-independent finite-dimensional pullback")
    one = Fraction(1)
    if transform in ("booleanize", "booleanize_inverse"):
        pi2 = _pair_pi(S, pi)
        B = core.boolean_form(S)
        if transform == "booleanize":
            return ChomSetup(transform, S, pi2, "cc", B, pi2, "cc", one, True)
        return ChomSetup(transform, B, pi2, "cc", S, pi2, "cc", one, True)
    if transform == "cc_to_cv":
        pi2 = _pair_pi(S, pi)
        if not pi2.is_symmetric():
            raise PreconditionError("cc_to_cv needs a symmetric pair distribution")
        return ChomSetup(transform, S, pi2, "cc", S, pi2.marginal(), "cv",
                         Fraction(4 * _max_arity(S.constraints)), False)
    if transform == "cv_to_cc":
        pi2 = _pair_pi(S, pi)
        marg = pi2.marginal()
        P = Fraction(0)
        for i, j in itertools.product(range(S.m), repeat=2):
            if not set(S.constraints[i].context) & set(S.constraints[j].context) or not marg[i]:
                continue
            if not pi2[(i, j)]:
                raise PreconditionError(f"pi vanishes on the intersecting pair ({i}, {j})")
            P = max(P, marg[i] / pi2[(i, j)])
        return ChomSetup(transform, S, marg, "cv", S, pi2, "cc", P, False)
    if transform in ("acomm_to_cv", "a_to_acomm"):
        pi1 = _single_pi(S, pi)
        if transform == "acomm_to_cv":
            L = _max_arity(S.constraints)
            return ChomSetup(transform, S, pi1, "a+comm", S, pi1, "cv", Fraction(20 * L * L), False)
        return ChomSetup(transform, S, pi1, "a", S, pi1, "a+comm", one, False)
    if transform in ("replace_empty_nontvf", "replace_empty_nontvf_inverse"):
        pi1 = _single_pi(S, pi)
        S2 = gadgets.replace_empty_nontvf(S, kw.get("witness"), kw.get("pair"))
        replaced = [i for i, c in enumerate(S.constraints) if gadgets._is_empty_pair(c)]
        if not replaced:
            raise PreconditionError("no empty two-variable constraint to replace")
        L = _max_arity(S2.constraints[i] for i in replaced)
        data = {"replaced": replaced}
        if transform == "replace_empty_nontvf":
            return ChomSetup(transform, S, pi1, "cv", S2, pi1, "cv", Fraction(L, 2), False, data)
        return ChomSetup(transform, S2, pi1, "cv", S, pi1, "cv", one, False, data)
    if transform == "the_bends":
        gamma = kw.get("gamma")
        if not gamma:
            raise InputError("the_bends needs the language gamma")
        pi1 = _single_pi(S, pi)
        S2 = gadgets.the_bends(S, gamma)
        return ChomSetup(transform, S, pi1, "cv", S2, pi1, "cv", Fraction(_max_arity(gamma)), False)
    if transform in ("cc_expand", "cc_expand_inverse", "cc_expand_cc"):
        pi1 = _single_pi(S, pi)
        ex = gadgets.cc_expand(S, pi1, kw.get("anchor"))
        data = {"expansion": ex}
        S2 = ex.cs
        if transform == "cc_expand":
            return ChomSetup(transform, S, pi1, "cv", S2, ex.pi_constraints, "cv", Fraction(2), False, data)
        if transform == "cc_expand_inverse":
            return ChomSetup(transform, S2, ex.pi_constraints, "cv", S, pi1, "cv", Fraction(1, 2), False, data)
        return ChomSetup(transform, S2, ex.pi_constraints, "cv", S2, ex.pi_pairs, "cc", Fraction(1, 2), False, data)
    if transform in ("cv_to_2csp", "2csp_to_cv"):
        pi1 = _single_pi(S, pi)
        S2, pi2 = gadgets.cv_to_2csp(S, kw.get("k"), pi1)
        if transform == "cv_to_2csp":
            return ChomSetup(transform, S2, pi2, "a", S, pi1, "cv", one, True)
        return ChomSetup(transform, S, pi1, "cv", S2, pi2, "a", one, True)
    raise InputError(f"unknown transform {transform!r}")


def _one_hot_row(t: tuple[int, ...], k: int) -> tuple[int, ...]:
    return tuple(int(v == a) for v in t for a in range(k))


def _one_hot_decode(row: tuple[int, ...], k: int) -> tuple[int, ...]:
    return tuple(row[n:n + k].index(1) for n in range(0, len(row), k))


def pullback(setup: ChomSetup, s: SyncStrategy) -> SyncStrategy:
    """Apply the transform's operator substitution to a target strategy."""
    t, src, tgt, d = setup.transform, setup.source, setup.target, s.d
    s.check_for(tgt, setup.target_model)
    model = "a" if setup.source_model == "a+comm" else setup.source_model
    ctx: dict[int, PVM] = {}
    var: dict[str, PVM] = {}
    if t in ("booleanize", "booleanize_inverse"):
        k = tgt.k if t == "booleanize_inverse" else src.k
        for i, c in enumerate(src.constraints):
            p = s.context_pvms[i]
            if t == "booleanize":
                blocks = [p[_one_hot_row(o, k)] for o in c.accepted]
            else:
                blocks = [p[_one_hot_decode(o, k)] for o in c.accepted]
            ctx[i] = PVM(c.accepted, np.array(blocks))
    elif t in ("cc_to_cv", "acomm_to_cv", "a_to_acomm"):
        if model != "a":
            ctx = dict(s.context_pvms)
        if model != "cc":
            var = dict(s.variable_pvms)
    elif t == "cv_to_cc":
        ctx = dict(s.context_pvms)
        for x in src.variables:
            first = next((i for i, c in enumerate(src.constraints) if x in c.context), None)
            var[x] = _trivial(src.k, d) if first is None else _marginal(
                s.context_pvms[first], src.constraints[first].index(x), src.k)
    elif t in ("replace_empty_nontvf", "the_bends", "cc_expand"):
        for i, c in enumerate(src.constraints):
            ctx[i] = _restricted(s.context_pvms[i], c, tgt.constraints[i])
        var = {x: s.variable_pvms[x] for x in src.variables}
    elif t == "replace_empty_nontvf_inverse":
        var = {x: s.variable_pvms[x] for x in tgt.variables}
        for i, c in enumerate(src.constraints):
            p = s.context_pvms[i]
            if i not in setup.data["replaced"]:
                ctx[i] = p
                continue
            x, y = tgt.constraints[i].context
            px, py = c.index(x), c.index(y)
            chosen: dict[tuple[int, int], tuple[int, ...]] = {}
            for psi in c.accepted:
                chosen.setdefault((psi[px], psi[py]), psi)
            blocks = {psi: p[ab] for ab, psi in chosen.items()}
            ctx[i] = _zero_pvm(c.accepted, d, blocks)
            for pos, z in enumerate(c.context):
                if z in (x, y):
                    continue
                zb: dict[int, np.ndarray] = {}
                for ab, psi in chosen.items():
                    zb[psi[pos]] = zb[psi[pos]] + p[ab] if psi[pos] in zb else p[ab].copy()
                var[z] = _zero_pvm(range(src.k), d, zb)
    elif t == "cc_expand_inverse":
        ex = setup.data["expansion"]
        var = {x: s.variable_pvms[x] for x in tgt.variables}
        m = tgt.m
        for i in range(m):
            ctx[i] = s.context_pvms[i]
        v0 = ex.free
        pos0 = ex.anchor.index(v0)
        for x, j in ex.anchor_index.items():
            c = src.constraints[j]
            q = s.variable_pvms[x]
            chosen = {}
            for psi in c.accepted:
                chosen.setdefault(psi[pos0], psi)
            ctx[j] = _zero_pvm(c.accepted, d, {psi: q[a] for a, psi in chosen.items()})
            for pos, z in enumerate(c.context):
                if pos == pos0:
                    continue
                zb = {}
                for a, psi in chosen.items():
                    zb[psi[pos]] = zb[psi[pos]] + q[a] if psi[pos] in zb else q[a].copy()
                var[z] = _zero_pvm(range(src.k), d, zb)
    elif t == "cc_expand_cc":
        ex = setup.data["expansion"]
        ctx = dict(s.context_pvms)
        for x, j in ex.anchor_index.items():
            c = src.constraints[j]
            for pos, z in enumerate(c.context):
                var[z] = _marginal(s.context_pvms[j], pos, src.k)
        for x in src.variables:
            var.setdefault(x, _trivial(src.k, d))
    elif t == "cv_to_2csp":
        k = src.k
        for i, c in enumerate(tgt.constraints):
            y = f"cv2.y.{i}"
            p = s.context_pvms[i]
            var[y] = _zero_pvm(range(k), d, {t_.index(1): p[t_] for t_ in c.accepted})
        for x in tgt.variables:
            q = s.variable_pvms[x]
            var[x] = _zero_pvm(range(k), d, {0: q[0], 1: q[1]})
    elif t == "2csp_to_cv":
        for i, c in enumerate(src.constraints):
            qy = s.variable_pvms[f"cv2.y.{i}"]
            ctx[i] = PVM(c.accepted, np.array([qy[t_.index(1)] for t_ in c.accepted]))
        for x in src.variables:
            q = s.variable_pvms[x]
            var[x] = _zero_pvm(range(2), d, {0: q[0], 1: sum(q[a] for a in range(1, tgt.k))})
    else:
        raise InputError(f"no pullback for {t!r}")
    return SyncStrategy(model, d, ctx, var)


def verify_chom(
    transform: str,
    S: ConstraintSystem,
    strategy: SyncStrategy,
    pi: Distribution | None = None,
    tol_num: float = TOL_NUM,
    setup: ChomSetup | None = None,
    **kw: Any,
) -> ChomResult:
    """df_source(pullback) <= C df_target(strategy) + tol_num, or equality for exact transforms."""
    setup = setup if setup is not None else chom_setup(transform, S, pi, **kw)
    src_s = pullback(setup, strategy)
    ds = defect(src_s, setup.source, setup.source_pi, setup.source_model).total
    dt = defect(strategy, setup.target, setup.target_pi, setup.target_model).total
    ok = ds <= float(setup.constant) * dt + tol_num
    if setup.exact:
        ok = ok and abs(ds - dt) <= tol_num
    return ChomResult(transform, ds, dt, setup.constant, bool(ok), setup.exact)


TRANSFORMS = (
    "booleanize", "booleanize_inverse", "cc_to_cv", "cv_to_cc", "acomm_to_cv", "a_to_acomm",
    "replace_empty_nontvf", "replace_empty_nontvf_inverse", "the_bends",
    "cc_expand", "cc_expand_inverse", "cc_expand_cc", "cv_to_2csp", "2csp_to_cv",
)
