"""Command-line front end: classify, tvf, gadget, transform, value, verify."""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

import numpy as np

from . import core, gadgets, games, io, quantum, schaefer, tvf
from .core import ArtifactError, InputError, PreconditionError, SearchBoundExceeded

EXIT_PASS, EXIT_FAIL, EXIT_INPUT, EXIT_BOUND = 0, 1, 2, 3


@dataclass
class RunReport:
    command: str
    inputs: dict[str, str]
    outputs: dict[str, Any]
    seed: int
    tolerances: dict[str, float]
    passed: bool = True
    text: list[str] = field(default_factory=list)
    wall_time: float = 0.0

    def body(self) -> dict[str, Any]:
        """The deterministic part of the report."""
        return {
            "command": self.command,
            "inputs": self.inputs,
            "seed": self.seed,
            "tolerances": self.tolerances,
            "passed": self.passed,
            "outputs": _plain(self.outputs),
        }

    def machine(self) -> dict[str, Any]:
        return {"report": self.body(), "wall_time": round(self.wall_time, 6)}

    def render(self, fmt: str) -> str:
        block = json.dumps(self.machine(), indent=2, sort_keys=True)
        if fmt == "json":
            return block + "\n"
        head = [f"{self.command}: {'PASS' if self.passed else 'FAIL'}"] + [f"  {t}" for t in self.text]
        return "\n".join(head) + "\n\n" + block + "\n"


def _plain(x: Any) -> Any:
    """JSON-ready copy: fractions as {num, den}, tuples as lists, numpy scalars as floats."""
    if isinstance(x, Fraction):
        return io.fraction_to_json(x)
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set, frozenset)):
        items = [_plain(v) for v in x]
        return sorted(items, key=repr) if isinstance(x, (set, frozenset)) else items
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, float):
        return float(f"{x:.12g}")
    return x


def _digest(path: str) -> tuple[str, str]:
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None
    return data.decode("utf-8", errors="replace"), hashlib.sha256(data).hexdigest()


class _Ctx:
    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.inputs: dict[str, str] = {}

    def read(self, path: str) -> str:
        text, h = _digest(path)
        self.inputs[os.path.basename(path)] = h
        return text

    def system(self, path: str) -> core.ConstraintSystem:
        return io.load_system(self.read(path))


# ---- classify ------------------------------------------------------------------------


def cmd_classify(ctx: _Ctx) -> tuple[dict, list[str], bool]:
    S = ctx.system(ctx.args.file)
    v = schaefer.classify_boolean(S.constraints)
    ok = v.recheck(list(S.constraints))
    out = {
        "verdict": v.verdict,
        "preserving": list(v.preserving),
        "counterexamples": {n: {"constraint": i, "rows": rows} for n, (i, rows) in v.counterexamples.items()},
        "certificates_recheck": ok,
    }
    text = [f"verdict {v.verdict}", f"preserved by {', '.join(v.preserving) or 'none of 0, 1, AND, OR, MAJ, MIN'}"]
    return out, text, ok


# ---- tvf -----------------------------------------------------------------------------


def _graph_json(g: tvf.TVFGraph) -> dict:
    def und(es):
        return sorted(sorted(e, key=g.vertices.index) for e in es)

    return {
        "vertices": list(g.vertices),
        "e00": und(g.e00),
        "e11": und(g.e11),
        "e01": sorted(list(e) for e in g.e01),
    }


def _tableau_json(t: tvf.Tableau) -> dict:
    return {
        "variable_order": list(t.variable_order),
        "rows": [list(r) for r in t.rows],
        "negated": sorted(t.negated),
        "upper_triangular": t.is_upper_triangular(),
    }


def cmd_tvf(ctx: _Ctx) -> tuple[dict, list[str], bool]:
    S = ctx.system(ctx.args.file)
    n = ctx.args.constraint
    if not 0 <= n < S.m:
        raise InputError(f"constraint index {n} out of range")
    c = S.constraints[n]
    sub = ctx.args.subcommand
    if not tvf.is_tvf(c):
        raise PreconditionError(f"constraint {n} is not TVF")
    g = tvf.tvf_graph(c)
    if sub == "graph":
        closure = tvf.graph_constraint(g).accepted_set
        ok = c.accepted_set <= closure
        out = {"graph": _graph_json(g), "accepted_within_assignments": ok,
               "equals_assignments": closure == c.accepted_set}
        return out, [f"{len(g.e00)} E00, {len(g.e11)} E11, {len(g.e01)} E01 edges"], ok
    if sub == "compress":
        cc = tvf.compress_constraint(c)
        wit = [{"at": w.at, "kind": w.kind, "value": w.value, "to": w.to} for w in cc.witnesses]
        ok = all(w.holds(c.context, c.accepted) for w in cc.witnesses)
        out = {"subset": list(cc.subset), "witnesses": wit, "compressed": io.constraint_to_json(cc.constraint),
               "witnesses_hold": ok}
        return out, [f"compression set {list(cc.subset)}", f"{len(wit)} witnesses"], ok
    if sub == "tableau":
        if not tvf.is_incompressible(g) or not g.is_complete():
            raise PreconditionError("tableau needs an incompressible constraint with a complete TVF graph")
        edges = {"e00": bool(g.e00), "e11": bool(g.e11)}
        if not edges["e00"] and not edges["e11"]:
            t = tvf.tableau_no00(g)
            kind = "no-00-11"
        else:
            _, t = tvf.tableau_negated(g)
            kind = "negated"
        graph = g.negated(t.negated) if t.negated else g
        rows = {t.row_over(i, c.context) for i in range(len(t.rows))}
        rows_ok = rows == set(tvf.assignments(graph))
        ok = t.is_upper_triangular() and rows_ok
        out = {"kind": kind, "tableau": _tableau_json(t), "rows_equal_assignments": rows_ok}
        return out, [f"{kind} tableau, upper triangular {t.is_upper_triangular()}"], ok
    if sub == "simulate":
        sim = tvf.simulate_one_in_three_neg(c) if ctx.args.negation else tvf.simulate_one_in_three(c)
        out = {
            "case": sim.case,
            "map": io.varmap_to_json(sim.map)["map"],
            "aux_vars": list(sim.aux_vars),
            "negation_set": sorted(sim.negation_set),
            "target": io.constraint_to_json(sim.target),
            "verified": sim.verified,
        }
        return out, [f"case {sim.case}", f"target {list(map(list, sim.target.accepted))}",
                     f"verified {sim.verified}"], sim.verified
    raise InputError(f"unknown tvf subcommand {sub!r}")


# ---- gadget --------------------------------------------------------------------------


def _gadget_report(g: gadgets.GadgetOutput, bound: int | None) -> tuple[dict, list[str], bool]:
    cert = gadgets.certify(g, bound if bound is not None else gadgets.CERT_SEARCH_BOUND)
    out = {
        "gadget": io.gadget_to_json(g),
        "certificate": {
            "ok": cert.ok,
            "extends": {"".join(map(str, t)): phi is not None for t, phi in sorted(cert.witnesses.items())},
        },
    }
    text = [f"{g.provenance}: {len(g.cs.variables)} variables, {g.cs.m} constraints",
            f"claimed constant {g.claimed_constant}", f"certificate {'ok' if cert.ok else 'FAILED'}"]
    if "constant_chain" in g.notes:
        text.append("composed 3-colouring constant: unquantified")
    if len(g.cs.variables) <= 20:
        wit = gadgets.extension_witnesses(g)
        out["extension_witnesses"] = {"".join(map(str, t)): [list(r) for r in rows] for t, rows in sorted(wit.items())}
        text.append(f"{sum(len(r) for r in wit.values())} extension witnesses")
    return out, text, cert.ok


def cmd_gadget(ctx: _Ctx) -> tuple[dict, list[str], bool]:
    kind = ctx.args.kind
    if kind == "prism":
        return _gadget_report(gadgets.prism_gadget(), ctx.args.search_bound)
    if kind == "basic":
        base = core.one_in_three()
        if ctx.args.file:
            S = ctx.system(ctx.args.file)
            if S.m != 1:
                raise InputError("the basic gadget takes one base constraint")
            base = S.constraints[0]
        return _gadget_report(gadgets.basic_gadget(base), ctx.args.search_bound)
    if kind == "general":
        if not ctx.args.file:
            raise InputError("the general gadget needs a language file")
        S = ctx.system(ctx.args.file)
        if S.k == 2:
            v = schaefer.classify_boolean(S.constraints)
            if v.verdict != "NP-complete":
                out = {"refused": True, "verdict": v.verdict, "preserving": list(v.preserving)}
                return out, [f"refused: language is in P (preserved by {', '.join(v.preserving)})"], False
        return _gadget_report(gadgets.general_commutativity_gadget(S.constraints), ctx.args.search_bound)
    raise InputError(f"unknown gadget kind {kind!r}")


# ---- transform -----------------------------------------------------------------------


def _sat(S: core.ConstraintSystem, bound: int | None) -> bool:
    return core.is_satisfiable(S, bound)[0]


def _load_decomposition(ctx: _Ctx, S: core.ConstraintSystem) -> list[list[core.Constraint]]:
    text = ctx.read(ctx.args.decomposition)

    def build(obj):
        o = io._fields(obj, (), {"clauses"})
        rows = io._list(o["clauses"], ("clauses",))
        return [
            [io.constraint_from_json(c, S.k, ("clauses", i, n)) for n, c in enumerate(io._list(cl, ("clauses", i)))]
            for i, cl in enumerate(rows)
        ]

    return io._parse(text, build)


def cmd_transform(ctx: _Ctx) -> tuple[dict, list[str], bool]:
    S = ctx.system(ctx.args.file)
    p = ctx.args.pass_
    bound = ctx.args.search_bound
    out: dict[str, Any] = {"pass": p}
    if p == "oracularize":
        G = games.cc_game(S)
        O = gadgets.oracularize(G)
        total = sum(O.distribution.values(), Fraction(0))
        table = [[_plain(q1), _plain(q2), w] for (q1, q2), w in sorted(O.distribution.items(), key=repr)]
        out.update({"questions": len(O.questions), "distribution": table, "sum": total, "sums_to_one": total == 1})
        return out, [f"{len(O.questions)} questions, {len(table)} weighted pairs, sum {total}"], total == 1
    if p == "booleanize":
        T = core.boolean_form(S)
        pi_out = T.distribution
    elif p == "subdivide":
        dec = _load_decomposition(ctx, S) if ctx.args.decomposition else gadgets.pairwise_decomposition(S)
        T, pi_out = gadgets.subdivide(S, dec)
    elif p == "replace-empty":
        variant = ctx.args.variant
        if variant == "auto":
            variant = "prism" if S.k == 3 and gadgets.find_nontvf_witness(
                c for c in S.constraints if not c.is_full()) is None else "nontvf"
        if variant == "prism":
            T, pi_out = gadgets.replace_empty_3col(S)
        else:
            T = gadgets.replace_empty_nontvf(S)
            pi_out = S.constraint_distribution()
        out["variant"] = variant
    elif p == "cv-to-2csp":
        T, pi_out = gadgets.cv_to_2csp(S, ctx.args.k)
    elif p == "cc-expand":
        ex = gadgets.cc_expand(S)
        T, pi_out = ex.cs, ex.pi_constraints
        out["pi_pairs"] = io.distribution_to_json(ex.pi_pairs)
    else:
        raise InputError(f"unknown pass {p!r}")
    s1, s2 = _sat(S, bound), _sat(T, bound)
    out.update({
        "system": io.system_to_json(T.with_distribution(pi_out)),
        "source_satisfiable": s1,
        "target_satisfiable": s2,
        "satisfiability_preserved": s1 == s2,
    })
    text = [f"{T.m} constraints on {len(T.variables)} variables",
            f"satisfiable: source {s1}, target {s2}"]
    return out, text, s1 == s2


# ---- value ---------------------------------------------------------------------------


def _game(S: core.ConstraintSystem, kind: str) -> games.GameSpec:
    if kind == "cc":
        return games.cc_game(S)
    if kind == "cv":
        return games.cv_game(S, symmetrize=True)
    if kind == "2cs":
        return games.twocs_game(S)
    raise InputError(f"unknown game {kind!r}")


_GAME_MODEL = {"cc": "cc", "cv": "cv", "2cs": "a"}


def cmd_value(ctx: _Ctx) -> tuple[dict, list[str], bool]:
    a = ctx.args
    S = ctx.system(a.file)
    G = _game(S, a.game)
    model = _GAME_MODEL[a.game]
    out: dict[str, Any] = {"game": a.game}
    text: list[str] = []
    ok = True
    if a.mode == "classical":
        v = games.classical_value(G, synchronous=a.synchronous, search_bound=a.search_bound)
        out["classical_value"] = v
        out["synchronous"] = a.synchronous
        text.append(f"classical {'synchronous ' if a.synchronous else ''}value {v}")
    elif a.mode == "strategy":
        if not a.strategy:
            raise InputError("--strategy is required")
        s = io.load_strategy(ctx.read(a.strategy), S)
        diag = quantum.validate(s, a.tol_proj)
        if not diag.ok:
            out["validation_failures"] = list(diag.failures)
            return out, [f"strategy invalid: {', '.join(diag.failures)}"], False
        val = quantum.winning_probability(s, G)
        df = quantum.defect(s, S, G.distribution if a.game == "cc" else None, model).total
        out.update({"value": val, "defect": df})
        text.append(f"value {val:.9f}, defect {df:.9f}")
    elif a.mode == "random":
        rows = []
        for t in range(a.trials):
            d = 1 + t % a.max_dim
            s = quantum.random_strategy(model, S, d, a.seed + t)
            val = quantum.winning_probability(s, G)
            rows.append({"seed": a.seed + t, "d": d, "value": val})
        best = max(r["value"] for r in rows) if rows else None
        out.update({"samples": rows, "best": best})
        text.append(f"{len(rows)} random strategies, best value {best}")
    elif a.mode == "seesaw":
        s0 = quantum.random_strategy(model, S, a.max_dim, a.seed)
        res = quantum.seesaw(s0, G, iters=a.iters)
        hist = list(res.history)
        mono = all(y >= x - a.tol_num for x, y in zip(hist, hist[1:]))
        ok = mono
        out.update({"history": hist, "value": res.value, "monotone": mono})
        text.append(f"seesaw d={a.max_dim}: {hist[0]:.6f} -> {res.value:.9f} over {len(hist) - 1} steps")
    else:
        raise InputError(f"unknown mode {a.mode!r}")
    return out, text, ok


# ---- verify --------------------------------------------------------------------------


def _triangle() -> core.ConstraintSystem:
    return core.ConstraintSystem.build([core.neq(3, e) for e in (("a", "b"), ("b", "c"), ("a", "c"))])


def _verify_identities(a) -> tuple[dict, list[str], bool]:
    rng = np.random.default_rng(a.seed)
    res = []
    for _ in range(a.trials):
        d = int(rng.integers(2, a.max_dim + 1))
        x, y, z = (quantum.random_pvm(range(3), d, rng) for _ in range(3))
        res.append(quantum.verify_identity_3clique(x, y, z))
    worst = max(res) if res else 0.0
    ok = worst <= 1e-9
    return {"residuals": res, "max_residual": worst}, [f"{len(res)} triples, max residual {worst:.3e}"], ok


def _inequality_samples(name: str, rng: np.random.Generator, d: int, tol: float) -> quantum.InequalityResult:
    if name == "hermitian_square":
        k = int(rng.integers(1, 9))
        ops = []
        for _ in range(k):
            m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            ops.append((m + m.conj().T) / 2)
        return quantum.verify_inequality(name, tol, ops=ops)
    if name == "three_colour":
        x, y = (quantum.random_pvm(range(3), d, rng) for _ in range(2))
        return quantum.verify_inequality(name, tol, x=x, y=y)
    if name == "basic_gadget":
        g = gadgets.basic_gadget()
        s = quantum.random_strategy("cv", g.cs, d, int(rng.integers(1 << 31)))
        return quantum.verify_inequality(name, tol, strategy=s, system=g.cs)
    if name == "prism":
        pvms = {v: quantum.random_pvm(range(3), d, rng) for v in gadgets.PRISM_VARS}
        return quantum.verify_inequality(name, tol, pvms=pvms)
    if name == "acomm_to_a_3col":
        S = _triangle()
        s = quantum.random_strategy("a", S, d, int(rng.integers(1 << 31)))
        return quantum.verify_inequality(name, tol, strategy=s, system=S)
    if name == "acomm_to_a_tvf":
        S = core.ConstraintSystem.build([core.one_in_three(("a", "b", "c")), core.one_in_three(("c", "d", "e"))])
        s = quantum.random_strategy("a", S, d, int(rng.integers(1 << 31)))
        return quantum.verify_inequality(name, tol, strategy=s, system=S)
    raise InputError(f"unknown inequality {name!r}")


def _verify_inequalities(a) -> tuple[dict, list[str], bool]:
    out: dict[str, Any] = {}
    text = []
    ok = True
    for name in quantum.INEQUALITIES:
        rng = np.random.default_rng(a.seed)
        worst = None
        fails = 0
        for t in range(a.trials):
            d = 1 + t % a.max_dim
            r = _inequality_samples(name, rng, d, a.tol_num)
            fails += not r.passed
            worst = r.slack if worst is None else min(worst, r.slack)
        out[name] = {"trials": a.trials, "failures": fails, "min_slack": worst}
        ok &= fails == 0
        text.append(f"{name}: {a.trials - fails}/{a.trials} pass, min slack {worst}")
    return out, text, ok


def _chom_instances() -> dict[str, tuple[core.ConstraintSystem, dict]]:
    one3 = core.one_in_three
    B1 = core.ConstraintSystem.build([one3(("a", "b", "c")), one3(("c", "d", "e")), one3(("e", "a", "f"))])
    nt = core.Constraint(("a", "b", "c"), ((0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0), (1, 1, 1)), 2)
    B2 = core.ConstraintSystem.build([nt, one3(("c", "d", "e")), core.full(2, ("a", "d"))])
    K3 = core.ConstraintSystem.build([
        core.neq(3, ("a", "b")), core.neq(3, ("b", "c")),
        core.Constraint(("a", "c", "d"), tuple(t for t in np.ndindex(3, 3, 3) if sum(t) % 3 == 0), 3),
    ])
    gam = [core.Constraint(("p", "q", "r", "s"), ((1, 0, 0, 1), (0, 1, 0, 0), (0, 0, 1, 0)), 2)]
    c0 = tvf.compress_constraint(gam[0]).constraint
    Sb = core.ConstraintSystem.build([c0.renamed(dict(zip(c0.context, ("a", "b", "c")))),
                                      c0.renamed(dict(zip(c0.context, ("c", "d", "e"))))])
    inst = {t: (B1, {}) for t in quantum.TRANSFORMS}
    for t in ("booleanize", "booleanize_inverse", "cc_to_cv", "cv_to_cc"):
        inst[t] = (K3, {})
    for t in ("replace_empty_nontvf", "replace_empty_nontvf_inverse"):
        inst[t] = (B2, {})
    inst["the_bends"] = (Sb, {"gamma": gam})
    return inst


def _verify_chom(a) -> tuple[dict, list[str], bool]:
    wanted = a.transforms.split(",") if a.transforms else list(quantum.TRANSFORMS)
    inst = _chom_instances()
    out: dict[str, Any] = {}
    text = []
    ok = True
    for t in wanted:
        if t not in inst:
            raise InputError(f"unknown transform {t!r}")
        S, kw = inst[t]
        setup = quantum.chom_setup(t, S, **kw)
        model = "a" if setup.target_model == "a+comm" else setup.target_model
        fails = 0
        worst = 0.0
        for n in range(a.trials):
            s = quantum.random_strategy(model, setup.target, 1 + n % a.max_dim, a.seed + n)
            r = quantum.verify_chom(t, S, s, tol_num=a.tol_num, setup=setup)
            fails += not r.passed
            if setup.exact:
                worst = max(worst, abs(r.defect_source - r.defect_target))
            elif r.defect_target > 0:
                worst = max(worst, r.defect_source / r.defect_target)
        out[t] = {"constant": setup.constant, "exact": setup.exact, "trials": a.trials, "failures": fails,
                  ("max_abs_difference" if setup.exact else "max_ratio"): worst}
        ok &= fails == 0
        text.append(f"{t}: C={setup.constant}{' (exact)' if setup.exact else ''}, "
                    f"{a.trials - fails}/{a.trials} pass")
    return out, text, ok


def cmd_verify(ctx: _Ctx) -> tuple[dict, list[str], bool]:
    suite = ctx.args.suite
    if suite == "identities":
        return _verify_identities(ctx.args)
    if suite == "inequalities":
        return _verify_inequalities(ctx.args)
    if suite == "chom":
        return _verify_chom(ctx.args)
    raise InputError(f"unknown suite {suite!r}")


# ---- entry point ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol-proj", type=float, default=quantum.TOL_PROJ)
    common.add_argument("--tol-num", type=float, default=quantum.TOL_NUM)
    common.add_argument("--max-dim", type=int, default=4)
    common.add_argument("--search-bound", type=int, default=None)
    common.add_argument("--trials", type=int, default=20)
    common.add_argument("--out", default=None, help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "text"), default="text")

    p = argparse.ArgumentParser(prog="artifact", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", parents=[common], help="Schaefer verdict for a boolean language")
    c.add_argument("file")

    c = sub.add_parser("tvf", parents=[common], help="TVF graph, compression, tableau or simulation")
    c.add_argument("file")
    c.add_argument("subcommand", choices=("graph", "compress", "tableau", "simulate"))
    c.add_argument("--constraint", type=int, default=0)
    c.add_argument("--negation", action="store_true", help="simulate 1-in-3 with negation")

    c = sub.add_parser("gadget", parents=[common], help="emit a gadget and its certificate")
    c.add_argument("kind", choices=("basic", "general", "prism"))
    c.add_argument("file", nargs="?")

    c = sub.add_parser("transform", parents=[common], help="apply a reduction pass")
    c.add_argument("file")
    c.add_argument("pass_", metavar="pass",
                   choices=("booleanize", "subdivide", "oracularize", "replace-empty", "cv-to-2csp", "cc-expand"))
    c.add_argument("--decomposition", default=None)
    c.add_argument("--variant", choices=("auto", "nontvf", "prism"), default="auto")
    c.add_argument("--k", type=int, default=None)

    c = sub.add_parser("value", parents=[common], help="classical or quantum values")
    c.add_argument("file")
    c.add_argument("--game", choices=("cc", "cv", "2cs"), default="cc")
    c.add_argument("--mode", choices=("classical", "strategy", "random", "seesaw"), default="classical")
    c.add_argument("--synchronous", action="store_true")
    c.add_argument("--strategy", default=None)
    c.add_argument("--iters", type=int, default=50)

    c = sub.add_parser("verify", parents=[common], help="numerical identity, inequality and pullback suites")
    c.add_argument("suite", choices=("identities", "inequalities", "chom"))
    c.add_argument("--transforms", default=None, help="comma-separated subset for the chom suite")
    return p


COMMANDS: dict[str, Callable[[_Ctx], tuple[dict, list[str], bool]]] = {
    "classify": cmd_classify,
    "tvf": cmd_tvf,
    "gadget": cmd_gadget,
    "transform": cmd_transform,
    "value": cmd_value,
    "verify": cmd_verify,
}


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".artifact-")
    with os.fdopen(fd, "w") as f:
        f.write(text)
    os.replace(tmp, path)


def run(argv: Sequence[str] | None = None) -> tuple[int, RunReport]:
    args = build_parser().parse_args(argv)
    ctx = _Ctx(args)
    tol = {"tol_proj": args.tol_proj, "tol_num": args.tol_num}
    t0 = time.perf_counter()
    rep = RunReport(args.command, ctx.inputs, {}, args.seed, tol)
    code = EXIT_PASS
    try:
        out, text, ok = COMMANDS[args.command](ctx)
        rep.outputs, rep.text, rep.passed = out, text, ok
        code = EXIT_PASS if ok else EXIT_FAIL
    except SearchBoundExceeded as e:
        rep.outputs, rep.text, rep.passed = {"error": "resource", "message": str(e)}, [f"error: {e}"], False
        code = EXIT_BOUND
    except io.ParseError as e:
        rep.outputs = {"error": "parse", "message": str(e), "line": e.line, "column": e.column}
        rep.text, rep.passed = [f"parse error: {e}"], False
        code = EXIT_INPUT
    except (InputError, PreconditionError) as e:
        rep.outputs, rep.text, rep.passed = {"error": "input", "message": str(e)}, [f"error: {e}"], False
        code = EXIT_INPUT
    except ArtifactError as e:
        rep.outputs, rep.text, rep.passed = {"error": "check", "message": str(e)}, [f"check failed: {e}"], False
        code = EXIT_FAIL
    rep.inputs = ctx.inputs
    rep.wall_time = time.perf_counter() - t0
    _emit(rep.render(args.format), args.out)
    return code, rep


def main(argv: Sequence[str] | None = None) -> int:
    return run(argv)[0]


if __name__ == "__main__":
    sys.exit(main())
