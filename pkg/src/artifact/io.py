"""JSON formats for instances, strategies, variable maps and gadget outputs."""

from __future__ import annotations

import json
import re
from fractions import Fraction
from json.decoder import scanstring
from typing import Any, Hashable, Mapping

import numpy as np

from .core import (
    Const,
    Constraint,
    ConstraintSystem,
    Distribution,
    InputError,
    Neg,
    VarMap,
)
from .gadgets import GadgetOutput
from .quantum import PVM, SyncStrategy

__all__ = [
    "ParseError",
    "fraction_to_json",
    "fraction_from_json",
    "distribution_to_json",
    "distribution_from_json",
    "constraint_to_json",
    "constraint_from_json",
    "system_to_json",
    "system_from_json",
    "load_system",
    "varmap_to_json",
    "varmap_from_json",
    "strategy_to_json",
    "strategy_from_json",
    "gadget_to_json",
    "gadget_from_json",
]


class ParseError(InputError):
    """Input error carrying a 1-based line and column in the source text."""

    def __init__(self, msg: str, line: int | None = None, column: int | None = None):
        self.line, self.column = line, column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + msg)


class _Invalid(Exception):
    def __init__(self, msg: str, path: tuple = ()):
        super().__init__(msg)
        self.msg, self.path = msg, path


# ---- positions -----------------------------------------------------------------------

_WS = re.compile(r"[ \t\n\r]*")
_SCALAR = re.compile(r"-?(?:0|[1-9]\d*)(?:\.\d+)?(?:[eE][-+]?\d+)?|true|false|null")


def _positions(text: str) -> dict[tuple, int]:
    """Offset of every value in a JSON document, keyed by its path of keys and indices."""
    out: dict[tuple, int] = {}

    def ws(i: int) -> int:
        return _WS.match(text, i).end()  # type: ignore[union-attr]

    def value(i: int, path: tuple) -> int:
        i = ws(i)
        out[path] = i
        ch = text[i : i + 1]
        if ch == "{":
            i = ws(i + 1)
            if text[i : i + 1] == "}":
                return i + 1
            while True:
                key, i = scanstring(text, ws(i) + 1)
                i = ws(i) + 1  # colon
                i = ws(value(i, path + (key,)))
                if text[i] == "}":
                    return i + 1
                i += 1
        if ch == "[":
            i = ws(i + 1)
            if text[i : i + 1] == "]":
                return i + 1
            n = 0
            while True:
                i = ws(value(i, path + (n,)))
                n += 1
                if text[i] == "]":
                    return i + 1
                i += 1
        if ch == '"':
            return scanstring(text, i + 1)[1]
        m = _SCALAR.match(text, i)
        return m.end() if m else i + 1

    try:
        value(0, ())
    except (IndexError, ValueError):
        pass
    return out


def _line_col(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    return line, offset - (text.rfind("\n", 0, offset) + 1) + 1


def _parse(text: str, build) -> Any:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno, e.colno) from None
    try:
        return build(obj)
    except _Invalid as e:
        pos = _positions(text)
        path = e.path
        while path not in pos and path:
            path = path[:-1]
        line, col = _line_col(text, pos.get(path, 0))
        raise ParseError(e.msg, line, col) from None
    except InputError as e:
        raise ParseError(str(e)) from None


def _fields(obj: Any, path: tuple, required: set[str], optional: set[str] = frozenset()) -> dict:
    if not isinstance(obj, dict):
        raise _Invalid("expected an object", path)
    unknown = set(obj) - required - set(optional)
    if unknown:
        raise _Invalid(f"unknown field {sorted(unknown)[0]!r}", path + (sorted(unknown)[0],))
    missing = required - set(obj)
    if missing:
        raise _Invalid(f"missing field {sorted(missing)[0]!r}", path)
    return obj


def _int(x: Any, path: tuple, what: str = "integer") -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        if isinstance(x, str) and re.fullmatch(r"-?\d+", x):
            return int(x)
        raise _Invalid(f"expected {what}, got {x!r}", path)
    return x


def _list(x: Any, path: tuple) -> list:
    if not isinstance(x, list):
        raise _Invalid("expected an array", path)
    return x


def _str(x: Any, path: tuple) -> str:
    if not isinstance(x, str):
        raise _Invalid(f"expected a name, got {x!r}", path)
    return x


# ---- fractions and distributions -----------------------------------------------------


def fraction_to_json(f: Fraction) -> dict:
    return {"num": f.numerator, "den": f.denominator}


def fraction_from_json(obj: Any, path: tuple = ()) -> Fraction:
    o = _fields(obj, path, {"num", "den"})
    den = _int(o["den"], path + ("den",))
    if den <= 0:
        raise _Invalid("denominator must be positive", path + ("den",))
    return Fraction(_int(o["num"], path + ("num",)), den)


def distribution_to_json(d: Distribution | None) -> dict:
    if d is None:
        return {"kind": "uniform"}
    rows = []
    for key, w in d.items():
        idx = list(key) if isinstance(key, tuple) else [key]
        rows.append(idx + [w.numerator, w.denominator])
    return {"kind": "explicit", "weights": rows}


def distribution_from_json(obj: Any, path: tuple = ()) -> Distribution | None:
    o = _fields(obj, path, {"kind"}, {"weights"})
    if o["kind"] == "uniform":
        if "weights" in o:
            raise _Invalid("a uniform distribution takes no weights", path + ("weights",))
        return None
    if o["kind"] != "explicit":
        raise _Invalid(f"unknown distribution kind {o['kind']!r}", path + ("kind",))
    rows = _list(o.get("weights"), path + ("weights",))
    w: dict[Hashable, Fraction] = {}
    width = None
    for n, row in enumerate(rows):
        p = path + ("weights", n)
        row = _list(row, p)
        if len(row) not in (3, 4) or (width is not None and len(row) != width):
            raise _Invalid("weight rows are [i, num, den] or [i, j, num, den], uniformly", p)
        width = len(row)
        vals = [_int(v, p + (q,)) for q, v in enumerate(row)]
        if vals[-1] <= 0 or vals[-2] < 0:
            raise _Invalid("weights need num >= 0 and den > 0", p)
        key: Hashable = tuple(vals[:2]) if width == 4 else vals[0]
        w[key] = w.get(key, Fraction(0)) + Fraction(vals[-2], vals[-1])
    if sum(w.values(), Fraction(0)) != 1:
        raise _Invalid("weights do not sum to 1", path + ("weights",))
    return Distribution(w)


# ---- constraints and systems ---------------------------------------------------------


def constraint_to_json(c: Constraint) -> dict:
    return {"context": list(c.context), "accepted": [list(t) for t in c.accepted]}


def constraint_from_json(obj: Any, k: int, path: tuple = ()) -> Constraint:
    o = _fields(obj, path, {"context", "accepted"})
    ctx = tuple(_str(v, path + ("context", n)) for n, v in enumerate(_list(o["context"], path + ("context",))))
    if len(set(ctx)) != len(ctx):
        raise _Invalid(f"context repeats a variable: {list(ctx)}", path + ("context",))
    rows = []
    for n, row in enumerate(_list(o["accepted"], path + ("accepted",))):
        p = path + ("accepted", n)
        row = _list(row, p)
        if len(row) != len(ctx):
            raise _Invalid(f"tuple of length {len(row)} in a context of length {len(ctx)}", p)
        vals = tuple(_int(a, p + (q,)) for q, a in enumerate(row))
        if any(a < 0 or a >= k for a in vals):
            raise _Invalid(f"tuple {list(vals)} has entries outside Z_{k}", p)
        rows.append(vals)
    if not rows:
        raise _Invalid("accepted set is empty", path + ("accepted",))
    return Constraint(ctx, tuple(rows), k)


def system_to_json(S: ConstraintSystem) -> dict:
    return {
        "k": S.k,
        "variables": list(S.variables),
        "constraints": [constraint_to_json(c) for c in S.constraints],
        "distribution": distribution_to_json(S.distribution),
    }


def system_from_json(obj: Any) -> ConstraintSystem:
    o = _fields(obj, (), {"k", "constraints"}, {"variables", "distribution"})
    k = _int(o["k"], ("k",))
    if k < 2:
        raise _Invalid("k must be at least 2", ("k",))
    cons = [
        constraint_from_json(c, k, ("constraints", n))
        for n, c in enumerate(_list(o["constraints"], ("constraints",)))
    ]
    variables = None
    if "variables" in o:
        variables = tuple(_str(v, ("variables", n)) for n, v in enumerate(_list(o["variables"], ("variables",))))
        known = set(variables)
        for n, c in enumerate(cons):
            for q, v in enumerate(c.context):
                if v not in known:
                    raise _Invalid(f"unknown variable {v!r}", ("constraints", n, "context", q))
    dist = distribution_from_json(o["distribution"], ("distribution",)) if "distribution" in o else None
    if dist is not None:
        for key in dist:
            idx = key if isinstance(key, tuple) else (key,)
            if any(not 0 <= i < len(cons) for i in idx):
                raise _Invalid(f"weight key {key} is not a constraint index", ("distribution", "weights"))
    return ConstraintSystem.build(cons, variables, dist, k)


def load_system(text: str) -> ConstraintSystem:
    return _parse(text, system_from_json)


# ---- variable maps -------------------------------------------------------------------


def varmap_to_json(r: VarMap) -> dict:
    out: dict[str, Any] = {}
    for v, t in r.targets:
        if isinstance(t, Const):
            out[v] = {"const": t.value}
        elif isinstance(t, Neg):
            out[v] = "!" + t.var
        else:
            out[v] = t
    return {"map": out}


def varmap_from_json(obj: Any) -> VarMap:
    o = _fields(obj, (), {"map"})
    m = o["map"]
    if not isinstance(m, dict):
        raise _Invalid("expected an object", ("map",))
    res: dict[str, Any] = {}
    for v, t in m.items():
        p = ("map", v)
        if isinstance(t, str):
            res[v] = Neg(t[1:]) if t.startswith("!") else t
        else:
            res[v] = Const(_int(_fields(t, p, {"const"})["const"], p + ("const",)))
    return VarMap(res)


def load_varmap(text: str) -> VarMap:
    return _parse(text, varmap_from_json)


# ---- strategies ----------------------------------------------------------------------


def _matrix_to_json(a: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def _matrix_from_json(obj: Any, d: int, path: tuple) -> np.ndarray:
    rows = _list(obj, path)
    if len(rows) != d:
        raise _Invalid(f"expected {d} rows", path)
    out = np.zeros((d, d), dtype=complex)
    for r, row in enumerate(rows):
        row = _list(row, path + (r,))
        if len(row) != d:
            raise _Invalid(f"expected {d} entries", path + (r,))
        for c, z in enumerate(row):
            z = _list(z, path + (r, c))
            if len(z) != 2 or not all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in z):
                raise _Invalid("entries are [re, im] number pairs", path + (r, c))
            out[r, c] = complex(z[0], z[1])
    return out


def strategy_to_json(s: SyncStrategy) -> dict:
    return {
        "model": s.model,
        "d": s.d,
        "context_pvms": [
            [_matrix_to_json(p) for p in s.context_pvms[i].projectors] for i in sorted(s.context_pvms)
        ],
        "variable_pvms": {x: [_matrix_to_json(p) for p in pv.projectors] for x, pv in s.variable_pvms.items()},
    }


def strategy_from_json(obj: Any, S: ConstraintSystem) -> SyncStrategy:
    """Context PVMs list one matrix per accepted tuple in the constraint's order; variables per Z_k."""
    o = _fields(obj, (), {"model", "d"}, {"context_pvms", "variable_pvms"})
    model = o["model"]
    if model not in ("cc", "cv", "a"):
        raise _Invalid(f"unknown model {model!r}", ("model",))
    d = _int(o["d"], ("d",))
    if d < 1:
        raise _Invalid("dimension must be positive", ("d",))
    ctx: dict[int, PVM] = {}
    cl = _list(o.get("context_pvms", []), ("context_pvms",))
    if cl and len(cl) != S.m:
        raise _Invalid(f"expected {S.m} context PVMs", ("context_pvms",))
    for i, mats in enumerate(cl):
        p = ("context_pvms", i)
        mats = _list(mats, p)
        acc = S.constraints[i].accepted
        if len(mats) != len(acc):
            raise _Invalid(f"expected {len(acc)} projectors", p)
        ctx[i] = PVM(acc, np.array([_matrix_from_json(m, d, p + (n,)) for n, m in enumerate(mats)]))
    var: dict[str, PVM] = {}
    vm = o.get("variable_pvms", {})
    if not isinstance(vm, dict):
        raise _Invalid("expected an object", ("variable_pvms",))
    for x, mats in vm.items():
        p = ("variable_pvms", x)
        if x not in S.variables:
            raise _Invalid(f"unknown variable {x!r}", p)
        mats = _list(mats, p)
        if len(mats) != S.k:
            raise _Invalid(f"expected {S.k} projectors", p)
        var[x] = PVM(tuple(range(S.k)), np.array([_matrix_from_json(m, d, p + (n,)) for n, m in enumerate(mats)]))
    return SyncStrategy(model, d, ctx, var)


def load_strategy(text: str, S: ConstraintSystem) -> SyncStrategy:
    return _parse(text, lambda obj: strategy_from_json(obj, S))


# ---- gadget outputs ------------------------------------------------------------------


def gadget_to_json(g: GadgetOutput) -> dict:
    return {
        "cs": system_to_json(g.cs),
        "distinguished": list(g.distinguished),
        "claimed_constant": fraction_to_json(g.claimed_constant),
        "provenance": g.provenance,
        "relation": constraint_to_json(g.relation),
        "notes": _jsonable(g.notes),
    }


def gadget_from_json(obj: Any) -> GadgetOutput:
    o = _fields(obj, (), {"cs", "distinguished", "claimed_constant", "provenance", "relation"}, {"notes"})
    cs = system_from_json(o["cs"])
    dist = tuple(_str(v, ("distinguished", n)) for n, v in enumerate(_list(o["distinguished"], ("distinguished",))))
    rel = constraint_from_json(o["relation"], cs.k, ("relation",))
    notes = o.get("notes", {})
    if not isinstance(notes, dict):
        raise _Invalid("expected an object", ("notes",))
    return GadgetOutput(cs, dist, fraction_from_json(o["claimed_constant"], ("claimed_constant",)),
                        _str(o["provenance"], ("provenance",)), rel, _from_jsonable(notes))


def _jsonable(x: Any) -> Any:
    if isinstance(x, Mapping):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return fraction_to_json(x)
    return x


def _from_jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {k: _from_jsonable(v) for k, v in x.items()}
    if isinstance(x, list):
        return tuple(_from_jsonable(v) for v in x)
    return x
