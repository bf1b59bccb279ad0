"""Linear constraints over exponents of a parameterized pseudo-term.

Boxing constraints express the bracketing and scope conditions, typing
constraints express the typing condition; together they characterize the
instantiations that yield typable pseudo-terms.  All constraints are
homogeneous except the contraction ones, which read ``m - 1 >= 0``.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

from .decoration import Exp, PArrow, PAtom, assignment_params
from .lambda_core import Abs, App, Var

__all__ = [
    "LinExpr", "Constraint", "ConstraintSet", "ORIGINS", "param_key",
    "param_word", "boxing_constraints", "unification_constraints",
    "extend_param_assignment", "typing_constraints", "all_constraints",
    "occurrence_objective", "extend_instantiation",
]

ORIGINS = (
    "bracket-prefix", "bracket-free", "scope-prefix", "scope-sum",
    "abstraction", "application-unif", "application-zero", "bang-sum",
    "bang-nonneg", "contraction", "types",
)

_KEY = re.compile(r"([^\d]*)(\d*)")


def param_key(name: str):
    """Sort ``m2`` before ``m10``."""
    m = _KEY.fullmatch(name)
    if m is None or not m.group(2):
        return (name, -1)
    return (m.group(1), int(m.group(2)))


class LinExpr:
    """``Σ coeff·param + const`` in canonical form (no zero coefficients)."""

    __slots__ = ("terms", "const", "_hash")

    def __init__(self, terms: Mapping[str, object] | Iterable = (), const=0,
                 *, _sorted: bool = False):
        if _sorted:
            self.terms = tuple(terms)
        else:
            items = terms.items() if isinstance(terms, Mapping) else terms
            acc: dict[str, object] = {}
            for p, c in items:
                acc[p] = acc.get(p, 0) + c
            self.terms = tuple(sorted(((p, c) for p, c in acc.items() if c != 0),
                                      key=lambda pc: param_key(pc[0])))
        self.const = const
        self._hash = None

    @classmethod
    def var(cls, p: str, coeff=1) -> LinExpr:
        return cls(((p, coeff),), _sorted=True)

    @classmethod
    def chain(cls, params: Iterable[str]) -> LinExpr:
        """Sum of distinct parameters, each with coefficient 1."""
        return cls(((p, 1) for p in params))

    def coeffs(self) -> dict[str, object]:
        return dict(self.terms)

    def params(self) -> list[str]:
        return [p for p, _ in self.terms]

    def is_constant(self) -> bool:
        return not self.terms

    def __add__(self, other) -> LinExpr:
        if not isinstance(other, LinExpr):
            return LinExpr(self.terms, self.const + other, _sorted=True)
        return LinExpr(itertools.chain(self.terms, other.terms), self.const + other.const)

    __radd__ = __add__

    def __neg__(self) -> LinExpr:
        return LinExpr(((p, -c) for p, c in self.terms), -self.const, _sorted=True)

    def __sub__(self, other) -> LinExpr:
        return self + (-other if isinstance(other, LinExpr) else -other)

    def scale(self, k) -> LinExpr:
        if k == 0:
            return LinExpr()
        return LinExpr(((p, c * k) for p, c in self.terms), self.const * k, _sorted=True)

    def evaluate(self, phi: Mapping[str, object]):
        total = self.const
        for p, c in self.terms:
            total += c * phi[p]
        return total

    def _key(self):
        return (self.terms, self.const)

    def __eq__(self, other) -> bool:
        return isinstance(other, LinExpr) and self._key() == other._key()

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self._key())
        return self._hash

    def __repr__(self) -> str:
        return f"LinExpr({self})"

    def __str__(self) -> str:
        parts = []
        for p, c in self.terms:
            mag = abs(c)
            name = p if mag == 1 else f"{mag}·{p}"
            parts.append(("- " if c < 0 else "+ ") + name)
        if self.const or not parts:
            parts.append(("- " if self.const < 0 else "+ ") + str(abs(self.const)))
        s = " ".join(parts)
        return s[2:] if s.startswith("+ ") else "-" + s[2:]


@dataclass(frozen=True)
class Constraint:
    """``expr = 0`` or ``expr >= 0``, tagged with where it came from."""

    expr: LinExpr
    rel: str
    origin: str
    path: tuple = ()

    def key(self):
        return (self.expr, self.rel)

    def holds(self, phi: Mapping[str, object]) -> bool:
        v = self.expr.evaluate(phi)
        return v == 0 if self.rel == "=" else v >= 0

    def __str__(self) -> str:
        lhs = LinExpr(self.expr.terms, _sorted=True)
        rhs = -self.expr.const
        op = "=" if self.rel == "=" else ">="
        return f"{lhs} {op} {rhs}"

    def to_json(self) -> dict:
        return {
            "lhs": {p: _num(c) for p, c in self.expr.terms},
            "const": _num(self.expr.const),
            "rel": self.rel,
            "origin": self.origin,
            "path": list(self.path),
        }


def _num(x):
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else str(x)
    return x


class ConstraintSet:
    """Ordered, deduplicated conjunction of constraints.

    ``ConstraintSet.false(reason)`` is the unsolvable system.  An optional
    ``objective`` (a :class:`LinExpr` to minimize) travels with the set so
    that solvers can prefer minimal decorations.
    """

    def __init__(self, constraints: Iterable[Constraint] = (), objective: LinExpr | None = None):
        self._items: list[Constraint] = []
        self._seen: set = set()
        self.unsatisfiable = False
        self.reason = ""
        self.objective = objective
        for c in constraints:
            self.add(c)

    @classmethod
    def false(cls, reason: str) -> ConstraintSet:
        cs = cls()
        cs.unsatisfiable = True
        cs.reason = reason
        return cs

    def add(self, c: Constraint) -> None:
        if self.unsatisfiable:
            return
        if c.expr.is_constant():
            ok = c.expr.const == 0 if c.rel == "=" else c.expr.const >= 0
            if not ok:
                self._items.clear()
                self._seen.clear()
                self.unsatisfiable = True
                self.reason = f"constant constraint {c} ({c.origin})"
            return
        k = c.key()
        if k not in self._seen:
            self._seen.add(k)
            self._items.append(c)

    def extend(self, cs: Iterable[Constraint]) -> None:
        if isinstance(cs, ConstraintSet) and cs.unsatisfiable:
            self.mark_false(cs.reason)
            return
        for c in cs:
            self.add(c)

    def mark_false(self, reason: str) -> None:
        if not self.unsatisfiable:
            self._items.clear()
            self._seen.clear()
            self.unsatisfiable = True
            self.reason = reason

    def union(self, other: ConstraintSet) -> ConstraintSet:
        out = ConstraintSet(objective=self.objective or other.objective)
        for part in (self, other):
            if part.unsatisfiable:
                return ConstraintSet.false(part.reason)
            out.extend(part)
        return out

    def __iter__(self) -> Iterator[Constraint]:
        return iter(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __getitem__(self, i) -> Constraint:
        return self._items[i]

    def __contains__(self, c: Constraint) -> bool:
        return c.key() in self._seen

    def keys(self) -> list:
        return [c.key() for c in self._items]

    def params(self) -> list[str]:
        seen: dict[str, None] = {}
        for c in self._items:
            for p in c.expr.params():
                seen.setdefault(p)
        if self.objective is not None:
            for p in self.objective.params():
                seen.setdefault(p)
        return list(seen)

    def by_origin(self, *origins: str) -> list[Constraint]:
        return [c for c in self._items if c.origin in origins]

    def violations(self, phi: Mapping[str, object]) -> list[Constraint]:
        return [c for c in self._items if not c.holds(phi)]

    def satisfied_by(self, phi: Mapping[str, object]) -> bool:
        if self.unsatisfiable:
            return False
        return all(c.holds(phi) for c in self._items)

    # -- serialization ----------------------------------------------------

    def to_json(self) -> dict:
        if self.unsatisfiable:
            return {"unsatisfiable": True, "reason": self.reason, "constraints": []}
        out = {"unsatisfiable": False, "constraints": [c.to_json() for c in self._items]}
        if self.objective is not None:
            out["objective"] = {p: _num(c) for p, c in self.objective.terms}
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), ensure_ascii=False)

    @classmethod
    def from_json(cls, data: Mapping) -> ConstraintSet:
        if data.get("unsatisfiable"):
            return cls.false(data.get("reason", ""))

        def num(v):
            return Fraction(v) if isinstance(v, str) else v

        cs = cls()
        for item in data["constraints"]:
            expr = LinExpr({p: num(c) for p, c in item["lhs"].items()}, num(item["const"]))
            cs.add(Constraint(expr, item["rel"], item["origin"], tuple(item["path"])))
        if "objective" in data:
            cs.objective = LinExpr({p: num(c) for p, c in data["objective"].items()})
        return cs

    def listing(self) -> str:
        """One constraint per line, numbered, with its origin."""
        if self.unsatisfiable:
            return f"false   ({self.reason})"
        rows = [(str(c), c.origin) for c in self._items]
        width = max((len(r) for r, _ in rows), default=0)
        return "\n".join(f"{r:<{width}}   ({i})  {o}"
                         for i, (r, o) in enumerate(rows, 1))

    def to_lp(self) -> str:
        """CPLEX LP text; every variable is declared free."""
        def fmt(terms):
            out = []
            for p, c in terms:
                sign = "-" if c < 0 else "+"
                mag = abs(c)
                out.append(f"{sign} {p}" if mag == 1 else f"{sign} {mag} {p}")
            s = " ".join(out) or "0"
            return s[2:] if s.startswith("+ ") else s

        lines = ["\\ ealint constraint system", "Minimize"]
        obj = self.objective.terms if self.objective is not None else ()
        lines.append(f" obj: {fmt(obj) if obj else '0 ' + (self.params() or ['x'])[0]}")
        lines.append("Subject To")
        if self.unsatisfiable:
            lines.append(" false: 0 x >= 1")
        for i, c in enumerate(self._items, 1):
            op = "=" if c.rel == "=" else ">="
            lines.append(f" c{i}: {fmt(c.expr.terms)} {op} {_num(-c.expr.const)}")
        lines.append("Bounds")
        for p in self.params() or ["x"]:
            lines.append(f" {p} free")
        lines.append("End")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# Boxing constraints


def _exp_walk(t):
    """Occurrences with the exponents above them and binder positions."""
    stack = [(t, (), (), {})]
    while stack:
        node, path, params, binders = stack.pop()
        if isinstance(node, Exp):
            stack.append((node.body, path + (0,), params + (node.param,), binders))
        elif isinstance(node, Var):
            yield node.name, path, params, binders
        elif isinstance(node, Abs):
            inner = {**binders, node.binder: len(params)}
            stack.append((node.body, path + (0,), params, inner))
        else:
            stack.append((node.arg, path + (1,), params, binders))
            stack.append((node.fun, path + (0,), params, binders))


def param_word(t, occ: tuple[int, ...]) -> list[str]:
    """Exponents met on the way from the root to the occurrence at ``occ``."""
    out = []
    node = t
    for i in occ:
        if isinstance(node, Exp):
            out.append(node.param)
        kids = node.children()
        if not 0 <= i < len(kids):
            raise IndexError(f"invalid occurrence path {occ!r}")
        node = kids[i]
    if not isinstance(node, Var):
        raise IndexError(f"path {occ!r} does not address a variable")
    return out


def boxing_constraints(t) -> ConstraintSet:
    """Bracketing constraints for every occurrence, then scope constraints
    for every binder (binders in pre-order)."""
    cs = ConstraintSet()
    sorted_ok = _params_sorted(t)
    occ = list(_exp_walk(t))

    # A prefix ending at a given exponent is shared by every occurrence
    # below it, so each is built once, keyed by its first and last exponent.
    built: dict[tuple, tuple] = {}

    def prefixes(params, origin, path):
        terms: tuple = ()
        for p in params:
            key = (params[0], p)
            cached = built.get(key)
            if cached is None:
                cached = terms + ((p, 1),)
                built[key] = cached
                expr = LinExpr(cached, _sorted=True) if sorted_ok else LinExpr(cached)
                cs.add(Constraint(expr, ">=", origin, path))
            terms = cached
        if sorted_ok:
            return LinExpr(terms, _sorted=True)
        return LinExpr(terms)

    for name, path, params, binders in occ:
        full = prefixes(params, "bracket-prefix", path)
        if name not in binders:
            cs.add(Constraint(full, "=", "bracket-free", path))

    scope: dict[str, list] = {}
    for name, path, params, binders in occ:
        if name in binders:
            scope.setdefault(name, []).append((path, params[binders[name]:]))
    for binder in _binders_preorder(t):
        for path, params in scope.get(binder, ()):
            full = prefixes(params, "scope-prefix", path)
            if params:
                cs.add(Constraint(full, "=", "scope-sum", path))
    return cs


def _binders_preorder(t) -> list[str]:
    out = []
    stack = [t]
    while stack:
        node = stack.pop()
        if isinstance(node, Abs):
            out.append(node.binder)
        stack.extend(reversed(node.children()))
    return out


def _params_sorted(t) -> bool:
    """True when exponents increase along every root-to-leaf path."""
    stack = [(t, None)]
    while stack:
        node, last = stack.pop()
        if isinstance(node, Exp):
            k = param_key(node.param)
            if last is not None and k <= last:
                return False
            last = k
        stack.extend((c, last) for c in node.children())
    return True


# ---------------------------------------------------------------------------
# Typing constraints


def unification_constraints(a, b, path=()) -> ConstraintSet:
    cs = ConstraintSet()
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        if isinstance(x, PAtom) and isinstance(y, PAtom) and x.name == y.name:
            cs.add(Constraint(LinExpr({x.param: 1, y.param: -1}), "=", "application-unif", path))
        elif isinstance(x, PArrow) and isinstance(y, PArrow):
            cs.add(Constraint(LinExpr({x.param: 1, y.param: -1}), "=", "application-unif", path))
            stack.append((x.cod, y.cod))
            stack.append((x.dom, y.dom))
        else:
            return ConstraintSet.false(f"cannot unify {x} with {y}")
    return cs


def _retop(ty, param):
    if isinstance(ty, PArrow):
        return PArrow(param, ty.dom, ty.cod)
    return PAtom(param, ty.name)


def extend_param_assignment(sigma: Mapping, t, fresh: Iterator[str] | None = None):
    """Give every subterm a parameterized type.

    Returns ``(types, side)`` where ``types`` maps subterm paths to types
    (missing from the first failing application onwards) and ``side``
    holds the bang and abstraction constraints introduced on the way.
    Fresh exponents are named ``q1, q2, ...`` in post-order.
    """
    names = fresh if fresh is not None else (f"q{k}" for k in itertools.count(1))
    types: dict[tuple, object] = {}
    side = ConstraintSet()
    failure: list[str] = []

    def go(node, path):
        if isinstance(node, Var):
            if node.name not in sigma:
                failure.append(f"no type for variable {node.name}")
                return None
            ty = sigma[node.name]
        elif isinstance(node, Exp):
            inner = go(node.body, path + (0,))
            if inner is None:
                return None
            q = next(names)
            side.add(Constraint(LinExpr({q: 1, inner.param: -1, node.param: -1}), "=",
                                "bang-sum", path))
            side.add(Constraint(LinExpr.var(q), ">=", "bang-nonneg", path))
            ty = _retop(inner, q)
        elif isinstance(node, Abs):
            body = go(node.body, path + (0,))
            if body is None:
                return None
            if node.binder not in sigma:
                failure.append(f"no type for variable {node.binder}")
                return None
            q = next(names)
            side.add(Constraint(LinExpr.var(q), "=", "abstraction", path))
            ty = PArrow(q, sigma[node.binder], body)
        else:
            fun = go(node.fun, path + (0,))
            if fun is None:
                return None
            arg = go(node.arg, path + (1,))
            if arg is None:
                return None
            if not isinstance(fun, PArrow):
                failure.append(f"function part at {path} has atomic type {fun}")
                return None
            ty = fun.cod
        types[path] = ty
        return ty

    go(t, ())
    if failure:
        side.mark_false(failure[0])
    return types, side


def typing_constraints(t, sigma: Mapping, fresh: Iterator[str] | None = None) -> ConstraintSet:
    types, side = extend_param_assignment(sigma, t, fresh)
    if side.unsatisfiable:
        return side
    cs = ConstraintSet()
    # Post-order, interleaving the extension side constraints with the
    # application ones as they arise.
    side_by_path: dict[tuple, list[Constraint]] = {}
    for c in side:
        side_by_path.setdefault(c.path, []).append(c)
    stack = [(t, (), False)]
    while stack:
        node, path, visited = stack.pop()
        if not visited:
            stack.append((node, path, True))
            kids = node.children()
            for i in range(len(kids) - 1, -1, -1):
                stack.append((kids[i], path + (i,), False))
            continue
        for c in side_by_path.get(path, ()):
            cs.add(c)
        if isinstance(node, App):
            fun = types[path + (0,)]
            arg = types[path + (1,)]
            cs.add(Constraint(LinExpr.var(fun.param), "=", "application-zero", path))
            u = unification_constraints(fun.dom, arg, path)
            if u.unsatisfiable:
                return ConstraintSet.false(u.reason)
            cs.extend(u)
    counts: dict[str, int] = {}
    first: dict[str, tuple] = {}
    for name, path, _, _ in _exp_walk(t):
        counts[name] = counts.get(name, 0) + 1
        first.setdefault(name, path)
    for name, n in counts.items():
        if n >= 2:
            cs.add(Constraint(LinExpr({sigma[name].param: 1}, -1), ">=", "contraction",
                              first[name]))
    for p in assignment_params(sigma):
        cs.add(Constraint(LinExpr.var(p), ">=", "types"))
    return cs


def occurrence_objective(t, sigma: Mapping) -> LinExpr:
    """Total type exponents plus total door depth at occurrences."""
    acc: dict[str, int] = {}
    for _, _, params, _ in _exp_walk(t):
        for p in params:
            acc[p] = acc.get(p, 0) + 1
    for p in assignment_params(sigma):
        acc[p] = acc.get(p, 0) + 1
    return LinExpr(acc)


def all_constraints(t, sigma: Mapping) -> ConstraintSet:
    box = boxing_constraints(t)
    typ = typing_constraints(t, sigma)
    if typ.unsatisfiable:
        return ConstraintSet.false(typ.reason)
    out = box.union(typ)
    out.objective = occurrence_objective(t, sigma)
    return out


def extend_instantiation(phi: Mapping[str, object], cs: ConstraintSet) -> dict:
    """Fill in parameters forced by equations with a single unknown.

    Used to recover the values of the fresh extension exponents from an
    instantiation of the term and type exponents.
    """
    out = dict(phi)
    pending = [c for c in cs if c.rel == "="]
    changed = True
    while changed:
        changed = False
        rest = []
        for c in pending:
            unknown = [(p, k) for p, k in c.expr.terms if p not in out]
            if len(unknown) == 1:
                p, k = unknown[0]
                known = c.expr.const + sum(k2 * out[p2] for p2, k2 in c.expr.terms if p2 in out)
                value = Fraction(-known) / k
                out[p] = int(value) if value.denominator == 1 else value
                changed = True
            elif unknown:
                rest.append(c)
        pending = rest
    return out
