"""Pseudo-terms: lambda terms decorated with box doors.

``Bang`` marks the main door of a box (printed ``!``) and ``CoBang`` an
auxiliary door (printed ``$``).  Boxes themselves are implicit; whether a
pseudo-term denotes a sharing-free EAL derivation is decided by the three
checks of this module (bracketing, scope and typing), and
:func:`reconstruct_derivation` then builds the derivation explicitly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Mapping, Union

from .lambda_core import (
    Abs, App, Arrow, Atom, Var, _parse_type, _Parser, alpha_rename,
    free_vars, occurrences, rename_free, show,
)

__all__ = [
    "Bang", "CoBang", "PseudoTerm", "Lolli", "Ofc", "EALType", "OPEN",
    "CLOSE", "Verdict", "PASS", "Undefined", "Judgement", "Derivation",
    "PreconditionError", "parse_pseudo_term", "parse_eal_type",
    "show_eal_type", "erase", "erase_type", "word", "word_sum",
    "check_bracketing", "check_scope", "extend_assignment",
    "check_typing_condition", "is_restricted", "substitute",
    "boxing_decompose", "reconstruct_derivation", "check_derivation",
    "weaken",
]


@dataclass(frozen=True, slots=True)
class Bang:
    body: object
    symbol = "!"

    def children(self) -> tuple:
        return (self.body,)

    def __str__(self) -> str:
        return show(self)


@dataclass(frozen=True, slots=True)
class CoBang:
    body: object
    symbol = "$"

    def children(self) -> tuple:
        return (self.body,)

    def __str__(self) -> str:
        return show(self)


PseudoTerm = Union[Var, Abs, App, Bang, CoBang]


# ---------------------------------------------------------------------------
# EAL types


@dataclass(frozen=True, slots=True)
class Lolli:
    dom: EALType
    cod: EALType

    def __str__(self) -> str:
        return show_eal_type(self)


@dataclass(frozen=True, slots=True)
class Ofc:
    body: EALType

    def __str__(self) -> str:
        return show_eal_type(self)


EALType = Union[Atom, Lolli, Ofc]


def show_eal_type(ty) -> str:
    if isinstance(ty, Lolli):
        dom = show_eal_type(ty.dom)
        if isinstance(ty.dom, Lolli):
            dom = f"({dom})"
        return f"{dom} -o {show_eal_type(ty.cod)}"
    if isinstance(ty, Ofc):
        inner = show_eal_type(ty.body)
        if isinstance(ty.body, Lolli):
            inner = f"({inner})"
        return "!" + inner
    return ty.name


def parse_eal_type(text: str) -> EALType:
    """Parse ``!a -o !(a -o a)`` style types; ``-o`` is right-associative."""
    return _parse_type(text, "-o", Lolli, Ofc)


def erase_type(ty):
    """Drop every ``!``, giving the underlying simple type."""
    if isinstance(ty, Ofc):
        return erase_type(ty.body)
    if isinstance(ty, Lolli):
        return Arrow(erase_type(ty.dom), erase_type(ty.cod))
    return ty


def parse_pseudo_term(text: str) -> PseudoTerm:
    """Parse a pseudo-term: ``!t`` is a main door, ``$t`` an auxiliary door."""
    return alpha_rename(_Parser(text, {"!": Bang, "$": CoBang}).parse())


def erase(t):
    if isinstance(t, Var):
        return t
    if isinstance(t, Abs):
        return Abs(t.binder, erase(t.body))
    if isinstance(t, App):
        return App(erase(t.fun), erase(t.arg))
    return erase(t.body)


def is_restricted(t) -> bool:
    """True iff every grammar slot carries a single signed chain of doors."""

    def slot(node) -> bool:
        if isinstance(node, Bang):
            while isinstance(node, Bang):
                node = node.body
            if isinstance(node, CoBang):
                return False
        elif isinstance(node, CoBang):
            while isinstance(node, CoBang):
                node = node.body
            if isinstance(node, Bang):
                return False
        if isinstance(node, Var):
            return True
        if isinstance(node, Abs):
            return slot(node.body)
        return slot(node.fun) and slot(node.arg)

    return slot(t)


# ---------------------------------------------------------------------------
# Door words

OPEN = "!"
CLOSE = "$"


def word(t, occ: tuple[int, ...]) -> tuple[str, ...]:
    """The doors holding the occurrence at path ``occ`` in their scope."""
    out = []
    node = t
    for i in occ:
        if isinstance(node, Bang):
            out.append(OPEN)
        elif isinstance(node, CoBang):
            out.append(CLOSE)
        kids = node.children()
        if not 0 <= i < len(kids):
            raise IndexError(f"invalid occurrence path {occ!r}")
        node = kids[i]
    if not isinstance(node, Var):
        raise IndexError(f"path {occ!r} does not address a variable")
    return tuple(out)


def word_sum(w) -> int:
    return sum(1 if c == OPEN else -1 for c in w)


@dataclass(frozen=True)
class Verdict:
    """Outcome of a check; falsy on failure, with a witness."""

    ok: bool
    reason: str = ""
    path: tuple[int, ...] | None = None
    detail: object = None

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> dict:
        out = {"ok": self.ok}
        if not self.ok:
            out["reason"] = self.reason
            out["path"] = list(self.path) if self.path is not None else None
            if self.detail is not None:
                out["detail"] = _jsonable(self.detail)
        return out


def _jsonable(x):
    if isinstance(x, tuple):
        return [_jsonable(v) for v in x]
    if isinstance(x, (str, int, float, bool, type(None))):
        return x
    return str(x)


PASS = Verdict(True)


def _door_walk(t) -> Iterator[tuple[str, tuple[int, ...], list[int], dict]]:
    """Yield each occurrence with its door steps and binder positions.

    ``steps`` holds +1/-1 per door on the path; ``binders`` maps each
    enclosing binder to the number of steps seen before its body.
    """
    stack = [(t, (), [], {})]
    while stack:
        node, path, steps, binders = stack.pop()
        if isinstance(node, Var):
            yield node.name, path, steps, binders
        elif isinstance(node, Bang):
            stack.append((node.body, path + (0,), steps + [1], binders))
        elif isinstance(node, CoBang):
            stack.append((node.body, path + (0,), steps + [-1], binders))
        elif isinstance(node, Abs):
            inner = {**binders, node.binder: len(steps)}
            stack.append((node.body, path + (0,), steps, inner))
        else:
            stack.append((node.arg, path + (1,), steps, binders))
            stack.append((node.fun, path + (0,), steps, binders))


def _first_negative_prefix(steps, start=0):
    total = 0
    for k in range(start, len(steps)):
        total += steps[k]
        if total < 0:
            return k + 1 - start, total
    return None, total


def check_bracketing(t) -> Verdict:
    """Every door word is weakly well-bracketed, and balanced if free."""
    for name, path, steps, binders in _door_walk(t):
        bad, total = _first_negative_prefix(steps)
        w = tuple(OPEN if s > 0 else CLOSE for s in steps)
        if bad is not None:
            return Verdict(False, f"prefix of the word of {name} sums below 0",
                           path, w[:bad])
        if name not in binders and total != 0:
            return Verdict(False, f"free occurrence {name} has word sum {total}",
                           path, w)
    return PASS


def check_scope(t) -> Verdict:
    """Under each binder, the word of every bound occurrence is balanced."""
    for name, path, steps, binders in _door_walk(t):
        if name not in binders:
            continue
        start = binders[name]
        bad, total = _first_negative_prefix(steps, start)
        w = tuple(OPEN if s > 0 else CLOSE for s in steps[start:])
        if bad is not None:
            return Verdict(False, f"word of {name} under its binder dips below 0",
                           path, w[:bad])
        if total != 0:
            return Verdict(False, f"word of {name} under its binder sums to {total}",
                           path, w)
    return PASS


# ---------------------------------------------------------------------------
# Typing condition


@dataclass(frozen=True)
class Undefined:
    """Marks a subterm on which the assignment has no value."""

    path: tuple[int, ...]
    reason: str

    def __bool__(self) -> bool:
        return False


def extend_assignment(gamma: Mapping[str, EALType], t, path=()):
    """Extend ``gamma`` from variables to the subterm ``t``.

    Returns an :data:`EALType`, or :class:`Undefined` pointing at the first
    subterm (in post-order) where the extension fails.
    """
    if isinstance(t, Var):
        if t.name not in gamma:
            return Undefined(path, f"no type for variable {t.name}")
        return gamma[t.name]
    if isinstance(t, Bang):
        inner = extend_assignment(gamma, t.body, path + (0,))
        return inner if isinstance(inner, Undefined) else Ofc(inner)
    if isinstance(t, CoBang):
        inner = extend_assignment(gamma, t.body, path + (0,))
        if isinstance(inner, Undefined):
            return inner
        if not isinstance(inner, Ofc):
            return Undefined(path, f"auxiliary door over non-banged type {show_eal_type(inner)}")
        return inner.body
    if isinstance(t, Abs):
        body = extend_assignment(gamma, t.body, path + (0,))
        if isinstance(body, Undefined):
            return body
        if t.binder not in gamma:
            return Undefined(path, f"no type for variable {t.binder}")
        return Lolli(gamma[t.binder], body)
    fun = extend_assignment(gamma, t.fun, path + (0,))
    if isinstance(fun, Undefined):
        return fun
    arg = extend_assignment(gamma, t.arg, path + (1,))
    if isinstance(arg, Undefined):
        return arg
    if not isinstance(fun, Lolli):
        return Undefined(path, f"function part has type {show_eal_type(fun)}")
    if fun.dom != arg:
        return Undefined(path, f"argument type {show_eal_type(arg)} does not match "
                               f"{show_eal_type(fun.dom)}")
    return fun.cod


def check_typing_condition(t, gamma: Mapping[str, EALType]) -> Verdict:
    ty = extend_assignment(gamma, t)
    if isinstance(ty, Undefined):
        return Verdict(False, ty.reason, ty.path)
    counts: dict[str, int] = {}
    first: dict[str, tuple] = {}
    for name, path in occurrences(t):
        counts[name] = counts.get(name, 0) + 1
        first.setdefault(name, path)
    for name, n in counts.items():
        if n >= 2 and not isinstance(gamma[name], Ofc):
            return Verdict(False, f"{name} occurs {n} times with non-banged type "
                                  f"{show_eal_type(gamma[name])}", first[name])
    return PASS


# ---------------------------------------------------------------------------
# Substitution and boxing


class PreconditionError(ValueError):
    pass


def substitute(t, mapping: Mapping[str, object]):
    """Replace free variables by pseudo-terms; refuses capturing binders."""
    if not mapping:
        return t
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    if isinstance(t, Abs):
        inner = {k: v for k, v in mapping.items() if k != t.binder}
        body_fv = free_vars(t.body)
        for k, v in inner.items():
            if k in body_fv and t.binder in free_vars(v):
                raise PreconditionError(f"substitution for {k} would be captured "
                                        f"by binder {t.binder}")
        return Abs(t.binder, substitute(t.body, inner))
    if isinstance(t, App):
        return App(substitute(t.fun, mapping), substitute(t.arg, mapping))
    return type(t)(substitute(t.body, mapping))


def boxing_decompose(t, fresh: Iterator[int] | None = None, checked: bool = False):
    """Split ``!u`` into a skeleton and the subterms behind its auxiliary doors.

    Returns ``(v, doors)`` with ``doors = [(x_1, u_1), ...]`` listed left to
    right, such that ``!u == !v[$u_1/x_1, ...]`` and each ``x_i`` occurs
    exactly once in ``v``.  Skeleton variables are named ``#b0, #b1, ...``.
    """
    if not isinstance(t, Bang):
        raise PreconditionError("boxing needs a pseudo-term of the form !u")
    if not checked and not check_bracketing(t):
        raise PreconditionError("boxing needs the bracketing condition")
    counter = fresh if fresh is not None else itertools.count()
    doors: list[tuple[str, object]] = []

    def go(node, depth):
        if isinstance(node, CoBang):
            if depth == 0:
                x = f"#b{next(counter)}"
                doors.append((x, node.body))
                return Var(x)
            return CoBang(go(node.body, depth - 1))
        if isinstance(node, Bang):
            return Bang(go(node.body, depth + 1))
        if isinstance(node, Var):
            return node
        if isinstance(node, Abs):
            return Abs(node.binder, go(node.body, depth))
        fun = go(node.fun, depth)
        return App(fun, go(node.arg, depth))

    v = go(t.body, 0)
    return v, doors


# ---------------------------------------------------------------------------
# Derivations


@dataclass(frozen=True)
class Judgement:
    context: Mapping[str, EALType]
    subject: object
    type: EALType

    def __str__(self) -> str:
        ctx = ", ".join(f"{x}: {show_eal_type(a)}" for x, a in self.context.items())
        return f"{ctx} ⊢ ".lstrip() + f"{show(self.subject)} : {show_eal_type(self.type)}"


@dataclass(frozen=True)
class Derivation:
    """One rule instance with its premises.

    ``var`` is the weakened variable for (weak) and the resulting variable
    for (contr); ``doors`` lists the skeleton variables of a (prom) node or
    the merged variables of a (contr) node.  For (prom) the main premise is
    the last one.
    """

    rule: str
    judgement: Judgement
    premises: tuple[Derivation, ...] = ()
    doors: tuple[str, ...] = ()
    var: str | None = None

    def nodes(self) -> Iterator[Derivation]:
        stack = [self]
        while stack:
            d = stack.pop()
            yield d
            stack.extend(reversed(d.premises))

    def count(self, rule: str) -> int:
        return sum(1 for d in self.nodes() if d.rule == rule)

    def pretty(self, indent: int = 0) -> str:
        label = self.rule
        if self.rule == "prom" and self.doors:
            label += " [" + ", ".join(self.doors) + "]"
        elif self.rule == "contr":
            label += f" {self.var} <- " + ", ".join(self.doors)
        elif self.rule == "weak":
            label += f" {self.var}"
        lines = [" " * indent + f"({label}) {self.judgement}"]
        lines.extend(p.pretty(indent + 2) for p in self.premises)
        return "\n".join(lines)

    def to_json(self) -> dict:
        out = {
            "rule": self.rule,
            "context": {x: show_eal_type(a) for x, a in self.judgement.context.items()},
            "subject": show(self.judgement.subject),
            "type": show_eal_type(self.judgement.type),
            "children": [p.to_json() for p in self.premises],
        }
        if self.doors:
            out["doors"] = list(self.doors)
        if self.var is not None:
            out["var"] = self.var
        return out


def _node(rule, context, subject, ty, premises=(), doors=(), var=None):
    return Derivation(rule, Judgement(dict(context), subject, ty), tuple(premises),
                      tuple(doors), var)


def weaken(d: Derivation, extra) -> Derivation:
    """Append one (weak) node per ``(name, type)`` not already in context."""
    for name, ty in extra:
        ctx = d.judgement.context
        if name in ctx:
            continue
        d = _node("weak", {**ctx, name: ty}, d.judgement.subject, d.judgement.type,
                  [d], var=name)
    return d


def reconstruct_derivation(t, gamma: Mapping[str, EALType]) -> Derivation:
    """Build a derivation of ``Δ ⊢ t : Γ(t)`` with Δ = Γ restricted to FV(t).

    Follows the structural induction: applications and boxes rename shared
    free variables apart and contract them right after the (appl) or (prom)
    node.  The caller must have checked bracketing, scope and typing.
    """
    fresh_box = itertools.count()
    fresh_name = itertools.count()

    def rename_apart(parts):
        seen: dict[str, int] = {}
        for part in parts:
            for y in free_vars(part):
                seen[y] = seen.get(y, 0) + 1
        shared = sorted(y for y, n in seen.items() if n >= 2)
        maps: list[dict[str, str]] = [{} for _ in parts]
        merged: dict[str, list[str]] = {y: [] for y in shared}
        for i, part in enumerate(parts):
            fv = free_vars(part)
            for y in shared:
                if y in fv:
                    new = f"{y}#{next(fresh_name)}"
                    maps[i][y] = new
                    merged[y].append(new)
        return maps, merged

    def contract(d, merged, env, types):
        for y, names in merged.items():
            ctx = dict(d.judgement.context)
            ty = types[y]
            for n in names:
                del ctx[n]
            target = env.get(y, y)
            ctx[target] = ty
            subject = rename_free(d.judgement.subject, {n: target for n in names})
            d = _node("contr", ctx, subject, d.judgement.type, [d], names, target)
        return d

    def rec(node, env: Mapping[str, str], types: Mapping[str, EALType]):
        if isinstance(node, Var):
            name = env.get(node.name, node.name)
            ty = types[node.name]
            return _node("var", {name: ty}, Var(name), ty)
        if isinstance(node, Abs):
            x = node.binder
            inner_env = {k: v for k, v in env.items() if k != x}
            d = rec(node.body, inner_env, types)
            if x not in d.judgement.context:
                d = weaken(d, [(x, types[x])])
            ctx = dict(d.judgement.context)
            a = ctx.pop(x)
            return _node("abst", ctx, Abs(x, d.judgement.subject),
                         Lolli(a, d.judgement.type), [d])
        if isinstance(node, App):
            maps, merged = rename_apart([node.fun, node.arg])
            d1 = rec(node.fun, {**env, **maps[0]}, types)
            d2 = rec(node.arg, {**env, **maps[1]}, types)
            fun_ty = d1.judgement.type
            if not isinstance(fun_ty, Lolli):
                raise PreconditionError("typing condition violated at an application")
            ctx = {**d1.judgement.context, **d2.judgement.context}
            d = _node("appl", ctx, App(d1.judgement.subject, d2.judgement.subject),
                      fun_ty.cod, [d1, d2])
            return contract(d, merged, env, types)
        if isinstance(node, CoBang):
            raise PreconditionError("auxiliary door outside any box")
        v, doors = boxing_decompose(node, fresh_box, checked=True)
        parts = [u for _, u in doors]
        maps, merged = rename_apart(parts)
        aux = []
        inner_types = dict(types)
        for (x, u), m in zip(doors, maps):
            d = rec(u, {**env, **m}, types)
            if not isinstance(d.judgement.type, Ofc):
                raise PreconditionError("auxiliary door over a non-banged type")
            inner_types[x] = d.judgement.type.body
            aux.append(d)
        main = rec(v, {}, inner_types)
        ctx: dict[str, EALType] = {}
        for d in aux:
            ctx.update(d.judgement.context)
        subject = Bang(substitute(main.judgement.subject,
                                  {x: CoBang(d.judgement.subject)
                                   for (x, _), d in zip(doors, aux)}))
        d = _node("prom", ctx, subject, Ofc(main.judgement.type), aux + [main],
                  [x for x, _ in doors])
        return contract(d, merged, env, types)

    return rec(t, {}, dict(gamma))


def _fail(path, reason):
    return Verdict(False, reason, tuple(path))


def check_derivation(d: Derivation) -> Verdict:
    """Validate every node against the EAL rule schemas.

    Besides the rule shapes, contracted variables must carry banged types
    and no (prom) may have a main premise ending in (contr).
    """
    stack = [(d, ())]
    while stack:
        node, path = stack.pop()
        verdict = _check_node(node, path)
        if not verdict:
            return verdict
        for i, p in enumerate(node.premises):
            stack.append((p, path + (i,)))
    return PASS


def _check_node(d: Derivation, path) -> Verdict:
    j = d.judgement
    ctx, subj, ty = j.context, j.subject, j.type
    prem = d.premises
    rule = d.rule

    def arity(n):
        return len(prem) == n

    if rule == "var":
        if not arity(0):
            return _fail(path, "(var) takes no premises")
        if not isinstance(subj, Var) or dict(ctx) != {subj.name: ty}:
            return _fail(path, "(var) must conclude x: A ⊢ x : A")
        return PASS

    if rule == "weak":
        if not arity(1) or d.var is None:
            return _fail(path, "(weak) takes one premise and a variable")
        p = prem[0].judgement
        if d.var in p.context:
            return _fail(path, f"(weak) variable {d.var} already in context")
        if d.var not in ctx or {k: v for k, v in ctx.items() if k != d.var} != dict(p.context):
            return _fail(path, "(weak) context must extend the premise by one variable")
        if subj != p.subject or ty != p.type:
            return _fail(path, "(weak) must keep subject and type")
        return PASS

    if rule == "appl":
        if not arity(2):
            return _fail(path, "(appl) takes two premises")
        p1, p2 = prem[0].judgement, prem[1].judgement
        if not isinstance(p1.type, Lolli):
            return _fail(path, f"(appl) function premise has type {show_eal_type(p1.type)}")
        if p1.type.dom != p2.type:
            return _fail(path, "(appl) argument type does not match")
        if set(p1.context) & set(p2.context):
            return _fail(path, "(appl) premises share context variables")
        if dict(ctx) != {**p1.context, **p2.context}:
            return _fail(path, "(appl) context is not the union of the premises")
        if subj != App(p1.subject, p2.subject) or ty != p1.type.cod:
            return _fail(path, "(appl) subject or type mismatch")
        return PASS

    if rule == "abst":
        if not arity(1):
            return _fail(path, "(abst) takes one premise")
        p = prem[0].judgement
        if not isinstance(subj, Abs) or subj.body != p.subject:
            return _fail(path, "(abst) subject must abstract the premise subject")
        x = subj.binder
        if x not in p.context:
            return _fail(path, f"(abst) premise lacks the bound variable {x}")
        rest = {k: v for k, v in p.context.items() if k != x}
        if dict(ctx) != rest:
            return _fail(path, "(abst) context must drop the bound variable")
        if ty != Lolli(p.context[x], p.type):
            return _fail(path, "(abst) type must be A -o B")
        return PASS

    if rule == "prom":
        if len(prem) != len(d.doors) + 1:
            return _fail(path, "(prom) needs one auxiliary premise per door plus a main premise")
        if len(set(d.doors)) != len(d.doors):
            return _fail(path, "(prom) door variables must be distinct")
        main = prem[-1]
        aux = prem[:-1]
        mj = main.judgement
        if set(mj.context) != set(d.doors):
            return _fail(path, "(prom) main premise context must be exactly the doors")
        if main.rule == "contr":
            return _fail(path, "(prom) main premise ends with (contr): sharing")
        union: dict[str, EALType] = {}
        for x, a in zip(d.doors, aux):
            aj = a.judgement
            if aj.type != Ofc(mj.context[x]):
                return _fail(path, f"(prom) auxiliary premise for {x} must have type "
                                   f"!{show_eal_type(mj.context[x])}")
            if set(aj.context) & set(union):
                return _fail(path, "(prom) auxiliary premises share context variables")
            union.update(aj.context)
        if dict(ctx) != union:
            return _fail(path, "(prom) context is not the union of auxiliary contexts")
        try:
            expected = Bang(substitute(mj.subject, {x: CoBang(a.judgement.subject)
                                                    for x, a in zip(d.doors, aux)}))
        except PreconditionError as exc:
            return _fail(path, f"(prom) {exc}")
        if subj != expected:
            return _fail(path, "(prom) subject is not !t[$t_i/x_i]")
        if ty != Ofc(mj.type):
            return _fail(path, "(prom) type must be !B")
        return PASS

    if rule == "contr":
        if not arity(1) or d.var is None or len(d.doors) < 2:
            return _fail(path, "(contr) takes one premise and at least two variables")
        p = prem[0].judgement
        if len(set(d.doors)) != len(d.doors):
            return _fail(path, "(contr) merged variables must be distinct")
        types = []
        for x in d.doors:
            if x not in p.context:
                return _fail(path, f"(contr) premise lacks {x}")
            types.append(p.context[x])
        if any(a != types[0] for a in types):
            return _fail(path, "(contr) merged variables have different types")
        if not isinstance(types[0], Ofc):
            return _fail(path, "(contr) contracted type is not banged")
        delta = {k: v for k, v in p.context.items() if k not in d.doors}
        if d.var in delta:
            return _fail(path, f"(contr) target {d.var} already in context")
        if dict(ctx) != {**delta, d.var: types[0]}:
            return _fail(path, "(contr) context mismatch")
        if subj != rename_free(p.subject, {x: d.var for x in d.doors}) or ty != p.type:
            return _fail(path, "(contr) subject or type mismatch")
        return PASS

    return _fail(path, f"unknown rule {rule!r}")

