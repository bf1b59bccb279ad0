"""Lambda terms, their concrete syntax, and principal simple types.

Terms are immutable trees built from :class:`Var`, :class:`Abs` and
:class:`App`.  The parser renames binders on ingest so that every binder in
a term is distinct and none of them coincides with a free variable; all
the occurrence bookkeeping downstream relies on that.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, Union

__all__ = [
    "Var", "Abs", "App", "Term", "Atom", "Arrow", "SimpleType",
    "ParseError", "NotSimplyTypable", "parse_term", "parse_simple_type",
    "show", "show_simple_type", "free_vars", "count_occurrences",
    "variables", "occurrences", "subterm_at", "size", "type_size",
    "principal_type", "synthesize_simple", "check_simple", "rename_free",
]


# ---------------------------------------------------------------------------
# Term nodes


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def children(self) -> tuple:
        return ()

    def __str__(self) -> str:
        return show(self)


@dataclass(frozen=True, slots=True)
class Abs:
    binder: str
    body: object

    def children(self) -> tuple:
        return (self.body,)

    def __str__(self) -> str:
        return show(self)


@dataclass(frozen=True, slots=True)
class App:
    fun: object
    arg: object

    def children(self) -> tuple:
        return (self.fun, self.arg)

    def __str__(self) -> str:
        return show(self)


Term = Union[Var, Abs, App]


# ---------------------------------------------------------------------------
# Simple types


@dataclass(frozen=True, slots=True)
class Atom:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Arrow:
    dom: SimpleType
    cod: SimpleType

    def __str__(self) -> str:
        return show_simple_type(self)


SimpleType = Union[Atom, Arrow]


def show_simple_type(ty) -> str:
    if isinstance(ty, Arrow):
        dom = show_simple_type(ty.dom)
        if isinstance(ty.dom, Arrow):
            dom = f"({dom})"
        return f"{dom} -> {show_simple_type(ty.cod)}"
    return ty.name


def type_size(ty) -> int:
    """Number of arrows plus number of atom occurrences."""
    if isinstance(ty, Arrow):
        return 1 + type_size(ty.dom) + type_size(ty.cod)
    return 1


# ---------------------------------------------------------------------------
# Traversal helpers.  These work on any tree whose nodes expose
# ``children()``, so pseudo-terms and parameterized terms reuse them.


def occurrences(t) -> list[tuple[str, tuple[int, ...]]]:
    """Variable occurrences of ``t`` as ``(name, path)``, left to right.

    A path is the tuple of child indices leading from the root to the
    occurrence.
    """
    out = []
    stack = [(t, ())]
    while stack:
        node, path = stack.pop()
        if isinstance(node, Var):
            out.append((node.name, path))
            continue
        kids = node.children()
        for i in range(len(kids) - 1, -1, -1):
            stack.append((kids[i], path + (i,)))
    return out


def subterm_at(t, path: tuple[int, ...]):
    node = t
    for i in path:
        kids = node.children()
        if not 0 <= i < len(kids):
            raise IndexError(f"invalid path {path!r}")
        node = kids[i]
    return node


def size(t) -> int:
    """Structural size: the number of nodes."""
    n = 0
    stack = [t]
    while stack:
        node = stack.pop()
        n += 1
        stack.extend(node.children())
    return n


def free_vars(t) -> frozenset[str]:
    out = set()
    stack = [(t, frozenset())]
    while stack:
        node, bound = stack.pop()
        if isinstance(node, Var):
            if node.name not in bound:
                out.add(node.name)
        elif isinstance(node, Abs):
            stack.append((node.body, bound | {node.binder}))
        else:
            stack.extend((k, bound) for k in node.children())
    return frozenset(out)


def count_occurrences(x: str, t) -> int:
    return sum(1 for name, _ in occurrences(t) if name == x)


def variables(t) -> list[str]:
    """All variables of ``t`` (free and bound), in order of first appearance."""
    seen: dict[str, None] = {}
    stack = [t]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            seen.setdefault(node.name)
        else:
            if isinstance(node, Abs):
                seen.setdefault(node.binder)
            stack.extend(reversed(node.children()))
    return list(seen)


def rename_free(t, mapping: Mapping[str, str]):
    """Rename free occurrences; binders are assumed not to clash."""
    if not mapping:
        return t
    if isinstance(t, Var):
        return Var(mapping.get(t.name, t.name))
    if isinstance(t, Abs):
        if t.binder in mapping:
            inner = {k: v for k, v in mapping.items() if k != t.binder}
            return Abs(t.binder, rename_free(t.body, inner))
        return Abs(t.binder, rename_free(t.body, mapping))
    if isinstance(t, App):
        return App(rename_free(t.fun, mapping), rename_free(t.arg, mapping))
    return type(t)(rename_free(t.body, mapping))


# ---------------------------------------------------------------------------
# Concrete syntax


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


_TOKEN = re.compile(r"\s*(?:(?P<ident>[a-zA-Z_][a-zA-Z0-9_']*)|(?P<sym>[\\λ.()!$]))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        start = m.start(m.lastgroup)
        kind = m.lastgroup
        value = m.group(kind)
        if value == "λ":
            value = "\\"
        tokens.append((kind, value, start))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, doors: Mapping[str, Callable] | None = None):
        self.tokens = _tokenize(text)
        self.i = 0
        self.doors = dict(doors or {})

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, v, pos = self.take()
        if v != value or kind == "eof":
            what = "end of input" if kind == "eof" else repr(v)
            raise ParseError(f"expected {value!r}, found {what}", pos)

    def starts_unary(self) -> bool:
        kind, v, _ = self.peek()
        return kind == "ident" or v in ("(", "\\") or v in self.doors

    def parse(self):
        if self.peek()[0] == "eof":
            raise ParseError("empty input", 0)
        t = self.term()
        kind, v, pos = self.peek()
        if kind != "eof":
            raise ParseError(f"unexpected {v!r}", pos)
        return t

    def term(self):
        if not self.starts_unary():
            kind, v, pos = self.peek()
            what = "end of input" if kind == "eof" else repr(v)
            raise ParseError(f"expected a term, found {what}", pos)
        t = self.unary()
        while self.starts_unary():
            t = App(t, self.unary())
        return t

    def unary(self):
        kind, v, pos = self.take()
        if kind == "ident":
            return Var(v)
        if v == "(":
            t = self.term()
            self.expect(")")
            return t
        if v == "\\":
            kind, name, npos = self.take()
            if kind != "ident":
                raise ParseError("expected a binder name", npos)
            self.expect(".")
            return Abs(name, self.term())
        if v in self.doors:
            return self.doors[v](self.unary())
        raise ParseError(f"unexpected {v!r}", pos)


def _fresh_like(base: str, used: set[str]) -> str:
    for k in itertools.count(1):
        cand = f"{base}_{k}"
        if cand not in used:
            used.add(cand)
            return cand
    raise AssertionError


def alpha_rename(t):
    """Make binders pairwise distinct and distinct from free variables."""
    used = set(free_vars(t))
    stack = [t]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            used.add(node.name)
        else:
            if isinstance(node, Abs):
                used.add(node.binder)
            stack.extend(node.children())
    taken = set(free_vars(t))

    def go(node, env):
        if isinstance(node, Var):
            return Var(env.get(node.name, node.name))
        if isinstance(node, Abs):
            x = node.binder
            if x in taken:
                new = _fresh_like(x, used)
            else:
                new = x
            taken.add(new)
            return Abs(new, go(node.body, {**env, x: new}))
        if isinstance(node, App):
            return App(go(node.fun, env), go(node.arg, env))
        return type(node)(go(node.body, env))

    return go(t, {})


def parse_term(text: str) -> Term:
    """Parse a lambda term, e.g. ``"\\y.\\z. y (y z)"``.

    Application is left-associative and an abstraction extends as far right
    as possible.  Both ``\\`` and ``λ`` introduce a binder.
    """
    return alpha_rename(_Parser(text).parse())


def show(t) -> str:
    """Print a term (or pseudo-term) with minimal parentheses."""
    return _show(t, True, True)


def _show(t, app_ok: bool, abs_ok: bool) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Abs):
        s = f"\\{t.binder}. {_show(t.body, True, True)}"
        return s if abs_ok else f"({s})"
    if isinstance(t, App):
        if not app_ok:
            return f"({_show(t, True, True)})"
        return f"{_show(t.fun, True, False)} {_show(t.arg, False, abs_ok)}"
    symbol = getattr(t, "symbol", None)
    if symbol is None:
        raise TypeError(f"cannot print {type(t).__name__}")
    return symbol + _show(t.body, False, abs_ok)


_TYPE_TOKEN = re.compile(r"\s*(?:(?P<ident>[^\W\d][\w']*)|(?P<sym>->|-o|[()!]))")


def _type_tokens(text: str) -> list[tuple[str, int]]:
    out = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TYPE_TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        out.append((m.group(m.lastgroup), m.start(m.lastgroup)))
        pos = m.end()
    out.append(("", len(text)))
    return out


def _parse_type(text: str, arrow: str, make_arrow, bang=None):
    toks = _type_tokens(text)
    i = 0

    def peek():
        return toks[i]

    def arrow_type():
        nonlocal i
        left = prefix()
        if peek()[0] == arrow:
            i += 1
            return make_arrow(left, arrow_type())
        return left

    def prefix():
        nonlocal i
        tok, pos = toks[i]
        i += 1
        if tok == "!" and bang is not None:
            return bang(prefix())
        if tok == "(":
            inner = arrow_type()
            if peek()[0] != ")":
                raise ParseError("expected ')'", peek()[1])
            i += 1
            return inner
        if tok and (tok[0].isalpha() or tok[0] == "_"):
            return Atom(tok)
        raise ParseError(f"unexpected {tok or 'end of input'!r}", pos)

    if toks[0][0] == "":
        raise ParseError("empty input", 0)
    ty = arrow_type()
    if peek()[0] != "":
        raise ParseError(f"unexpected {peek()[0]!r}", peek()[1])
    return ty


def parse_simple_type(text: str) -> SimpleType:
    """Parse ``a -> b -> a`` style simple types (right-associative)."""
    return _parse_type(text, "->", Arrow)


# ---------------------------------------------------------------------------
# Principal simple types


class NotSimplyTypable(Exception):
    """Raised when unification fails (clash or occurs check)."""


class _Meta:
    __slots__ = ("id",)

    def __init__(self, ident: int):
        self.id = ident

    def __repr__(self) -> str:
        return f"?{self.id}"


class _Unifier:
    def __init__(self):
        self.subst: dict[int, object] = {}
        self.counter = itertools.count()

    def fresh(self) -> _Meta:
        return _Meta(next(self.counter))

    def walk(self, ty):
        while isinstance(ty, _Meta) and ty.id in self.subst:
            ty = self.subst[ty.id]
        return ty

    def occurs(self, meta: _Meta, ty) -> bool:
        stack = [ty]
        seen = set()
        while stack:
            cur = self.walk(stack.pop())
            if isinstance(cur, _Meta):
                if cur.id == meta.id:
                    return True
            elif isinstance(cur, Arrow):
                if id(cur) in seen:
                    continue
                seen.add(id(cur))
                stack.append(cur.dom)
                stack.append(cur.cod)
        return False

    def unify(self, a, b) -> None:
        stack = [(a, b)]
        while stack:
            x, y = stack.pop()
            x, y = self.walk(x), self.walk(y)
            if x is y:
                continue
            if isinstance(x, _Meta):
                if isinstance(y, _Meta) and y.id == x.id:
                    continue
                if self.occurs(x, y):
                    raise NotSimplyTypable("occurs check failed")
                self.subst[x.id] = y
            elif isinstance(y, _Meta):
                stack.append((y, x))
            elif isinstance(x, Arrow) and isinstance(y, Arrow):
                stack.append((x.cod, y.cod))
                stack.append((x.dom, y.dom))
            elif isinstance(x, Atom) and isinstance(y, Atom) and x.name == y.name:
                continue
            else:
                raise NotSimplyTypable(f"cannot unify {self.show(x)} with {self.show(y)}")

    def show(self, ty) -> str:
        ty = self.walk(ty)
        if isinstance(ty, _Meta):
            return repr(ty)
        if isinstance(ty, Arrow):
            dom = self.show(ty.dom)
            if isinstance(self.walk(ty.dom), Arrow):
                dom = f"({dom})"
            return f"{dom} -> {self.show(ty.cod)}"
        return ty.name

    def resolve(self, ty, names: dict[int, Atom], memo: dict[int, object]):
        ty = self.walk(ty)
        if isinstance(ty, _Meta):
            if ty.id not in names:
                names[ty.id] = Atom(f"α{len(names)}")
            return names[ty.id]
        if isinstance(ty, Atom):
            return ty
        key = id(ty)
        if key not in memo:
            memo[key] = Arrow(self.resolve(ty.dom, names, memo),
                              self.resolve(ty.cod, names, memo))
        return memo[key]


def principal_type(t, context: Mapping[str, SimpleType] | None = None):
    """Most general simple typing of ``t``.

    Returns ``(assignment, type)`` where the assignment covers every variable
    of ``t``, free and bound.  Atoms in ``context`` are rigid: they are only
    equal to themselves.  Remaining type variables are named ``α0, α1, ...``
    by first appearance in the result type and then in the assignment.

    Raises :class:`NotSimplyTypable`.
    """
    u = _Unifier()
    env: dict[str, object] = dict(context or {})
    order: dict[str, None] = {}

    def infer(node):
        if isinstance(node, Var):
            if node.name not in env:
                env[node.name] = u.fresh()
            order.setdefault(node.name)
            return env[node.name]
        if isinstance(node, Abs):
            a = u.fresh()
            env[node.binder] = a
            order.setdefault(node.binder)
            return Arrow(a, infer(node.body))
        if isinstance(node, App):
            fun = infer(node.fun)
            arg = infer(node.arg)
            res = u.fresh()
            u.unify(fun, Arrow(arg, res))
            return res
        raise TypeError(f"not a lambda term node: {type(node).__name__}")

    ty = infer(t)
    names: dict[int, Atom] = {}
    memo: dict[int, object] = {}
    result = u.resolve(ty, names, memo)
    assignment = {x: u.resolve(env[x], names, memo) for x in order}
    for x in env:
        if x not in assignment:
            assignment[x] = u.resolve(env[x], names, memo)
    return assignment, result


def synthesize_simple(t, assignment: Mapping[str, SimpleType]):
    """Type of ``t`` under a total assignment, or ``None`` if ill-typed."""
    if isinstance(t, Var):
        return assignment.get(t.name)
    if isinstance(t, Abs):
        body = synthesize_simple(t.body, assignment)
        if body is None or t.binder not in assignment:
            return None
        return Arrow(assignment[t.binder], body)
    fun = synthesize_simple(t.fun, assignment)
    arg = synthesize_simple(t.arg, assignment)
    if isinstance(fun, Arrow) and arg is not None and fun.dom == arg:
        return fun.cod
    return None


def check_simple(t, assignment: Mapping[str, SimpleType], ty) -> bool:
    return synthesize_simple(t, assignment) == ty


def iter_subterms(t) -> Iterator[tuple[tuple[int, ...], object]]:
    """Pre-order ``(path, subterm)`` pairs."""
    stack = [((), t)]
    while stack:
        path, node = stack.pop()
        yield path, node
        kids = node.children()
        for i in range(len(kids) - 1, -1, -1):
            stack.append((path + (i,), kids[i]))
