"""Typing schemes with equations, and first-order unification.

``eal_scheme`` computes, for a pseudo-term, a scheme context and type
together with equations whose solutions are exactly the EAL types of the
term under the typing condition.  ``simple_scheme`` does the same for
simple types, treating doors as transparent.  Both name their fresh type
variables ``?1, ?2, ...`` in the same order, so the simple scheme of a
term is literally the erasure of its EAL scheme.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .lambda_core import Abs, App, Arrow, Atom, Var, free_vars, principal_type
from .pseudo_term import Bang, CoBang, Lolli, Ofc, Verdict, PASS, erase, erase_type

__all__ = [
    "SchemeResult", "NoSolution", "eal_scheme", "simple_scheme", "erase_equations",
    "unify_eal", "unify_simple", "apply_subst", "erase_subst", "canonical",
    "check_erasure_agreement", "check_principal_agreement", "check_scheme_solution",
]


@dataclass
class SchemeResult:
    context: dict
    type: object
    equations: list = field(default_factory=list)
    fresh: list = field(default_factory=list)

    def __str__(self) -> str:
        ctx = ", ".join(f"{x}: {t}" for x, t in self.context.items())
        eqs = "; ".join(f"{a} ≡ {b}" for a, b in self.equations)
        return f"⟨{ctx}; {self.type}⟩ with {{{eqs}}}"


@dataclass(frozen=True)
class NoSolution:
    reason: str = ""

    def __bool__(self) -> bool:
        return False


def _scheme(t, arrow, bang, cobang_eq, shared):
    """Shared traversal; the three hooks give the EAL or simple variant."""
    counter = itertools.count(1)
    fresh: list[str] = []
    eqs: list = []

    def new():
        name = f"?{next(counter)}"
        fresh.append(name)
        return Atom(name)

    def go(node):
        if isinstance(node, Var):
            a = new()
            return {node.name: a}, a, frozenset((node.name,))
        if isinstance(node, Abs):
            ctx, b, fv = go(node.body)
            if node.binder in ctx:
                a = ctx[node.binder]
            else:
                a = new()
                ctx = {**ctx, node.binder: a}
            return ctx, arrow(a, b), fv - {node.binder}
        if isinstance(node, App):
            c1, a1, fv1 = go(node.fun)
            c2, a2, fv2 = go(node.arg)
            common = [x for x in c1 if x in fv1 and x in fv2]
            ctx: dict = {}
            for x in c1:
                if x in fv1 and x not in fv2:
                    ctx[x] = c1[x]
            for x in c2:
                if x in fv2 and x not in fv1:
                    ctx[x] = c2[x]
            betas = {x: new() for x in common}
            alpha = new()
            eqs.append((a1, arrow(a2, alpha)))
            for x in common:
                s = shared(betas[x])
                ctx[x] = s
                eqs.append((c1[x], s))
                eqs.append((c2[x], s))
            return ctx, alpha, fv1 | fv2
        if isinstance(node, Bang):
            ctx, a1, fv = go(node.body)
            return ctx, bang(a1), fv
        if isinstance(node, CoBang):
            ctx, a1, fv = go(node.body)
            alpha = new()
            eqs.append((a1, cobang_eq(alpha)))
            return ctx, alpha, fv
        raise TypeError(f"not a pseudo-term node: {type(node).__name__}")

    ctx, ty, _ = go(t)
    return SchemeResult(ctx, ty, eqs, fresh)


def _same(a):
    return a


def eal_scheme(t) -> SchemeResult:
    return _scheme(t, Lolli, Ofc, Ofc, Ofc)


def simple_scheme(t) -> SchemeResult:
    return _scheme(t, Arrow, _same, _same, _same)


def erase_equations(eqs: Iterable) -> list:
    return [(erase_type(a), erase_type(b)) for a, b in eqs]


# ---------------------------------------------------------------------------
# Unification


def _kids(t) -> tuple:
    if isinstance(t, (Lolli, Arrow)):
        return (t.dom, t.cod)
    if isinstance(t, Ofc):
        return (t.body,)
    return ()


def _rebuild(t, kids):
    if isinstance(t, Ofc):
        return Ofc(kids[0])
    return type(t)(kids[0], kids[1])


def apply_subst(sigma: Mapping[str, object], t):
    if isinstance(t, Atom):
        return sigma.get(t.name, t)
    return _rebuild(t, [apply_subst(sigma, k) for k in _kids(t)])


def _unify(eqs, is_var):
    bind: dict[str, object] = {}

    def walk(t):
        while isinstance(t, Atom) and t.name in bind:
            t = bind[t.name]
        return t

    def occurs(name, t):
        stack = [t]
        while stack:
            u = walk(stack.pop())
            if isinstance(u, Atom):
                if u.name == name:
                    return True
            else:
                stack.extend(_kids(u))
        return False

    stack = [(a, b) for a, b in reversed(list(eqs))]
    while stack:
        a, b = stack.pop()
        a, b = walk(a), walk(b)
        if a == b:
            continue
        if isinstance(a, Atom) and is_var(a.name):
            if occurs(a.name, b):
                return NoSolution(f"{a} occurs in {b}")
            bind[a.name] = b
        elif isinstance(b, Atom) and is_var(b.name):
            stack.append((b, a))
        elif type(a) is type(b) and not isinstance(a, Atom):
            stack.extend(reversed(list(zip(_kids(a), _kids(b)))))
        else:
            return NoSolution(f"cannot unify {a} with {b}")

    memo: dict[str, object] = {}

    def resolve(t):
        t = walk(t)
        if isinstance(t, Atom):
            return t
        return _rebuild(t, [resolve(k) for k in _kids(t)])

    for name in bind:
        memo[name] = resolve(Atom(name))
    return memo


def unify_eal(eqs: Iterable, variables: Iterable[str] | None = None):
    """Most general solution over ``!`` and ``⊸``, or :class:`NoSolution`.

    With ``variables`` given, every other atom is a constant.
    """
    allowed = None if variables is None else set(variables)
    return _unify(eqs, (lambda n: True) if allowed is None else allowed.__contains__)


def unify_simple(eqs: Iterable, variables: Iterable[str] | None = None):
    return unify_eal(eqs, variables)


def erase_subst(sigma: Mapping[str, object]) -> dict:
    return {a: erase_type(t) for a, t in sigma.items()}


def canonical(*items):
    """Rename atoms to ``a0, a1, ...`` by first appearance across ``items``.

    Items may be types, equation pairs, or mappings of types.
    """
    names: dict[str, str] = {}

    def scan(t):
        if isinstance(t, Atom):
            names.setdefault(t.name, f"a{len(names)}")
        else:
            for k in _kids(t):
                scan(k)

    def flat(item):
        if isinstance(item, Mapping):
            for v in item.values():
                yield from flat(v)
        elif isinstance(item, (list, tuple)):
            for v in item:
                yield from flat(v)
        else:
            yield item

    for item in items:
        for t in flat(item):
            scan(t)
    sigma = {n: Atom(r) for n, r in names.items()}

    def ren(item):
        if isinstance(item, Mapping):
            return {k: ren(v) for k, v in item.items()}
        if isinstance(item, list):
            return [ren(v) for v in item]
        if isinstance(item, tuple):
            return tuple(ren(v) for v in item)
        return apply_subst(sigma, item)

    out = tuple(ren(i) for i in items)
    return out[0] if len(out) == 1 else out


# ---------------------------------------------------------------------------
# Cross-checks


def check_erasure_agreement(t) -> Verdict:
    """The simple scheme equals the erasure of the EAL scheme, up to renaming."""
    e = eal_scheme(t)
    s = simple_scheme(t)
    lhs = canonical(s.context, s.type, s.equations)
    rhs = canonical({x: erase_type(a) for x, a in e.context.items()},
                    erase_type(e.type), erase_equations(e.equations))
    if lhs != rhs:
        return Verdict(False, "scheme erasure", (), {"simple": str(s), "eal": str(e)})
    return PASS


def check_principal_agreement(t, principal=None) -> Verdict:
    """The m.g.u. of the simple equations gives the principal simple type."""
    s = simple_scheme(t)
    tau = unify_simple(s.equations)
    m = erase(t)
    if principal is None:
        principal = principal_type(m)
    if isinstance(tau, NoSolution):
        return Verdict(False, "simple equations unsolvable", (), {"reason": tau.reason})
    fv = free_vars(m)
    theta, ty = principal
    got = canonical({x: apply_subst(tau, a) for x, a in s.context.items() if x in fv},
                    apply_subst(tau, s.type))
    want = canonical({x: theta[x] for x in s.context if x in fv}, ty)
    if got != want:
        return Verdict(False, "principal type mismatch", (), {"scheme": str(got), "principal": str(want)})
    return PASS


def check_scheme_solution(t, gamma: Mapping[str, object], ty) -> Verdict:
    """Some solution of the EAL equations maps the scheme onto ``gamma ⊢ t : ty``."""
    e = eal_scheme(t)
    eqs = list(e.equations)
    eqs.append((e.type, ty))
    for x, a in e.context.items():
        if x not in gamma:
            return Verdict(False, "variable missing from assignment", (), {"var": x})
        eqs.append((a, gamma[x]))
    sigma = unify_eal(eqs, e.fresh)
    if isinstance(sigma, NoSolution):
        return Verdict(False, "no scheme solution", (), {"reason": sigma.reason})
    return PASS
