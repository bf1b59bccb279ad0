"""Parameterized pseudo-terms and types, and their instantiation.

Every slot of a lambda term gets one symbolic exponent ``!^n``.  An
instantiation maps exponents to integers: a positive value becomes that
many main doors, a negative one that many auxiliary doors, and zero
leaves the slot bare.  Types get one exponent per subformula, and those
must be instantiated with non-negative values.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Mapping, Union

from .lambda_core import Abs, App, Arrow, Atom, Var
from .pseudo_term import Bang, CoBang, Lolli, Ofc

__all__ = [
    "Exp", "PAtom", "PArrow", "ParamType", "MissingParameter",
    "NegativeTypeParameter", "decorate_term", "decorate_type",
    "decorate_assignment", "instantiate", "instantiate_type",
    "instantiate_assignment", "term_params", "type_params",
    "assignment_params", "erase_param", "erase_param_type",
    "show_param_term", "show_param_type",
]


@dataclass(frozen=True, slots=True)
class Exp:
    """``!^param body`` where ``body`` is a Var, Abs or App."""

    param: str
    body: object

    def children(self) -> tuple:
        return (self.body,)

    def __str__(self) -> str:
        return show_param_term(self)


@dataclass(frozen=True, slots=True)
class PAtom:
    param: str
    name: str

    def __str__(self) -> str:
        return show_param_type(self)


@dataclass(frozen=True, slots=True)
class PArrow:
    param: str
    dom: ParamType
    cod: ParamType

    def __str__(self) -> str:
        return show_param_type(self)


ParamType = Union[PAtom, PArrow]


class MissingParameter(KeyError):
    pass


class NegativeTypeParameter(ValueError):
    def __init__(self, param: str, value):
        super().__init__(f"type parameter {param} instantiated with {value} < 0")
        self.param = param
        self.value = value


def _counter(prefix: str, start: int = 1) -> Iterator[str]:
    return (f"{prefix}{k}" for k in itertools.count(start))


def decorate_term(m, fresh: Iterator[str] | None = None) -> Exp:
    """Wrap every slot of ``m`` in a fresh exponent ``m1, m2, ...`` (pre-order)."""
    names = fresh if fresh is not None else _counter("m")

    def slot(node):
        param = next(names)
        if isinstance(node, Var):
            return Exp(param, node)
        if isinstance(node, Abs):
            return Exp(param, Abs(node.binder, slot(node.body)))
        if isinstance(node, App):
            fun = slot(node.fun)
            return Exp(param, App(fun, slot(node.arg)))
        raise TypeError(f"cannot decorate {type(node).__name__}")

    return slot(m)


def decorate_type(ty, fresh: Iterator[str] | None = None) -> ParamType:
    """One fresh exponent ``p1, p2, ...`` per subformula, pre-order."""
    names = fresh if fresh is not None else _counter("p")

    def go(node):
        param = next(names)
        if isinstance(node, Arrow):
            dom = go(node.dom)
            return PArrow(param, dom, go(node.cod))
        return PAtom(param, node.name)

    return go(ty)


def decorate_assignment(theta: Mapping[str, object],
                        fresh: Iterator[str] | None = None) -> dict[str, ParamType]:
    names = fresh if fresh is not None else _counter("p")
    return {x: decorate_type(ty, names) for x, ty in theta.items()}


def term_params(t) -> list[str]:
    out = []
    stack = [t]
    while stack:
        node = stack.pop()
        if isinstance(node, Exp):
            out.append(node.param)
        stack.extend(reversed(node.children()))
    return out


def type_params(ty) -> list[str]:
    if isinstance(ty, PArrow):
        return [ty.param, *type_params(ty.dom), *type_params(ty.cod)]
    return [ty.param]


def assignment_params(sigma: Mapping[str, ParamType]) -> list[str]:
    return [p for ty in sigma.values() for p in type_params(ty)]


def erase_param(t):
    """Drop all exponents, giving back the lambda term."""
    if isinstance(t, Exp):
        return erase_param(t.body)
    if isinstance(t, Var):
        return t
    if isinstance(t, Abs):
        return Abs(t.binder, erase_param(t.body))
    return App(erase_param(t.fun), erase_param(t.arg))


def erase_param_type(ty):
    if isinstance(ty, PArrow):
        return Arrow(erase_param_type(ty.dom), erase_param_type(ty.cod))
    return Atom(ty.name)


def _value(phi: Mapping[str, int], param: str) -> int:
    try:
        value = phi[param]
    except KeyError:
        raise MissingParameter(param) from None
    if value != int(value):
        raise ValueError(f"parameter {param} has non-integer value {value}")
    return int(value)


def instantiate(phi: Mapping[str, int], t):
    """Replace each exponent by the corresponding chain of doors."""
    if isinstance(t, Exp):
        k = _value(phi, t.param)
        inner = instantiate(phi, t.body)
        door = Bang if k > 0 else CoBang
        for _ in range(abs(k)):
            inner = door(inner)
        return inner
    if isinstance(t, Var):
        return t
    if isinstance(t, Abs):
        return Abs(t.binder, instantiate(phi, t.body))
    if isinstance(t, App):
        return App(instantiate(phi, t.fun), instantiate(phi, t.arg))
    raise TypeError(f"not a parameterized term node: {type(t).__name__}")


def instantiate_type(phi: Mapping[str, int], ty):
    k = _value(phi, ty.param)
    if k < 0:
        raise NegativeTypeParameter(ty.param, k)
    if isinstance(ty, PArrow):
        out = Lolli(instantiate_type(phi, ty.dom), instantiate_type(phi, ty.cod))
    else:
        out = Atom(ty.name)
    for _ in range(k):
        out = Ofc(out)
    return out


def instantiate_assignment(phi, sigma: Mapping[str, ParamType]) -> dict:
    return {x: instantiate_type(phi, ty) for x, ty in sigma.items()}


def show_param_term(t) -> str:
    """Print in the ``!^{m1}λy.!^{m2}λz.!^{m3}[(!^{m4}y)...]`` layout."""
    if isinstance(t, Exp):
        body = t.body
        inner = show_param_term(body)
        if isinstance(body, App):
            inner = f"[{inner}]"
        return f"!^{{{t.param}}}{inner}"
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Abs):
        return f"λ{t.binder}.{show_param_term(t.body)}"
    return f"({show_param_term(t.fun)}){show_param_term(t.arg)}"


def show_param_type(ty) -> str:
    if isinstance(ty, PArrow):
        return f"!^{{{ty.param}}}({show_param_type(ty.dom)} ⊸ {show_param_type(ty.cod)})"
    return f"!^{{{ty.param}}}{ty.name}"
