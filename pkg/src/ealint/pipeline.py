"""End-to-end EAL inference: decorate, generate constraints, solve, verify."""

from __future__ import annotations

import contextlib
import sys
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .constraints import ConstraintSet, all_constraints
from .decoration import (decorate_assignment, decorate_term, instantiate,
                         instantiate_assignment, show_param_term, show_param_type)
from .lambda_core import (App, NotSimplyTypable, Var, alpha_rename, free_vars, principal_type,
                          show, show_simple_type, size, variables)
from .lp import Infeasible, scale_factor, scale_to_integers, solve_rational
from .pseudo_term import (PASS, Verdict, check_bracketing, check_derivation, check_scope,
                          check_typing_condition, erase, erase_type, extend_assignment,
                          reconstruct_derivation, show_eal_type, weaken)
from .schemes import check_erasure_agreement, check_principal_agreement, check_scheme_solution

__all__ = [
    "TYPED", "NOT_SIMPLY_TYPABLE", "NOT_EAL_TYPABLE", "EXIT_CODES",
    "InferenceResult", "InconsistentContext", "VerificationFailure",
    "infer", "infer_with_context", "check",
]

TYPED = "typed"
NOT_SIMPLY_TYPABLE = "not-simply-typable"
NOT_EAL_TYPABLE = "not-eal-typable"
EXIT_CODES = {TYPED: 0, NOT_EAL_TYPABLE: 1, NOT_SIMPLY_TYPABLE: 2}


class InconsistentContext(ValueError):
    """The supplied hypotheses clash with the uses of the term."""


class VerificationFailure(RuntimeError):
    """A solver witness produced a pseudo-term that fails a check."""

    def __init__(self, result: InferenceResult):
        bad = [k for k, v in result.verification.items() if not v]
        super().__init__(f"verification failed: {', '.join(bad)}")
        self.result = result


@dataclass
class InferenceResult:
    status: str
    term: object = None
    principal: tuple | None = None
    decorated: object = None
    param_assignment: dict | None = None
    constraints: ConstraintSet | None = None
    rational: dict | None = None
    scale: int | None = None
    witness: dict | None = None
    pseudo_term: object = None
    eal_assignment: dict | None = None
    eal_context: dict | None = None
    eal_type: object = None
    derivation: object = None
    verification: dict = field(default_factory=dict)
    message: str = ""

    @property
    def typed(self) -> bool:
        return self.status == TYPED

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]

    def judgement(self) -> str:
        ctx = ", ".join(f"{x}: {show_eal_type(a)}" for x, a in (self.eal_context or {}).items())
        return f"{ctx} ⊢ ".lstrip() + f"{show(self.pseudo_term)} : {show_eal_type(self.eal_type)}"

    def to_json(self) -> dict:
        out: dict = {"status": self.status}
        if self.term is not None:
            out["term"] = show(self.term)
        if self.message:
            out["message"] = self.message
        if self.principal is not None:
            theta, ty = self.principal
            out["principal"] = {
                "assignment": {x: show_simple_type(a) for x, a in theta.items()},
                "type": show_simple_type(ty),
            }
        if self.decorated is not None:
            out["decorated"] = show_param_term(self.decorated)
            out["param_assignment"] = {x: show_param_type(a)
                                       for x, a in self.param_assignment.items()}
        if self.constraints is not None:
            out["constraints"] = self.constraints.to_json()
        if self.witness is not None:
            out["witness"] = dict(self.witness)
            out["scale"] = self.scale
        if self.pseudo_term is not None:
            out["pseudo_term"] = show(self.pseudo_term)
        if self.eal_context is not None:
            out["eal_context"] = {x: show_eal_type(a) for x, a in self.eal_context.items()}
        if self.eal_assignment is not None:
            out["eal_assignment"] = {x: show_eal_type(a) for x, a in self.eal_assignment.items()}
        if self.eal_type is not None:
            out["eal_type"] = show_eal_type(self.eal_type)
        if self.derivation is not None:
            out["derivation"] = self.derivation.to_json()
        if self.verification:
            out["verification"] = {k: v.to_json() for k, v in self.verification.items()}
        return out

    def pretty(self) -> str:
        lines = [f"status: {self.status}"]
        if self.term is not None:
            lines.append(f"term: {show(self.term)}")
        if self.message:
            lines.append(f"reason: {self.message}")
        if self.principal is not None:
            theta, ty = self.principal
            ctx = ", ".join(f"{x}: {show_simple_type(a)}" for x, a in theta.items())
            lines.append("principal: " + f"{ctx} ⊢ ".lstrip() + show_simple_type(ty))
        if self.decorated is not None:
            lines.append(f"decorated: {show_param_term(self.decorated)}")
        if self.constraints is not None:
            lines.append(f"constraints: {len(self.constraints)}")
        if self.witness is not None:
            shown = {p: v for p, v in self.witness.items() if not p.startswith("q")}
            lines.append("witness: " + ", ".join(f"{p}={v}" for p, v in shown.items()))
        if self.pseudo_term is not None and self.eal_type is not None:
            lines.append(f"judgement: {self.judgement()}")
        if self.verification:
            lines.append("verification: " + ", ".join(
                f"{k}={'ok' if v else 'FAIL'}" for k, v in self.verification.items()))
            for k, v in self.verification.items():
                if not v:
                    lines.append(f"  {k}: {v.reason} at {v.path}")
        if self.derivation is not None:
            lines.append("derivation:")
            lines.append(self.derivation.pretty(2))
        return "\n".join(lines)


@contextlib.contextmanager
def _recursion_room(n: int):
    old = sys.getrecursionlimit()
    need = 4000 + 20 * n
    if need > old:
        sys.setrecursionlimit(need)
    try:
        yield
    finally:
        sys.setrecursionlimit(old)


def _verify(t, gamma: Mapping, expected=None, principal=None, extra=()) -> tuple[dict, object, object]:
    """Run every check on ``(t, gamma)``; returns (report, derivation, type)."""
    report: dict[str, Verdict] = {
        "bracketing": check_bracketing(t),
        "scope": check_scope(t),
        "typing": check_typing_condition(t, gamma),
    }
    if not all(report.values()):
        return report, None, None
    ty = extend_assignment(gamma, t)
    d = reconstruct_derivation(t, gamma)
    if extra:
        d = weaken(d, extra)
    report["derivation"] = check_derivation(d)
    j = d.judgement
    report["judgement"] = PASS if j.type == ty and j.subject == t else Verdict(
        False, "derivation concludes a different judgement", ())
    if expected is not None:
        report["erasure"] = PASS if erase(t) == expected else Verdict(
            False, "erased pseudo-term differs from the input", ())
    if principal is not None:
        theta, simple = principal
        dec = erase_type(ty) == simple and all(
            erase_type(gamma[x]) == theta[x] for x in theta if x in gamma)
        report["decoration"] = PASS if dec else Verdict(
            False, "types do not erase to the principal typing", ())
    report["scheme_erasure"] = check_erasure_agreement(t)
    report["scheme_principal"] = check_principal_agreement(
        t, None if principal is None else _restrict_principal(principal, t))
    report["scheme_solution"] = check_scheme_solution(t, gamma, ty)
    return report, d, ty


def _restrict_principal(principal, t):
    theta, ty = principal
    fv = free_vars(erase(t))
    return {x: a for x, a in theta.items() if x in fv}, ty


def _run(m, context: Mapping | None, extra_names: Iterable[str] = ()) -> InferenceResult:
    try:
        theta, ty = principal_type(m, context)
    except NotSimplyTypable as exc:
        if context:
            try:
                principal_type(m)
            except NotSimplyTypable:
                pass
            else:
                raise InconsistentContext(str(exc)) from None
        return InferenceResult(NOT_SIMPLY_TYPABLE, term=m, message=str(exc))
    res = InferenceResult(NOT_EAL_TYPABLE, term=m, principal=(theta, ty))
    res.decorated = decorate_term(m)
    res.param_assignment = decorate_assignment(theta)
    cs = all_constraints(res.decorated, res.param_assignment)
    res.constraints = cs
    sol = solve_rational(cs)
    if isinstance(sol, Infeasible):
        res.message = sol.reason or "constraint system infeasible"
        return res
    res.rational = sol.point
    res.scale = scale_factor(sol.point)
    phi = scale_to_integers(sol.point, cs)
    res.witness = phi
    t = instantiate(phi, res.decorated)
    gamma = instantiate_assignment(phi, res.param_assignment)
    res.pseudo_term = t
    res.eal_assignment = gamma
    extra = [(x, gamma[x]) for x in extra_names if x not in free_vars(m)]
    report, d, eal_ty = _verify(t, gamma, expected=m, principal=(theta, ty), extra=extra)
    res.verification = report
    if not all(report.values()):
        raise VerificationFailure(res)
    res.status = TYPED
    res.derivation = d
    res.eal_type = eal_ty
    res.eal_context = dict(d.judgement.context)
    return res


def infer(m) -> InferenceResult:
    """Find a sharing-free EAL typing of ``m`` decorating its principal type.

    Binders are first made distinct (a no-op on parser output), since types
    are assigned per variable name.
    """
    with _recursion_room(size(m)):
        return _run(alpha_rename(m), None)


def infer_with_context(m, extra: Iterable[tuple[str, object]]) -> InferenceResult:
    """Like :func:`infer` for the judgement ``extra ⊢ m``.

    Hypotheses on variables not free in ``m`` appear through weakening.
    Atoms in the supplied types are treated as constants.
    """
    extra = list(extra)
    context: dict[str, object] = {}
    for x, a in extra:
        if x in context and context[x] != a:
            raise InconsistentContext(f"{x} given two different types")
        context[x] = a
    m = _rename_binders_away(alpha_rename(m), context)
    with _recursion_room(size(m)):
        return _run(m, context, list(context))


def _rename_binders_away(m, names):
    """Rename binders of ``m`` that collide with hypothesis names."""
    clash = set(names) - set(free_vars(m))
    if not clash or not clash & set(variables(m)):
        return m
    wrapped = m
    for x in sorted(clash):
        wrapped = App(wrapped, Var(x))
    wrapped = alpha_rename(wrapped)
    for _ in clash:
        wrapped = wrapped.fun
    return wrapped


def check(t, gamma: Mapping[str, object]) -> InferenceResult:
    """Decide whether ``Γ ⊢ t`` holds as an EAL judgement and rebuild it."""
    missing = [x for x in variables(t) if x not in gamma]
    if missing:
        raise ValueError(f"no type given for {', '.join(missing)}")
    res = InferenceResult(NOT_EAL_TYPABLE, term=erase(t), pseudo_term=t,
                          eal_assignment=dict(gamma))
    with _recursion_room(size(t)):
        report, d, ty = _verify(t, gamma)
    res.verification = report
    if d is None:
        failed = next(k for k, v in report.items() if not v)
        res.message = f"{failed} condition fails: {report[failed].reason}"
        return res
    if not all(report.values()):
        raise VerificationFailure(res)
    res.status = TYPED
    res.derivation = d
    res.eal_type = ty
    res.eal_context = dict(d.judgement.context)
    return res
