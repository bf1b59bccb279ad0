"""Exact rational feasibility for constraint sets.

The solver is a two-phase simplex over :class:`fractions.Fraction` with
Bland's rule.  Before pivoting, every distinct linear expression of the
system gets its own variable, defined from a previously seen expression
that differs from it by a single term.  The bracketing and scope prefixes
form chains, so this keeps every row short.  Free variables are then
eliminated by Gaussian substitution, and the remaining bounded variables
are shifted to be non-negative.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .constraints import Constraint, ConstraintSet, LinExpr

__all__ = [
    "Feasible", "Infeasible", "LPResult", "SolverError", "UnboundedObjective",
    "optimize", "solve_rational", "scale_factor", "scale_to_integers",
    "Witness", "NoneInBox", "SearchSpaceTooLarge", "oracle_enumerate", "entails",
]


class SolverError(RuntimeError):
    """A returned point failed re-verification."""


class UnboundedObjective(SolverError):
    pass


@dataclass(frozen=True)
class Feasible:
    point: dict

    def __bool__(self) -> bool:
        return True


@dataclass(frozen=True)
class Infeasible:
    reason: str = ""

    def __bool__(self) -> bool:
        return False


@dataclass
class LPResult:
    status: str                     # optimal | infeasible | unbounded
    point: dict = field(default_factory=dict)
    value: Fraction | None = None
    pivots: int = 0


_MOD = (1 << 61) - 1


def _h(name: str) -> int:
    return int.from_bytes(hashlib.blake2b(name.encode(), digest_size=8).digest(), "big") % _MOD


def _div(a, b):
    if isinstance(a, int) and isinstance(b, int):
        q, r = divmod(a, b)
        return q if r == 0 else Fraction(a, b)
    return a / b


class _Model:
    """Equality rows over variables with optional lower bound or fixed value."""

    def __init__(self):
        self.names: list[str] = []
        self.lb: list = []
        self.fixed: list = []
        self.rows: list[tuple[dict, object]] = []
        self.infeasible = ""

    def new_var(self, name: str) -> int:
        self.names.append(name)
        self.lb.append(None)
        self.fixed.append(None)
        return len(self.names) - 1

    def bound(self, v: int, rel: str, value) -> None:
        if rel == "=":
            old = self.fixed[v]
            if old is not None and old != value:
                self.infeasible = f"{self.names[v]} fixed to both {old} and {value}"
            self.fixed[v] = value
        elif self.lb[v] is None or value > self.lb[v]:
            self.lb[v] = value
        f, l = self.fixed[v], self.lb[v]
        if f is not None and l is not None and f < l:
            self.infeasible = f"{self.names[v]} = {f} below its lower bound {l}"


def _build(cs: ConstraintSet, objective: LinExpr):
    m = _Model()
    var_of: dict[str, int] = {}
    for p in cs.params():
        var_of[p] = m.new_var(p)
    for p in objective.params():
        if p not in var_of:
            var_of[p] = m.new_var(p)

    # expression terms -> variable, bucketed by additive hash
    expr_var: dict[tuple, int] = {((p, 1),): v for p, v in var_of.items()}
    by_hash: dict[int, list[tuple]] = {}
    hp = {p: _h(p) for p in var_of}
    for terms in expr_var:
        by_hash.setdefault(hp[terms[0][0]], []).append(terms)

    def hash_of(terms):
        return sum(c * hp[p] for p, c in terms) % _MOD

    def var_for(terms: tuple) -> int:
        v = expr_var.get(terms)
        if v is not None:
            return v
        total = hash_of(terms)
        parent = None
        for i, (p, c) in enumerate(terms):
            for cand in by_hash.get((total - c * hp[p]) % _MOD, ()):
                if len(cand) == len(terms) - 1 and cand == terms[:i] + terms[i + 1:]:
                    parent = (expr_var[cand], p, c)
                    break
            if parent:
                break
        v = m.new_var(f"_e{len(m.names)}")
        if parent is not None:
            pv, p, c = parent
            row = {v: 1, pv: -1}
            row[var_of[p]] = row.get(var_of[p], 0) - c
        else:
            row = {v: 1}
            for p, c in terms:
                row[var_of[p]] = row.get(var_of[p], 0) - c
        m.rows.append(({k: a for k, a in row.items() if a != 0}, 0))
        expr_var[terms] = v
        by_hash.setdefault(total, []).append(terms)
        return v

    for c in cs:
        terms = c.expr.terms
        if len(terms) == 1 and terms[0][1] != 1:
            p, a = terms[0]
            # a·p + k rel 0 with a ≠ 1: normalize when the sign allows it
            if a > 0 or c.rel == "=":
                m.bound(var_of[p], c.rel, _div(-c.expr.const, a))
                continue
        v = var_for(terms)
        m.bound(v, c.rel, -c.expr.const)
    obj = {}
    for p, a in objective.terms:
        obj[var_of[p]] = obj.get(var_of[p], 0) + a
    return m, var_of, obj


class _Tableau:
    """Sparse simplex tableau: rows are dicts, with a column index."""

    def __init__(self, rows, basis, nvars):
        self.rows = rows            # list of [dict, rhs]
        self.basis = basis          # row -> basic var
        self.col: list[set] = [set() for _ in range(nvars)]
        for r, (row, _) in enumerate(rows):
            for v in row:
                self.col[v].add(r)
        self.pivots = 0

    def pivot(self, r: int, v: int, obj: list) -> None:
        row, rhs = self.rows[r]
        a = row[v]
        if a != 1:
            row = {k: _div(x, a) for k, x in row.items()}
            rhs = _div(rhs, a)
            self.rows[r] = [row, rhs]
        for r2 in list(self.col[v]):
            if r2 == r:
                continue
            row2, rhs2 = self.rows[r2]
            f = row2[v]
            for k, x in row.items():
                y = row2.get(k, 0) - f * x
                if y == 0:
                    if k in row2:
                        del row2[k]
                        self.col[k].discard(r2)
                else:
                    if k not in row2:
                        self.col[k].add(r2)
                    row2[k] = y
            self.rows[r2][1] = rhs2 - f * rhs
        d, val = obj
        f = d.get(v, 0)
        if f:
            for k, x in row.items():
                y = d.get(k, 0) - f * x
                if y == 0:
                    d.pop(k, None)
                else:
                    d[k] = y
            obj[1] = val - f * rhs
        self.basis[r] = v
        self.pivots += 1

    def run(self, obj: list) -> str:
        """Minimize; ``obj`` is [reduced-cost dict, -value]."""
        while True:
            entering = None
            for k in sorted(obj[0]):
                if obj[0][k] < 0:
                    entering = k
                    break
            if entering is None:
                return "optimal"
            best = None
            for r in self.col[entering]:
                a = self.rows[r][0][entering]
                if a > 0:
                    ratio = _div(self.rows[r][1], a)
                    key = (ratio, self.basis[r])
                    if best is None or key < best[0]:
                        best = (key, r)
            if best is None:
                return "unbounded"
            self.pivot(best[1], entering, obj)


class _Presolve:
    """Substitution-based reduction of the equality rows.

    Fixed variables and free variables are substituted away, then rows
    with one or two entries are solved for a variable whenever the lower
    bound can be carried over to the remaining one.  None of these steps
    adds nonzeros to other rows except free elimination.
    """

    def __init__(self, m: _Model, obj: dict):
        n = len(m.names)
        self.names = m.names
        self.lb = list(m.lb)
        self.rows: dict[int, list] = {i: [dict(r), rhs] for i, (r, rhs) in enumerate(m.rows)}
        self.col: list[set] = [set() for _ in range(n)]
        for i, (row, _) in self.rows.items():
            for v in row:
                self.col[v].add(i)
        self.obj = dict(obj)
        self.obj_const = 0
        self.defs: list[tuple[int, dict, object]] = []
        self.gone: set[int] = set()
        self.infeasible = ""
        for v, value in enumerate(m.fixed):
            if value is not None:
                self.substitute(v, {}, value)

    def substitute(self, v: int, expr: dict, const) -> list[int]:
        """Replace ``v`` by ``Σ expr + const`` everywhere; returns touched rows."""
        touched = list(self.col[v])
        for r in touched:
            row, rhs = self.rows[r]
            f = row.pop(v)
            _axpy(row, f, expr, self.col, r)
            self.rows[r][1] = rhs - f * const
        self.col[v].clear()
        f = self.obj.pop(v, 0)
        if f:
            _axpy(self.obj, f, expr)
            self.obj_const += f * const
        self.defs.append((v, expr, const))
        self.gone.add(v)
        return touched

    def solve_row_for(self, r: int, v: int) -> list[int]:
        row, rhs = self.rows.pop(r)
        for k in row:
            self.col[k].discard(r)
        a = row.pop(v)
        expr = {k: _div(-x, a) for k, x in row.items()}
        return self.substitute(v, expr, _div(rhs, a))

    def eliminate_free(self) -> None:
        pending = {v for v in range(len(self.lb)) if self.lb[v] is None and v not in self.gone}
        while True:
            cand = [v for v in pending if self.col[v]]
            if not cand:
                break
            v = min(cand, key=lambda u: (len(self.col[u]), u))
            r = min(self.col[v], key=lambda s: (len(self.rows[s][0]), s))
            self.solve_row_for(r, v)
            pending.discard(v)
        self.free_left = pending

    def reduce_short_rows(self) -> None:
        queue = sorted(r for r, (row, _) in self.rows.items() if len(row) <= 2)
        queued = set(queue)
        while queue and not self.infeasible:
            r = queue.pop()
            queued.discard(r)
            if r not in self.rows:
                continue
            row, rhs = self.rows[r]
            touched: list[int] = []
            if not row:
                if rhs != 0:
                    self.infeasible = "inconsistent equations"
                    return
                del self.rows[r]
            elif len(row) == 1:
                (v, a), = row.items()
                value = _div(rhs, a)
                if self.lb[v] is not None and value < self.lb[v]:
                    self.infeasible = f"{self.names[v]} forced below its lower bound"
                    return
                touched = self.solve_row_for(r, v)
            elif len(row) == 2:
                (x, a), (y, b) = sorted(row.items(), reverse=True)
                ratio = _div(-b, a)
                if ratio <= 0:
                    continue
                # x = ratio·y + rhs/a, so x >= lb_x carries over to y
                shift = _div(rhs, a)
                if self.lb[x] is not None:
                    carried = _div(self.lb[x] - shift, ratio)
                    if self.lb[y] is None or carried > self.lb[y]:
                        self.lb[y] = carried
                touched = self.solve_row_for(r, x)
                touched.append(r)
            for t in touched:
                if t in self.rows and t not in queued and len(self.rows[t][0]) <= 2:
                    queued.add(t)
                    queue.append(t)


def _axpy(target: dict, f, expr: dict, col=None, r=None) -> None:
    """``target += f·expr`` keeping zero entries out (and a column index)."""
    for k, x in expr.items():
        y = target.get(k, 0) + f * x
        if y == 0:
            if k in target:
                del target[k]
                if col is not None:
                    col[k].discard(r)
        else:
            if col is not None and k not in target:
                col[k].add(r)
            target[k] = y


def optimize(cs: ConstraintSet, objective: LinExpr | None = None) -> LPResult:
    """Minimize ``objective`` (default: the set's own, else 0) over ``cs``."""
    if cs.unsatisfiable:
        return LPResult("infeasible")
    if objective is None:
        objective = cs.objective if cs.objective is not None else LinExpr()
    m, var_of, obj = _build(cs, objective)
    if m.infeasible:
        return LPResult("infeasible")
    n = len(m.names)
    pre = _Presolve(m, obj)
    pre.eliminate_free()
    pre.reduce_short_rows()
    if pre.infeasible:
        return LPResult("infeasible")
    for v in pre.free_left:
        if pre.obj.get(v, 0) != 0:
            return LPResult("unbounded")
    lb = pre.lb

    # every surviving row is over bounded variables; shift to x' = x - lb
    work = []
    for r in sorted(pre.rows):
        row, rhs = pre.rows[r]
        for v, a in row.items():
            rhs -= a * lb[v]
        if rhs < 0:
            row = {v: -a for v, a in row.items()}
            rhs = -rhs
        work.append([dict(row), rhs])

    # crash basis: a column met in a single row can start basic there
    seen: dict[int, int] = {}
    for row, _ in work:
        for v in row:
            seen[v] = seen.get(v, 0) + 1
    basis: list[int] = []
    nart = 0
    for i, (row, rhs) in enumerate(work):
        pick = None
        for v in sorted(row):
            if seen[v] == 1 and (rhs == 0 or row[v] > 0) and v not in pre.obj:
                pick = v
                break
        if pick is None:
            basis.append(None)
            continue
        a = row[pick]
        if a != 1:
            work[i] = [{k: _div(x, a) for k, x in row.items()}, _div(rhs, a)]
        basis.append(pick)
    for i, b in enumerate(basis):
        if b is None:
            work[i][0][n + nart] = 1
            basis[i] = n + nart
            nart += 1
    tab = _Tableau(work, basis, n + nart)

    if nart:
        phase1: dict = {}
        value1 = 0
        for (row, rhs), b in zip(work, basis):
            if b >= n:
                for v, a in row.items():
                    if v < n:
                        phase1[v] = phase1.get(v, 0) - a
                value1 -= rhs
        ph = [{k: x for k, x in phase1.items() if x != 0}, value1]
        tab.run(ph)
        if ph[1] != 0:
            return LPResult("infeasible", pivots=tab.pivots)
        pivots = tab.pivots
        # drive artificials out of the basis, dropping redundant rows
        keep = []
        for r in range(len(tab.rows)):
            if tab.basis[r] >= n:
                row = tab.rows[r][0]
                pick = next((k for k in sorted(row) if k < n), None)
                if pick is None:
                    continue
                tab.pivot(r, pick, [{}, 0])
            keep.append(r)
        rows2 = [[{k: x for k, x in tab.rows[r][0].items() if k < n}, tab.rows[r][1]] for r in keep]
        tab = _Tableau(rows2, [tab.basis[r] for r in keep], n)
        tab.pivots = pivots

    d = dict(pre.obj)
    val = 0
    for r, (row, rhs) in enumerate(tab.rows):
        cb = pre.obj.get(tab.basis[r], 0)
        if cb:
            _axpy(d, -cb, row)
            val -= cb * rhs
    ph2 = [d, val]
    if tab.run(ph2) == "unbounded":
        return LPResult("unbounded", pivots=tab.pivots)

    x: dict[int, Fraction] = {}
    basic = {v: r for r, v in enumerate(tab.basis)}
    for v in range(n):
        if v in pre.gone:
            continue
        if lb[v] is None:
            x[v] = Fraction(0)
        else:
            shift = tab.rows[basic[v]][1] if v in basic else 0
            x[v] = Fraction(lb[v]) + shift
    for v, expr, const in reversed(pre.defs):
        x[v] = Fraction(const) + sum((a * x[k] for k, a in expr.items()), Fraction(0))
    point = {p: x[v] for p, v in var_of.items()}
    value = Fraction(objective.evaluate(point))
    return LPResult("optimal", point, value, tab.pivots)


def solve_rational(cs: ConstraintSet, objective: LinExpr | None = None) -> Feasible | Infeasible:
    """Exact feasibility, returning an objective-minimal point when feasible."""
    if cs.unsatisfiable:
        return Infeasible(cs.reason)
    res = optimize(cs, objective)
    if res.status == "infeasible":
        return Infeasible("linear program infeasible")
    if res.status == "unbounded":
        raise UnboundedObjective("objective unbounded below")
    bad = cs.violations(res.point)
    if bad:
        raise SolverError(f"solver point violates {bad[0]}")
    return Feasible(res.point)


def scale_factor(psi: Mapping[str, object]) -> int:
    a = 1
    for v in psi.values():
        a = math.lcm(a, Fraction(v).denominator)
    return a


def scale_to_integers(psi: Mapping[str, object], cs: ConstraintSet) -> dict[str, int]:
    """Multiply by the lcm of the denominators; the result must still solve ``cs``."""
    a = scale_factor(psi)
    phi = {p: int(Fraction(v) * a) for p, v in psi.items()}
    bad = cs.violations(phi)
    if bad:
        raise SolverError(f"scaled point violates {bad[0]} (factor {a})")
    return phi


def entails(cs: ConstraintSet, c: Constraint) -> bool:
    """Does every rational solution of ``cs`` satisfy ``c``?"""
    if cs.unsatisfiable:
        return True
    expr = LinExpr(c.expr.terms, _sorted=True)
    lo = optimize(cs, expr)
    if lo.status == "infeasible":
        return True
    if lo.status == "unbounded" or lo.value + c.expr.const < 0:
        return False
    if c.rel == ">=":
        return True
    hi = optimize(cs, -expr)
    return hi.status == "optimal" and -hi.value + c.expr.const <= 0


# ---------------------------------------------------------------------------
# Brute-force oracle


@dataclass(frozen=True)
class Witness:
    point: dict

    def __bool__(self) -> bool:
        return True


@dataclass(frozen=True)
class NoneInBox:
    def __bool__(self) -> bool:
        return False


class SearchSpaceTooLarge(RuntimeError):
    pass


def _floor_div(a, b):
    return math.floor(Fraction(a) / b)


def _ceil_div(a, b):
    return math.ceil(Fraction(a) / b)


def oracle_enumerate(cs: ConstraintSet, bound: int, limit: int = 10 ** 7) -> Witness | NoneInBox:
    """Search all integer points of ``[-bound, bound]^params`` for a solution.

    The scan is exhaustive but prunes with interval propagation, so boxes
    far larger than ``limit`` points can be decided; ``limit`` caps the
    number of search nodes instead.
    """
    if cs.unsatisfiable:
        return NoneInBox()
    params = cs.params()
    cons = [(list(c.expr.terms), c.expr.const, c.rel) for c in cs]
    watch: dict[str, list[int]] = {p: [] for p in params}
    for i, (terms, _, _) in enumerate(cons):
        for p, _ in terms:
            watch[p].append(i)
    order = {p: i for i, p in enumerate(params)}
    nodes = 0

    def propagate(dom, queue) -> bool:
        queue = list(queue)
        queued = set(queue)
        while queue:
            i = queue.pop()
            queued.discard(i)
            terms, k, rel = cons[i]
            lo_sum = k
            hi_sum = k
            for p, a in terms:
                lo, hi = dom[p]
                lo_sum += a * lo if a > 0 else a * hi
                hi_sum += a * hi if a > 0 else a * lo
            if hi_sum < 0 or (rel == "=" and lo_sum > 0):
                return False
            for p, a in terms:
                lo, hi = dom[p]
                own_hi = a * hi if a > 0 else a * lo
                own_lo = a * lo if a > 0 else a * hi
                # a·x >= -(hi_sum - own_hi)
                need = -(hi_sum - own_hi)
                nlo, nhi = lo, hi
                if a > 0:
                    nlo = max(nlo, _ceil_div(need, a))
                else:
                    nhi = min(nhi, _floor_div(need, a))
                if rel == "=":
                    # a·x <= -(lo_sum - own_lo)
                    cap = -(lo_sum - own_lo)
                    if a > 0:
                        nhi = min(nhi, _floor_div(cap, a))
                    else:
                        nlo = max(nlo, _ceil_div(cap, a))
                if nlo > nhi:
                    return False
                if (nlo, nhi) != (lo, hi):
                    dom[p] = (nlo, nhi)
                    for j in watch[p]:
                        if j != i and j not in queued:
                            queued.add(j)
                            queue.append(j)
                    # bounds of this constraint moved; recheck it later
                    if i not in queued:
                        queued.add(i)
                        queue.append(i)
                    break
        return True

    def search(dom):
        nonlocal nodes
        nodes += 1
        if nodes > limit:
            raise SearchSpaceTooLarge(f"more than {limit} search nodes")
        open_ = [p for p in params if dom[p][0] < dom[p][1]]
        if not open_:
            return {p: dom[p][0] for p in params}
        p = min(open_, key=lambda q: (dom[q][1] - dom[q][0], order[q]))
        lo, hi = dom[p]
        values = sorted(range(lo, hi + 1), key=lambda v: (abs(v), v < 0))
        for v in values:
            child = dict(dom)
            child[p] = (v, v)
            if propagate(child, watch[p]):
                found = search(child)
                if found is not None:
                    return found
        return None

    dom = {p: (-bound, bound) for p in params}
    if not propagate(dom, range(len(cons))):
        return NoneInBox()
    found = search(dom)
    if found is None:
        return NoneInBox()
    if not cs.satisfied_by(found):
        raise SolverError("oracle returned a non-solution")
    return Witness(found)
