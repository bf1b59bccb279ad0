from __future__ import annotations

import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ealint.constraints import Constraint, ConstraintSet, LinExpr, all_constraints
from ealint.decoration import decorate_assignment, decorate_term
from ealint.lambda_core import alpha_rename, parse_term, principal_type
from ealint.lp import (Feasible, Infeasible, NoneInBox, SearchSpaceTooLarge, SolverError,
                       Witness, entails, optimize, oracle_enumerate, scale_factor,
                       scale_to_integers, solve_rational)

from oracles import box_points, lp_min
from termgen import CORPUS, corpus_terms


def c(rel, const=0, origin="types", **coeffs):
    return Constraint(LinExpr(coeffs, const), rel, origin)


def system(*cons):
    return ConstraintSet(cons)


def full_system(m):
    m = alpha_rename(m)
    theta, _ = principal_type(m)
    return all_constraints(decorate_term(m), decorate_assignment(theta))


def random_system(rng: random.Random, nvars=4, nrows=5):
    """Homogeneous rows plus ``x >= 1`` rows, the two shapes the generator emits."""
    names = [f"m{i}" for i in range(1, nvars + 1)]
    cons = []
    for _ in range(nrows):
        picked = rng.sample(names, rng.randint(1, min(3, nvars)))
        coeffs = {p: rng.choice([-2, -1, 1, 1, 2]) for p in picked}
        cons.append(c(rng.choice(["=", ">=", ">="]), **coeffs))
    for p in rng.sample(names, rng.randint(0, min(2, nvars))):
        cons.append(c(">=", -1, "contraction", **{p: 1}))
    return system(*cons)


# -- solve_rational --------------------------------------------------------------


def test_infeasible_example():
    assert isinstance(solve_rational(system(c(">=", -1, m=1), c(">=", m=-1))), Infeasible)


def test_zero_example():
    res = solve_rational(system(c("=", m1=1, m2=1), c(">=", m1=1), c(">=", m2=1)))
    assert res == Feasible({"m1": 0, "m2": 0})


def test_unsatisfiable_short_circuits():
    assert not solve_rational(ConstraintSet.false("clash"))


def test_church2_witness_satisfies_reduced_system():
    cs = full_system(parse_term(r"\y.\z. y (y z)"))
    phi = solve_rational(cs).point
    m = {k: phi[k] for k in phi}
    assert min(m["m1"], m["m2"], m["m3"]) >= 0
    assert m["m2"] + m["m3"] == m["p1"] >= 1
    assert m["m3"] + m["m7"] == 0 and m["m5"] == 0
    assert m["m4"] == m["m6"] == -m["p1"]
    assert m["p2"] == m["p3"]
    assert m["p4"] == m["q5"] == m["p2"] + m["m3"]


def test_results_are_exact_fractions():
    res = solve_rational(system(c(">=", -1, m=2)))
    assert res.point == {"m": Fraction(1, 2)}


def test_optimize_agrees_with_highs_on_corpus():
    for m in corpus_terms().values():
        cs = full_system(m)
        res = optimize(cs)
        ref = lp_min(cs, cs.objective)
        assert res.status == "optimal"
        assert math.isclose(float(res.value), ref, abs_tol=1e-7)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32))
def test_optimize_agrees_with_highs_on_random_systems(seed):
    rng = random.Random(seed)
    cs = random_system(rng, rng.randint(1, 5), rng.randint(1, 7))
    obj = LinExpr({p: rng.randint(0, 3) for p in cs.params()})
    # Keep the objective bounded below by adding box rows.
    for p in cs.params():
        cs.add(c(">=", 5, "types", **{p: 1}))
        cs.add(c(">=", 5, "types", **{p: -1}))
    res = optimize(cs, obj)
    ref = lp_min(cs, obj)
    if ref is None:
        assert res.status == "infeasible"
    else:
        assert res.status == "optimal"
        assert math.isclose(float(res.value), ref, abs_tol=1e-7)
        assert cs.satisfied_by(res.point)


def test_unbounded_is_reported():
    res = optimize(system(c(">=", m=1)), LinExpr({"m": -1}))
    assert res.status == "unbounded"


def test_deterministic_witness():
    for m in corpus_terms().values():
        cs = full_system(m)
        assert solve_rational(cs) == solve_rational(full_system(m))


# -- scaling -------------------------------------------------------------------


def test_scale_examples():
    cs = system(c(">=", n=1))
    assert scale_to_integers({"n": Fraction(1, 2)}, cs) == {"n": 1}
    assert scale_factor({"n": Fraction(1, 2)}) == 2
    assert scale_to_integers({"n": 3}, cs) == {"n": 3} and scale_factor({"n": 3}) == 1


def test_scale_mixed_denominators():
    cs = system(c(">=", m=2, p=-3), c(">=", -1, "contraction", m=1), c(">=", p=1))
    psi = {"m": Fraction(3, 2), "p": Fraction(1, 3)}
    assert cs.satisfied_by(psi)
    assert scale_factor(psi) == 6
    assert scale_to_integers(psi, cs) == {"m": 9, "p": 2}


def test_scale_reverifies():
    cs = system(c("=", -1, "types", m=1))
    with pytest.raises(SolverError):
        scale_to_integers({"m": Fraction(1, 2)}, system(c("=", -1, "types", m=2)))
    assert scale_to_integers({"m": 1}, cs) == {"m": 1}


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 7))
def test_any_positive_multiple_stays_feasible(seed, k):
    rng = random.Random(seed)
    cs = random_system(rng)
    res = solve_rational(cs)
    if not res:
        return
    psi = res.point
    assert cs.satisfied_by({p: k * v for p, v in psi.items()})
    phi = scale_to_integers(psi, cs)
    assert all(isinstance(v, int) for v in phi.values())


# -- entailment ------------------------------------------------------------------


def test_entails():
    cs = system(c("=", m1=1, m2=-1), c(">=", -1, m2=1))
    assert entails(cs, c(">=", -1, m1=1))
    assert not entails(cs, c("=", -1, m1=1))
    assert entails(system(c("=", m=1)), c("=", m=2))


# -- oracle ------------------------------------------------------------------


def test_oracle_examples():
    assert oracle_enumerate(system(c(">=", m=1), c("=", m=1)), 2) == Witness({"m": 0})
    assert oracle_enumerate(system(c(">=", -1, m=1), c(">=", m=-1)), 3) == NoneInBox()
    cs = full_system(parse_term(r"\x. x"))
    w = oracle_enumerate(cs, 1)
    assert w and all(v == 0 for v in w.point.values())


def test_oracle_guard():
    # Even left-hand side, odd right-hand side: propagation cannot refute it.
    cs = system(c("=", -1, **{f"m{i}": 2 for i in range(20)}))
    with pytest.raises(SearchSpaceTooLarge):
        oracle_enumerate(cs, 3, limit=50)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32))
def test_oracle_matches_plain_product(seed):
    rng = random.Random(seed)
    cs = random_system(rng, rng.randint(1, 4), rng.randint(1, 5))
    found = oracle_enumerate(cs, 2)
    points = list(box_points(cs, 2))
    assert bool(found) == bool(points)
    if found:
        assert cs.satisfied_by(found.point)


@pytest.mark.parametrize("name", sorted(CORPUS))
def test_oracle_agrees_with_solver(name):
    cs = full_system(corpus_terms()[name])
    found = oracle_enumerate(cs, 3)
    res = solve_rational(cs)
    if found:
        assert res
    if not res:
        assert not found
    if res and all(abs(v) <= 3 for v in res.point.values()) and all(
            Fraction(v).denominator == 1 for v in res.point.values()):
        assert found
