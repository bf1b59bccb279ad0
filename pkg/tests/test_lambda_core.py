from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from ealint.lambda_core import (Abs, App, Arrow, Atom, NotSimplyTypable, ParseError, Var,
                                alpha_rename, check_simple, count_occurrences, free_vars,
                                occurrences, parse_simple_type, parse_term, principal_type,
                                show, show_simple_type, size, type_size)

from oracles import canonical_tuple, simple_type_oracle, to_tuple
from termgen import CORPUS, NOT_SIMPLY_TYPABLE, closed_terms, random_term

A = Atom("a")


# -- parsing and printing ---------------------------------------------------


def test_parse_church2():
    t = parse_term(r"\y.\z. y (y z)")
    assert t == Abs("y", Abs("z", App(Var("y"), App(Var("y"), Var("z")))))


def test_parse_variable():
    assert parse_term("x") == Var("x")


def test_parse_self_application():
    assert parse_term(r"\x. x x") == Abs("x", App(Var("x"), Var("x")))


def test_application_is_left_associative():
    assert parse_term("f a b") == App(App(Var("f"), Var("a")), Var("b"))


def test_lambda_alternatives_and_primes():
    assert parse_term("λx'. x'") == Abs("x'", Var("x'"))


@pytest.mark.parametrize("bad", ["", r"\x", r"\. x", "(x", "x)", "1x", r"\x. "])
def test_parse_errors(bad):
    with pytest.raises(ParseError):
        parse_term(bad)


def test_parse_renames_shadowed_binders():
    t = parse_term(r"\x. \x. x")
    assert isinstance(t, Abs) and isinstance(t.body, Abs)
    assert t.binder != t.body.binder
    assert t.body.body == Var(t.body.binder)


@pytest.mark.parametrize("src", list(CORPUS.values()))
def test_print_parse_round_trip_corpus(src):
    t = parse_term(src)
    assert parse_term(show(t)) == t


def test_show_minimal_parentheses():
    assert show(parse_term(r"(\x. x) (f (g a))")) == r"(\x. x) (f (g a))"
    assert show(parse_term("(f a) b")) == "f a b"


def test_simple_type_syntax():
    ty = parse_simple_type("(a -> b) -> a -> b")
    assert ty == Arrow(Arrow(A, Atom("b")), Arrow(A, Atom("b")))
    assert parse_simple_type(show_simple_type(ty)) == ty
    assert type_size(ty) == 7


# -- free variables and occurrences ----------------------------------------


def test_free_vars_examples():
    assert free_vars(Var("x")) == {"x"}
    assert free_vars(Abs("x", Var("x"))) == set()
    assert free_vars(Abs("y", App(Var("y"), Var("z")))) == {"z"}


def test_count_occurrences_examples():
    assert count_occurrences("x", Var("x")) == 1
    body = App(Var("y"), App(Var("y"), Var("z")))
    assert count_occurrences("y", body) == 2
    assert count_occurrences("w", Var("x")) == 0


def test_occurrence_paths_address_variables():
    t = parse_term(r"\y.\z. y (y z)")
    assert occurrences(t) == [("y", (0, 0, 0)), ("y", (0, 0, 1, 0)), ("z", (0, 0, 1, 1))]


def test_size_counts_nodes():
    assert size(parse_term(r"\y.\z. y (y z)")) == 7


# -- principal types ---------------------------------------------------------


def test_principal_identity():
    theta, ty = principal_type(parse_term(r"\x. x"))
    (a,) = {theta["x"]}
    assert ty == Arrow(a, a)


def test_principal_church2():
    theta, ty = principal_type(parse_term(r"\y.\z. y (y z)"))
    a = theta["z"]
    assert isinstance(a, Atom)
    assert theta["y"] == Arrow(a, a)
    assert ty == Arrow(Arrow(a, a), Arrow(a, a))


@pytest.mark.parametrize("src", NOT_SIMPLY_TYPABLE)
def test_not_simply_typable(src):
    with pytest.raises(NotSimplyTypable):
        principal_type(parse_term(src))


def test_context_atoms_are_rigid():
    with pytest.raises(NotSimplyTypable):
        principal_type(parse_term("x x"), {"x": A})
    theta, ty = principal_type(parse_term("f a"), {"f": Arrow(A, A)})
    assert ty == A and theta["a"] == A


def _agrees_with_oracle(t):
    try:
        theta, ty = principal_type(t)
    except NotSimplyTypable:
        return simple_type_oracle(t) is None
    ref = simple_type_oracle(t)
    if ref is None:
        return False
    env, rty = ref
    names = sorted(theta)
    ours = canonical_tuple(*(to_tuple(theta[x]) for x in names), to_tuple(ty))
    theirs = canonical_tuple(*(env[x] for x in names), rty)
    return ours == theirs and check_simple(t, theta, ty)


def test_principality_exhaustive_small_terms():
    n = 0
    for t in closed_terms(7):
        t = alpha_rename(t)
        assert _agrees_with_oracle(t), show(t)
        n += 1
    assert n == 201


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 25))
def test_principality_random_open_terms(seed, n):
    import random
    t = alpha_rename(random_term(random.Random(seed), n))
    assert _agrees_with_oracle(t)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 30))
def test_round_trip_random_terms(seed, n):
    import random
    t = alpha_rename(random_term(random.Random(seed), n))
    assert parse_term(show(t)) == t


def test_soundness_checked_independently():
    for src in CORPUS.values():
        t = parse_term(src)
        theta, ty = principal_type(t)
        assert check_simple(t, theta, ty)
        assert not check_simple(t, theta, Arrow(ty, ty))
