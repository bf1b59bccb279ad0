from __future__ import annotations

import json

import pytest

from ealint.lambda_core import Atom, parse_simple_type, parse_term, show
from ealint.pipeline import (NOT_EAL_TYPABLE, NOT_SIMPLY_TYPABLE, TYPED, InconsistentContext,
                             check, infer, infer_with_context)
from ealint.pseudo_term import (Lolli, Ofc, check_derivation, erase, erase_type,
                                parse_eal_type, parse_pseudo_term, show_eal_type)

from termgen import CORPUS, NOT_EAL_TYPABLE as UNTYPABLE, NOT_SIMPLY_TYPABLE as ILL_TYPED

a = Atom("a")


def assert_contract(res, m):
    """Everything a ``typed`` result promises."""
    assert res.status == TYPED and res.exit_code == 0
    assert all(res.verification.values())
    assert show(erase(res.pseudo_term)) == show(m)
    assert check_derivation(res.derivation)
    theta, ty = res.principal
    assert erase_type(res.eal_type) == ty
    for x, eal in res.eal_context.items():
        assert erase_type(eal) == theta[x]
    assert res.constraints.satisfied_by(res.witness)


def test_church2():
    m = parse_term(r"\y.\z. y (y z)")
    res = infer(m)
    assert_contract(res, m)
    w = res.witness
    assert w["m2"] + w["m3"] == w["p1"] >= 1
    assert res.derivation.count("prom") >= 1 and res.derivation.count("contr") == 1


def test_church2_published_point_is_reachable():
    t = parse_pseudo_term(r"\y. \z. !($y ($y $z))")
    res = check(t, {"y": parse_eal_type("!(a -o a)"), "z": parse_eal_type("!a")})
    assert res.typed
    assert res.judgement() == r"⊢ \y. \z. !($y ($y $z)) : !(a -o a) -o !a -o !a"


def test_identity_has_no_doors():
    m = parse_term(r"\x. x")
    res = infer(m)
    assert_contract(res, m)
    assert show(res.pseudo_term) == r"\x. x"
    assert isinstance(res.eal_type, Lolli) and res.eal_type.dom == res.eal_type.cod
    assert set(res.witness.values()) == {0}


@pytest.mark.parametrize("src", ILL_TYPED)
def test_not_simply_typable(src):
    res = infer(parse_term(src))
    assert res.status == NOT_SIMPLY_TYPABLE and res.exit_code == 2
    assert res.constraints is None


@pytest.mark.parametrize("src", UNTYPABLE)
def test_not_eal_typable(src):
    res = infer(parse_term(src))
    assert res.status == NOT_EAL_TYPABLE and res.exit_code == 1
    assert res.principal is not None and res.witness is None


@pytest.mark.parametrize("name", sorted(CORPUS))
def test_corpus_round_trip(name):
    m = parse_term(CORPUS[name])
    assert_contract(infer(m), m)


def test_check_examples():
    res = check(parse_pseudo_term(r"!\x. x"), {"x": a})
    assert res.typed and res.eal_type == Ofc(Lolli(a, a))
    assert res.judgement() == r"⊢ !\x. x : !(a -o a)"
    res = check(parse_pseudo_term("$x"), {"x": Ofc(a)})
    assert res.status == NOT_EAL_TYPABLE and not res.verification["bracketing"]
    res = check(parse_pseudo_term(r"\x. !x"), {"x": a})
    assert res.status == NOT_EAL_TYPABLE and res.verification["bracketing"]
    assert not res.verification["scope"]


def test_check_requires_all_types():
    with pytest.raises(ValueError):
        check(parse_pseudo_term(r"\x. y"), {"x": a})


def test_context_weakening():
    res = infer_with_context(parse_term(r"\x. x"), [("w", a)])
    assert res.typed and res.eal_context == {"w": a}
    assert res.derivation.rule == "weak" and check_derivation(res.derivation)


def test_context_used_variable():
    res = infer_with_context(parse_term("x"), [("x", a)])
    assert res.typed and res.judgement() == "x: a ⊢ x : a"


def test_context_clash():
    with pytest.raises(InconsistentContext):
        infer_with_context(parse_term("g x"), [("g", parse_simple_type("a -> a")),
                                               ("x", parse_simple_type("a -> a"))])
    res = infer_with_context(parse_term("x x"), [("x", parse_simple_type("a -> a"))])
    assert res.status == NOT_SIMPLY_TYPABLE
    with pytest.raises(InconsistentContext):
        infer_with_context(parse_term("x"), [("x", a), ("x", parse_simple_type("a -> a"))])


def test_context_binder_named_like_hypothesis():
    res = infer_with_context(parse_term(r"\w. w"), [("w", a)])
    assert res.typed and res.eal_context == {"w": a}
    # The binder is renamed apart from the hypothesis, up to alpha.
    body = erase(res.pseudo_term)
    assert body.binder != "w" and body.body.name == body.binder


def test_json_output_is_complete_and_serialisable():
    res = infer(parse_term(r"\y.\z. y (y z)"))
    out = json.loads(json.dumps(res.to_json()))
    for key in ("status", "principal", "constraints", "witness", "pseudo_term",
                "eal_context", "eal_type", "derivation", "verification"):
        assert key in out
    assert out["derivation"]["rule"] in {"abst", "prom"}
    assert all(v["ok"] for v in out["verification"].values())


def test_output_is_deterministic():
    m = parse_term(CORPUS["S"])
    assert json.dumps(infer(m).to_json()) == json.dumps(infer(m).to_json())


def test_pretty_mentions_judgement():
    text = infer(parse_term(r"\x. x")).pretty()
    assert "status: typed" in text and "judgement: ⊢ " in text
    assert show_eal_type(infer(parse_term(r"\x. x")).eal_type) in text
