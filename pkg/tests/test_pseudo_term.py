from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

from ealint.decoration import (decorate_assignment, decorate_term, instantiate,
                               instantiate_assignment, term_params, assignment_params)
from ealint.lambda_core import (Abs, App, Atom, Var, alpha_rename, free_vars, iter_subterms,
                                principal_type, show)
from ealint.pseudo_term import (Bang, CLOSE, CoBang, Derivation, Judgement, Lolli, OPEN, Ofc,
                                PreconditionError, Undefined, boxing_decompose, check_bracketing,
                                check_derivation, check_scope, check_typing_condition, erase,
                                erase_type, extend_assignment, is_restricted, parse_eal_type,
                                parse_pseudo_term, reconstruct_derivation, show_eal_type,
                                substitute, weaken, word, word_sum)

from oracles import bracketing_oracle, scope_oracle, typing_oracle
from termgen import CORPUS, corpus_terms

a = Atom("a")
b = Atom("b")
x, y, z, f = Var("x"), Var("y"), Var("z"), Var("f")
CHURCH2_BOXED = r"\y. \z. !($y ($y $z))"
CHURCH2_GAMMA = {"y": Ofc(Lolli(a, a)), "z": Ofc(a)}


# -- syntax -----------------------------------------------------------------


def test_parse_doors():
    assert parse_pseudo_term(r"!\x. $x") == Bang(Abs("x", CoBang(x)))
    assert parse_pseudo_term("!!x") == Bang(Bang(x))


def test_pseudo_term_round_trip():
    for src in [CHURCH2_BOXED, r"!(\x. x)", r"$!x", r"(!$f) !x", r"\f. !(\x. $f ($f x))"]:
        t = parse_pseudo_term(src)
        assert parse_pseudo_term(show(t)) == t


def test_eal_type_syntax():
    ty = parse_eal_type("!(a -o a) -o !a -o !a")
    assert ty == Lolli(Ofc(Lolli(a, a)), Lolli(Ofc(a), Ofc(a)))
    assert parse_eal_type(show_eal_type(ty)) == ty
    assert show_eal_type(Ofc(Ofc(a))) == "!!a"


def test_erase_examples():
    assert erase(Bang(Abs("x", CoBang(x)))) == Abs("x", x)
    assert erase(x) == x
    assert erase(parse_pseudo_term(CHURCH2_BOXED)) == parse_pseudo_term(r"\y. \z. y (y z)")
    assert erase_type(CHURCH2_GAMMA["y"]).__class__.__name__ == "Arrow"


def test_is_restricted():
    assert is_restricted(parse_pseudo_term(CHURCH2_BOXED))
    assert not is_restricted(parse_pseudo_term("!$x"))
    assert not is_restricted(parse_pseudo_term("$!x"))


# -- door words ---------------------------------------------------------------


def test_word_examples():
    assert word(x, ()) == ()
    assert word(Bang(Abs("y", CoBang(y))), (0, 0, 0)) == (OPEN, CLOSE)
    w = word(CoBang(Bang(x)), (0, 0))
    assert w == (CLOSE, OPEN) and word_sum(w[:1]) == -1 and word_sum(w) == 0


def test_word_invalid_path():
    with pytest.raises(IndexError):
        word(x, (0,))
    with pytest.raises(IndexError):
        word(Abs("x", x), ())


@given(st.lists(st.sampled_from([OPEN, CLOSE])), st.lists(st.sampled_from([OPEN, CLOSE])))
def test_word_sum_is_a_homomorphism(l1, l2):
    assert word_sum(l1 + l2) == word_sum(l1) + word_sum(l2)


# -- conditions -----------------------------------------------------------------


def test_bracketing_examples():
    v = check_bracketing(CoBang(x))
    assert not v and v.path == (0,)
    assert check_bracketing(Bang(Abs("x", CoBang(x))))
    v = check_bracketing(Bang(x))
    assert not v and "free" in v.reason


def test_scope_examples():
    assert check_scope(Abs("x", x))
    v = check_scope(Bang(Abs("x", CoBang(x))))
    assert not v and v.detail == (CLOSE,)
    v = check_scope(Abs("x", Bang(x)))
    assert not v and v.detail == (OPEN,)


def test_extend_assignment_examples():
    assert extend_assignment({"x": a}, Abs("x", x)) == Lolli(a, a)
    assert isinstance(extend_assignment({"x": a}, CoBang(x)), Undefined)
    assert extend_assignment({"f": Lolli(a, b), "x": a}, App(f, x)) == b


def test_extend_assignment_reports_first_failure():
    u = extend_assignment({"f": a, "x": a}, Abs("x", App(f, x)))
    assert isinstance(u, Undefined) and u.path == (0,)


def test_typing_condition_examples():
    assert not check_typing_condition(App(x, x), {"x": Lolli(a, a)})
    assert check_typing_condition(Abs("x", x), {"x": a})
    assert check_typing_condition(parse_pseudo_term(CHURCH2_BOXED), CHURCH2_GAMMA)


# -- boxing ---------------------------------------------------------------------


def test_boxing_closed_body():
    v, doors = boxing_decompose(Bang(Abs("x", x)))
    assert v == Abs("x", x) and doors == []


def test_boxing_two_doors():
    v, doors = boxing_decompose(Bang(App(CoBang(Var("a")), CoBang(Var("b")))))
    assert v == App(Var("#b0"), Var("#b1"))
    assert doors == [("#b0", Var("a")), ("#b1", Var("b"))]


def test_boxing_door_under_binder():
    v, doors = boxing_decompose(Bang(Abs("w", App(CoBang(f), Var("w")))))
    assert v == Abs("w", App(Var("#b0"), Var("w")))
    assert doors == [("#b0", f)]


def test_boxing_nested_box_keeps_inner_doors():
    t = parse_pseudo_term("!($f !$$x)")
    v, doors = boxing_decompose(t)
    assert doors == [("#b0", f), ("#b1", x)]
    assert v == App(Var("#b0"), Bang(CoBang(Var("#b1"))))


def test_boxing_preconditions():
    with pytest.raises(PreconditionError):
        boxing_decompose(x)
    with pytest.raises(PreconditionError):
        boxing_decompose(Bang(CoBang(CoBang(x))))


# -- derivations ------------------------------------------------------------------


def test_reconstruct_identity():
    d = reconstruct_derivation(Abs("x", x), {"x": a})
    assert d.rule == "abst" and d.premises[0].rule == "var"
    assert str(d.judgement) == r"⊢ \x. x : a -o a"
    assert check_derivation(d)


def test_reconstruct_promoted_identity():
    t = Bang(Abs("x", x))
    d = reconstruct_derivation(t, {"x": a})
    assert d.rule == "prom" and d.doors == () and len(d.premises) == 1
    assert d.judgement.type == Ofc(Lolli(a, a))
    assert check_derivation(d)


def test_reconstruct_church2():
    t = parse_pseudo_term(CHURCH2_BOXED)
    d = reconstruct_derivation(t, CHURCH2_GAMMA)
    assert d.count("prom") == 1 and d.count("contr") == 1
    (c,) = [n for n in d.nodes() if n.rule == "contr"]
    assert c.var == "y" and c.judgement.context["y"] == Ofc(Lolli(a, a))
    assert check_derivation(d)
    assert d.judgement.type == parse_eal_type("!(a -o a) -o !a -o !a")


def test_check_derivation_rejects_bad_application():
    p1 = Derivation("var", Judgement({"f": a}, f, a))
    p2 = Derivation("var", Judgement({"x": a}, x, a))
    bad = Derivation("appl", Judgement({"f": a, "x": a}, App(f, x), a), (p1, p2))
    v = check_derivation(bad)
    assert not v and v.path == ()


def test_check_derivation_rejects_unbanged_contraction():
    p = Derivation("var", Judgement({"x1": a, "x2": a}, App(Var("x1"), Var("x2")), a))
    bad = Derivation("contr", Judgement({"x": a}, App(x, x), a), (p,), ("x1", "x2"), "x")
    assert not check_derivation(bad)


def test_check_derivation_rejects_sharing_in_main_premise():
    # A box whose main premise ends in a contraction shares one door
    # between two occurrences; the sharing-free discipline rules this out.
    b0, b1 = Var("#b0"), Var("#b1")
    leaf = Derivation("var", Judgement({"#b0": Ofc(a), "#b1": Ofc(a)}, App(b0, b1), a))
    main = Derivation("contr", Judgement({"#b0": Ofc(a)}, App(b0, b0), a), (leaf,),
                      ("#b0", "#b1"), "#b0")
    aux = Derivation("var", Judgement({"x": Ofc(Ofc(a))}, x, Ofc(Ofc(a))))
    prom = Derivation("prom", Judgement({"x": Ofc(Ofc(a))}, Bang(App(CoBang(x), CoBang(x))),
                                        Ofc(a)), (aux, main), ("#b0",))
    v = check_derivation(prom)
    assert not v and "sharing" in v.reason


def test_weaken_adds_hypotheses():
    d = weaken(reconstruct_derivation(Abs("x", x), {"x": a}), [("w", a)])
    assert d.rule == "weak" and d.judgement.context == {"w": a}
    assert check_derivation(d)


def test_derivation_json_shape():
    d = reconstruct_derivation(parse_pseudo_term(CHURCH2_BOXED), CHURCH2_GAMMA)
    j = d.to_json()
    assert set(j) >= {"rule", "context", "subject", "type", "children"}
    assert j["type"] == "!(a -o a) -o !a -o !a"


# -- generated pseudo-terms ---------------------------------------------------------


def _random_instance(rng: random.Random, m, density=0.3):
    """A random restricted pseudo-term over ``m`` with a random decoration
    of its principal assignment."""
    m = alpha_rename(m)
    theta, _ = principal_type(m)
    tm, sigma = decorate_term(m), decorate_assignment(theta)
    phi = {p: (rng.choice([-1, 1, 1, 2]) if rng.random() < density else 0)
           for p in term_params(tm)}
    phi.update({p: (rng.choice([1, 1, 2]) if rng.random() < density else 0)
                for p in assignment_params(sigma)})
    return instantiate(phi, tm), instantiate_assignment(phi, sigma)


def _instances(n, seed=0):
    rng = random.Random(seed)
    terms = list(corpus_terms().values())
    for _ in range(n):
        yield _random_instance(rng, rng.choice(terms), rng.choice([0.1, 0.2, 0.4]))


def _good_instances():
    """Pipeline-style instances known to satisfy all three conditions."""
    from ealint.pipeline import infer
    for m in corpus_terms().values():
        res = infer(m)
        yield res.pseudo_term, res.eal_assignment


def test_conditions_agree_with_oracles():
    for t, gamma in _instances(1500):
        assert bool(check_bracketing(t)) == bracketing_oracle(t), show(t)
        assert bool(check_scope(t)) == scope_oracle(t), show(t)
        assert bool(check_typing_condition(t, gamma)) == typing_oracle(t, gamma), show(t)


def test_subterm_closure():
    checked = 0
    for t, gamma in list(_instances(600, seed=1)) + list(_good_instances()):
        scope_ok = bool(check_scope(t))
        typing_ok = bool(check_typing_condition(t, gamma))
        for _, u in iter_subterms(t):
            if scope_ok:
                assert check_scope(u)
            if typing_ok:
                assert check_typing_condition(u, gamma)
        checked += scope_ok + typing_ok
    assert checked > 50


def _boxes(t):
    return [u for _, u in iter_subterms(t) if isinstance(u, Bang)]


def _plug(t, mapping):
    """Textual replacement; capture is intended here, since door bodies may
    mention binders of the skeleton."""
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    if isinstance(t, Abs):
        return Abs(t.binder, _plug(t.body, mapping))
    if isinstance(t, App):
        return App(_plug(t.fun, mapping), _plug(t.arg, mapping))
    return type(t)(_plug(t.body, mapping))


def test_boxing_round_trip():
    n = 0
    for t, _ in list(_instances(800, seed=2)) + list(_good_instances()):
        for box in _boxes(t):
            if not check_bracketing(box):
                continue
            v, doors = boxing_decompose(box)
            back = Bang(_plug(v, {xi: CoBang(ui) for xi, ui in doors}))
            assert show(back) == show(box)
            for xi, _ in doors:
                assert sum(1 for _, w in iter_subterms(v) if w == Var(xi)) == 1
            n += 1
    assert n > 100


def _node_gamma(gamma, d):
    return {**gamma, **d.judgement.context}


def test_soundness_completeness_loop():
    positives = 0
    for t, gamma in list(_instances(1500, seed=3)) + list(_good_instances()):
        ok = check_bracketing(t) and check_scope(t) and check_typing_condition(t, gamma)
        if not ok:
            continue
        positives += 1
        d = reconstruct_derivation(t, gamma)
        assert check_derivation(d), show(t)
        j = d.judgement
        assert j.subject == t
        assert j.type == extend_assignment(gamma, t)
        assert dict(j.context) == {v: gamma[v] for v in free_vars(t)}
        for node in d.nodes():
            u = node.judgement.subject
            assert check_bracketing(u) and check_scope(u)
            assert check_typing_condition(u, _node_gamma(gamma, node))
    assert positives >= 40


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from(sorted(CORPUS)))
def test_erase_inverts_instantiation(seed, name):
    m = alpha_rename(corpus_terms()[name])
    t, _ = _random_instance(random.Random(seed), m, 0.5)
    assert erase(t) == m
    assert is_restricted(t)
