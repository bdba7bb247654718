import random

import pytest
from hypothesis import given, settings, strategies as st

from qatl.formula import (And, Bool, Coalition, Constraint, Finally, FormulaSyntaxError,
                          Fragment, Globally, Implies, Next, Not, Or, Prop, Until, classify,
                          desugar, is_qatl, parse, render, subformulas, substitute_back,
                          substitute_fresh)
from qatl.model import Configuration
from qatl.refeval import ThreeValued, eval_qatl_bracket

from corpus import random_model, random_qatl


def test_parse_vending_release():
    f = parse("<<ctrl>> G ((Request & r < 3) -> X X Release)")
    assert f == Coalition(frozenset({"ctrl"}), Globally(Implies(
        And(Prop("Request"), Constraint("<", 3)), Next(Next(Prop("Release"))))))


def test_parse_energy_and_zero_reachability():
    assert parse("<<Sys>> G r > 0") == Coalition(frozenset({"Sys"}), Globally(Constraint(">", 0)))
    assert parse("<<I>> F (r = 0 & p)") == Coalition(
        frozenset({"I"}), Finally(And(Constraint("=", 0), Prop("p"))))


def test_precedence_and_associativity():
    assert parse("p U q U p") == Until(Prop("p"), Until(Prop("q"), Prop("p")))
    assert parse("p | q & p -> q") == Implies(Or(Prop("p"), And(Prop("q"), Prop("p"))), Prop("q"))
    assert parse("!p U q") == Until(Not(Prop("p")), Prop("q"))
    assert parse("<<>> X p") == Coalition(frozenset(), Next(Prop("p")))
    assert parse("r mod 4 = 3") == Constraint("mod", 3, 4)
    assert parse("r < -2") == Constraint("<", -2)


@pytest.mark.parametrize("text", ["p &", "<<a>>", "r mod 0 = 1", "r ! 3", "p $ q", "(p", "p q"])
def test_syntax_errors(text):
    with pytest.raises(FormulaSyntaxError):
        parse(text)


def test_syntax_error_position():
    with pytest.raises(FormulaSyntaxError) as e:
        parse("p & & q")
    assert e.value.position == 4


def test_render_canonical():
    assert render(Prop("p")) == "p"
    assert render(Constraint("mod", 3, 4)) == "r mod 4 = 3"
    for s in ["<<ctrl>> G ((Request & r < 3) -> X X Release)", "<<Sys>> G r > 0",
              "<<I>> F (r = 0 & p)"]:
        assert parse(render(parse(s))) == parse(s)


def _atoms():
    return st.one_of(
        st.sampled_from(["p", "q", "Req"]).map(Prop),
        st.booleans().map(Bool),
        st.builds(Constraint, st.sampled_from(["<", "<=", "=", ">", ">="]), st.integers(-3, 9)),
        st.integers(1, 5).flatmap(lambda k: st.integers(0, k - 1).map(lambda c: Constraint("mod", c, k))),
    )


def _extend(sub):
    agents = st.frozensets(st.sampled_from(["a", "b", "ctrl"]), max_size=2)
    return st.one_of(
        sub.map(Not), sub.map(Next), sub.map(Finally), sub.map(Globally),
        st.builds(Or, sub, sub), st.builds(And, sub, sub), st.builds(Implies, sub, sub),
        st.builds(Until, sub, sub), st.builds(Coalition, agents, sub),
    )


formulas = st.recursive(_atoms(), _extend, max_leaves=12)


@given(formulas)
@settings(max_examples=300, deadline=None)
def test_render_parse_round_trip(f):
    assert parse(render(f)) == f


def test_desugar_constraints():
    assert desugar(Constraint("<", 3)) == Constraint("<", 3)
    eq = desugar(Constraint("=", 0))
    assert set(type(g) for g in subformulas(eq)) <= {Not, Or, Constraint}
    assert {g.rel for g in subformulas(eq) if isinstance(g, Constraint)} == {"<", "<="}
    assert desugar(Constraint(">", 2)) == Not(Constraint("<=", 2))
    assert desugar(Constraint(">=", 2)) == Not(Constraint("<", 2))
    assert desugar(Constraint("mod", 7, 4)) == Constraint("mod", 3, 4)


def test_desugar_temporal():
    f = desugar(parse("<<a>> (F p)"))
    assert f == Coalition(frozenset({"a"}), Until(Bool(True), Prop("p")))
    assert desugar(parse("<<a>> G p")) == Coalition(frozenset({"a"}), Globally(Prop("p")))
    # inside a longer path formula G is rewritten
    g = desugar(parse("<<a>> (G p | F q)"))
    assert not any(isinstance(x, (Globally, Finally, And, Implies)) for x in subformulas(g))


@given(formulas)
@settings(max_examples=200, deadline=None)
def test_desugar_core_connectives(f):
    allowed = (Bool, Prop, Constraint, Not, Or, Next, Until, Coalition, Globally)
    g = desugar(f)
    kept = {id(x.sub) for x in subformulas(g) if isinstance(x, Coalition)}
    for x in subformulas(g):
        assert isinstance(x, allowed)
        if isinstance(x, Constraint):
            assert x.rel in ("<", "<=", "mod")
        if isinstance(x, Globally):
            assert id(x) in kept, "G survives only directly under a coalition"


def test_desugar_keeps_qatl_globally():
    f = desugar(parse("<<a>> G (p & r > 1)"))
    assert isinstance(f, Coalition) and isinstance(f.sub, Globally)
    assert is_qatl(f)


def test_classify():
    info = classify(parse("<<A>> X p"))
    assert (info.fragment, info.is_state_formula) == (Fragment.QATL, True)
    info = classify(parse("<<A>> (G p | F q)"))
    assert (info.fragment, info.is_state_formula) == (Fragment.QATL_STAR, True)
    info = classify(parse("X p"))
    assert (info.fragment, info.is_state_formula) == (Fragment.QATL_STAR, False)
    info = classify(parse("<<a>> G (r < 7 | <<b>> X r mod 5 = 2)"))
    assert info.coalition_count == 2
    assert info.max_constraint_constant == 7 and info.max_modulus == 5


def test_substitute_fresh_examples():
    ltl, b = substitute_fresh(parse("G r > 0 & G F p"))
    assert ltl == parse("G q1 & G F p") and b == {"q1": Constraint(">", 0)}
    ltl, b = substitute_fresh(parse("G F p"))
    assert ltl == parse("G F p") and b == {}
    ltl, b = substitute_fresh(parse("G (<<B>> X p -> q)"))
    assert b == {"q1": parse("<<B>> X p")}
    assert ltl == parse("G (q1 -> q)")


def test_fresh_names_avoid_existing_propositions():
    ltl, b = substitute_fresh(parse("q1 U r < 2"))
    assert "q1" not in b and set(b) == {"q2"}


@given(formulas)
@settings(max_examples=200, deadline=None)
def test_substitute_back_inverts(f):
    ltl, b = substitute_fresh(f)
    assert not any(isinstance(g, (Coalition, Constraint)) for g in subformulas(ltl))
    assert substitute_back(ltl, b) == f


def test_desugar_preserves_refeval_verdicts():
    r = random.Random(11)
    seen = 0
    for _ in range(150):
        m = random_model(r)
        f = random_qatl(r, 2)
        c = Configuration(m.states[0], r.randint(0, 3))
        a = eval_qatl_bracket(m, c, f, 24)
        b = eval_qatl_bracket(m, c, desugar(f), 24)
        if ThreeValued.UNKNOWN not in (a, b):
            assert a == b
            seen += 1
    assert seen > 100
