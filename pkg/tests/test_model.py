import random

import pytest

from qatl.checker import load_example
from qatl.model import (Configuration, GameModel, ModelError, Transition, WeightClass,
                        dump_model, enabled_moves, eval_constraint, expand_socg, is_history,
                        load_model)
from qatl.parity import GameBuilder, Mode, Player, Verdict, solve_bracketed, truncate

V, F = Player.VERIFIER, Player.FALSIFIER


def test_vending_model_loads():
    m = load_model(load_example("vending.ocg"))
    assert len(m.states) == 8 and m.players == ("ctrl", "env")
    assert m.weight_class is WeightClass.UNIT
    assert [s for s in m.states if m.owner[s] == "ctrl"] == ["hub"]
    weights = {(t.source, t.target): t.weight for t in m.transitions}
    assert weights[("hub", "decrease")] == -1 and weights[("hub", "increase")] == 1
    assert sum(1 for w in weights.values() if w == 0) == 10
    assert m.labels["request"] == {"Request"}


def test_one_state_models():
    ok = load_model("players: a\nstate s owner=a\nedge s -> s weight=0\n")
    assert ok.states == ("s",)
    with pytest.raises(ModelError, match="deadlock-capable"):
        load_model("players: a\nstate s owner=a\nedge s -> s weight=-1\n")


@pytest.mark.parametrize("text, msg", [
    ("state s owner=a\nedge s -> s\n", "players"),
    ("players: a\nstate s owner=b\nedge s -> s\n", "unknown player"),
    ("players: a\nstate s owner=a\nedge s -> t\n", "unknown state"),
    ("players: a\nstate s owner=a\nstate s owner=a\nedge s -> s\n", "two owners"),
    ("players: a\nunit\nstate s owner=a\nedge s -> s weight=2\n", "unit model"),
    ("players: a\nstate s\nedge s -> s\n", "no owner"),
    ("players: a\nstate s owner=a\nedge s => s\n", "malformed"),
])
def test_load_errors(text, msg):
    with pytest.raises(ModelError, match=msg):
        load_model(text)


def test_inline_comments_and_default_weight():
    m = load_model("players: a  # one player\nstate s owner=a labels={p, q}\nedge s -> s  # loop\n")
    assert m.transitions == (Transition("s", 0, "s"),)
    assert m.labels["s"] == {"p", "q"}


def test_dump_load_round_trip():
    m = load_model(load_example("vending.ocg"))
    again = load_model(dump_model(m))
    assert again.states == m.states and again.transitions == m.transitions
    assert again.labels == m.labels and again.owner == m.owner
    assert again.weight_class is m.weight_class


def test_enabled_moves():
    m = GameModel(("s", "t"), ("a",), {"s": "a", "t": "a"},
                  [("s", -1, "t"), ("s", 0, "s"), ("t", 0, "t"), ("t", -5, "s")])
    assert [c for _, c in enabled_moves(m, Configuration("s", 0))] == [Configuration("s", 0)]
    assert len(enabled_moves(m, Configuration("s", 1))) == 2
    assert [c for _, c in enabled_moves(m, Configuration("t", 4))] == [Configuration("t", 4)]
    assert Configuration("s", 0) in [c for _, c in enabled_moves(m, Configuration("t", 5))]
    with pytest.raises(ModelError):
        enabled_moves(m, Configuration("u", 0))


def test_enabled_moves_never_negative():
    r = random.Random(3)
    for _ in range(200):
        n = r.randint(1, 4)
        states = [f"s{i}" for i in range(n)]
        edges = [(s, 0, s) for s in states]
        edges += [(r.choice(states), r.randint(-4, 4), r.choice(states)) for _ in range(5)]
        m = GameModel(states, ("a",), {s: "a" for s in states}, edges)
        c = Configuration(r.choice(states), r.randint(0, 5))
        for t, d in enabled_moves(m, c):
            assert d.counter >= 0 and d.counter == c.counter + t.weight
            assert is_history(m, [c, d])


def test_is_history():
    m = GameModel(("s",), ("a",), {"s": "a"}, [("s", 1, "s"), ("s", -1, "s")])
    assert is_history(m, [Configuration("s", 0), Configuration("s", 1), Configuration("s", 0)])
    assert not is_history(m, [Configuration("s", 0), Configuration("s", 2)])
    assert not is_history(m, [Configuration("s", 0), Configuration("s", -1)])


def test_eval_constraint():
    assert eval_constraint("<", 3, None, 2)
    assert eval_constraint("mod", 3, 4, 7)
    assert not eval_constraint("<=", -1, None, 0)
    assert eval_constraint("=", 0, None, 0) and not eval_constraint(">", 5, None, 5)
    assert eval_constraint(">=", 5, None, 5)
    with pytest.raises(ValueError):
        eval_constraint("mod", 1, 0, 3)


def _single_edge(owner, weight, credit):
    """Entry ramp of ``credit``, then one edge of ``weight`` into an even loop;
    the mover may also stay on an odd loop before it."""
    b = GameBuilder()
    ramp = b.vertex(V, 2, "ramp")
    u = b.vertex(owner, 2, "u")
    good = b.vertex(V, 0, "good")
    bad = b.vertex(V, 1, "bad")
    b.edge(ramp, credit, u)
    b.edge(u, weight, good)
    b.edge(u, 0, bad)
    b.edge(good, 0, good)
    b.edge(bad, 0, bad)
    return b.build(ramp, min_cap=credit)


def test_expand_chain_structure():
    g = _single_edge(V, -3, 3)
    x = expand_socg(g)
    assert all(abs(w) <= 1 for _, w, _ in x.edges)
    chain = [v for v in range(len(x)) if x.names[v].startswith("chain:")]
    # the +3 ramp and the -3 edge each need two intermediates
    assert len(chain) == 4
    assert len(x) - len(g) <= 3 + 3 + 1
    for v in chain:
        non_escape = [(w, t) for w, t in x.out(v) if not x.names[t].startswith("trap:")]
        assert len(non_escape) == 1


def test_expand_enabled_and_overdrawn():
    for credit, expect in ((3, Verdict.VERIFIER_WINS), (2, Verdict.FALSIFIER_WINS)):
        g = _single_edge(V, -3, credit)
        assert solve_bracketed(g, 8) == expect
        assert solve_bracketed(expand_socg(g), 8) == expect


def test_expand_overdraw_hits_the_movers_trap():
    # at counter 2 the -3 chain runs dry and only the escape remains
    g = _single_edge(F, -3, 2)
    x = expand_socg(g)
    a = truncate(x, 4, Mode.PESSIMISTIC, overflow="sink")
    last = next(v for v in range(len(x)) if x.names[v] == "chain:1->2#2")
    succ = a.succ[a.id(last, 0)]
    assert [a.keys[s][0] for s in succ] == [next(v for v in range(len(x))
                                              if x.names[v] == "trap:falsifier-loses")]


def test_expand_unit_edges_unchanged():
    g = _single_edge(V, 1, 1)
    x = expand_socg(g)
    assert len(x) == len(g) and x.edges == g.edges
