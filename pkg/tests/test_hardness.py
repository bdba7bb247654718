from itertools import product

import pytest

from qatl.checker import CheckRequest, CheckVerdict, check, load_example
from qatl.hardness import (SIGMA, Outcome, TMError, TuringMachine, _step, build_hardness_game,
                           cell_state, cell_text, dump_tm, initial_row, parse_tm, pre_triples,
                           run_rows, simulate_tm)

from lemma import lemma_check

MARK = parse_tm(load_example("tm_mark.tm"))


def tm(*lines, states="q0, q1, qF"):
    return parse_tm(f"states: {states}\ninitial: q0\naccept: qF\n" + "\n".join(lines))


def test_parse_and_dump():
    assert MARK.delta[("q0", "1")] == ("q1", "a", "R")
    assert parse_tm(dump_tm(MARK)) == MARK
    assert len(MARK.cells) == 5 + 3 * 5


@pytest.mark.parametrize("text, msg", [
    ("states: q0\ninitial: q0\n", "accept"),
    ("states: q0\ninitial: q0\naccept: qX\n", "unknown state"),
    ("states: q0\ninitial: q0\naccept: q0\nq0,a -> q0,a,R\n", "may read"),
    ("states: q0\ninitial: q0\naccept: q0\nq0,1 -> q0,x,R\n", "symbol"),
    ("states: q0\ninitial: q0\naccept: q0\nq0,1 -> q0,1,R\nq0,1 -> q0,0,R\n", "second"),
    ("states: q0\ninitial: q0\naccept: q0\nq0 1 q0\n", "cannot parse"),
])
def test_parse_errors(text, msg):
    with pytest.raises(TMError, match=msg):
        parse_tm(text)


def test_initial_row():
    assert initial_row(MARK, "10", 3) == ("a", ("q0", "1"), "0", "#", "a")
    assert initial_row(MARK, "", 2) == ("a", ("q0", "#"), "#", "a")
    with pytest.raises(TMError):
        initial_row(MARK, "1111", 3)
    with pytest.raises(TMError):
        initial_row(MARK, "12", 3)


def test_boundary_accept_after_one_left():
    t = tm("q0,1 -> q1,1,L")
    rows, out = run_rows(t, "1", 3)
    assert out is Outcome.ACCEPT and len(rows) == 2
    assert rows[1][0] == ("q1", "a")


def test_mark_and_step_back():
    rows, out = run_rows(MARK, "1", 3)
    assert out is Outcome.ACCEPT
    assert rows[2][1] == ("qF", "a") and len(rows) == 3


def test_right_runner_hits_the_boundary():
    t = tm("q0,# -> q0,#,R", "q0,1 -> q0,1,R")
    assert simulate_tm(t, "1", 3) is Outcome.ACCEPT


def test_bouncer_times_out():
    t = tm("q0,0 -> q1,0,R", "q1,0 -> q0,0,L")
    assert simulate_tm(t, "00", 3, max_steps=50) is Outcome.TIMEOUT


def test_reject_outcomes():
    assert simulate_tm(parse_tm(load_example("tm_reject.tm")), "1", 3) is Outcome.REJECT
    assert simulate_tm(MARK, "0", 3) is Outcome.REJECT  # no move on 0


def test_pre_clauses():
    assert ("0", "1", "#") in pre_triples(MARK, "1")
    # q0 reads 1, writes a and moves right onto a cell holding 0
    assert (("q0", "1"), "0", "#") in pre_triples(MARK, ("q1", "0"))
    assert ("#", ("q0", "1"), "0") in pre_triples(MARK, "a")


def _brute_pre(t: TuringMachine, d) -> set:
    out = set()
    for tri in product(t.cells, repeat=3):
        heads = [k for k, x in enumerate(tri) if isinstance(x, tuple)]
        if not heads:
            if tri[1] == d:
                out.add(tri)
            continue
        if len(heads) > 1 or tri[heads[0]][:2] not in t.delta:
            continue
        row = ("#",) + tri + ("#",)
        nxt = _step(t, row)
        if isinstance(nxt, tuple) and nxt[2] == d:
            out.add(tri)
    return out


@pytest.mark.parametrize("name", ["tm_mark.tm", "tm_first1.tm"])
def test_pre_matches_brute_force(name):
    t = parse_tm(load_example(name))
    for d in t.cells:
        assert pre_triples(t, d) == _brute_pre(t, d), d


def test_game_shape():
    h = build_hardness_game(MARK, "1", 3)
    m = h.model
    assert h.entry == "s0" and h.target == "sF"
    assert m.labels["sF"] == {"accept"} and m.labels["sr"] == {"reject"}
    out = {(x.weight, x.target) for x in m.out("s0")}
    assert out == {(1, "s0"), (0, cell_state(1, ("qF", "a")))}
    assert {(x.weight, x.target) for x in m.out("sz")} == {(0, "sF"), (-1, "sr")}
    for s in m.states:
        if s.startswith("t"):
            assert m.owner[s] == "falsifier" and all(x.weight == 0 for x in m.out(s))
            assert len(m.out(s)) == 3
        if s.startswith("c0:") or s.startswith("c4:"):
            assert [x.target for x in m.out(s)][-1] in ("sF", "sr")
    assert "#" not in "".join(m.states) and cell_text(("q0", "#")) == "q0/_"


def _verdict(name, w, n):
    t = parse_tm(load_example(name))
    h = build_hardness_game(t, w, n)
    rep = check(CheckRequest(h.model, h.formula, h.entry, 0, cap=8))
    return rep.verdict, simulate_tm(t, w, n)


@pytest.mark.parametrize("name, w, n, expect", [
    ("tm_mark.tm", "1", 3, CheckVerdict.VERIFIED),
    ("tm_reject.tm", "1", 3, CheckVerdict.FALSIFIED),
    ("tm_first1.tm", "01", 3, CheckVerdict.FALSIFIED),
    ("tm_even.tm", "", 2, CheckVerdict.VERIFIED),
])
def test_game_verdicts(name, w, n, expect):
    v, sim = _verdict(name, w, n)
    assert v is expect
    assert (sim is Outcome.ACCEPT) == (v is CheckVerdict.VERIFIED)


def test_lemma_spot_check():
    checked, bad = lemma_check(MARK, "1", 3)
    assert checked > 50 and bad == 0


def test_size_limit():
    with pytest.raises(TMError, match="exceeds"):
        build_hardness_game(MARK, "1", 3, limit=10)
    assert set(SIGMA) == {"0", "1", "#", "a", "r"}
