"""The reachability game that encodes a bounded Turing machine run backwards.

Verifier pumps the counter to some ``v`` and then claims that cell 1 holds
``(qF, a)`` after ``v`` steps. Each claim ``(j, d)`` is justified by a
window of three cells one step earlier; Falsifier picks which of the three to
question next, and the counter counts the steps down. At counter 0 a claim
must agree with the initial configuration. Verifier reaches ``sF`` iff the
machine accepts.

Tape cells are ``0..N+1``; the two outer cells hold ``a``. A cell content is
either a symbol or a pair ``(state, symbol)`` marking the head.

Machine file format::

    states: q0, q1, qF
    initial: q0
    accept: qF
    q0,1 -> q1,a,L
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .formula import Coalition, Finally, Prop
from .model import GameModel, Transition

__all__ = [
    "SIGMA", "TuringMachine", "TMError", "Outcome", "HardnessGame",
    "parse_tm", "dump_tm", "simulate_tm", "run_rows", "initial_row", "pre_triples",
    "build_hardness_game", "cell_state", "cell_text",
]

SIGMA = ("0", "1", "#", "a", "r")
INPUT = ("0", "1", "a", "r")

class TMError(ValueError):
    pass


class Outcome(Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class TuringMachine:
    states: tuple[str, ...]
    initial: str
    accept: str
    delta: dict[tuple[str, str], tuple[str, str, str]] = field(default_factory=dict)

    def __post_init__(self):
        known = set(self.states)
        for q in (self.initial, self.accept):
            if q not in known:
                raise TMError(f"unknown state {q!r}")
        for (q, b), (q2, b2, x) in self.delta.items():
            if q not in known or q2 not in known:
                raise TMError(f"transition {q},{b} uses an unknown state")
            if b not in SIGMA or b2 not in SIGMA:
                raise TMError(f"transition {q},{b} uses a symbol outside {SIGMA}")
            if b in ("a", "r"):
                raise TMError(f"no transition may read {b!r}: the machine halts on it")
            if x not in ("L", "R"):
                raise TMError(f"direction must be L or R, got {x!r}")

    @property
    def cells(self) -> list:
        """The set Delta of cell contents, symbols first."""
        return list(SIGMA) + [(q, b) for q in self.states for b in SIGMA]


_DELTA = re.compile(r"(\w+)\s*,\s*(\S)\s*->\s*(\w+)\s*,\s*(\S)\s*,\s*([LR])$")


def parse_tm(text: str) -> TuringMachine:
    head: dict[str, str] = {}
    delta: dict[tuple[str, str], tuple[str, str, str]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, rest = line.partition(":")
        if sep and key.strip() in ("states", "initial", "accept"):
            head[key.strip()] = rest.strip()
            continue
        m = _DELTA.match(line)
        if not m:
            raise TMError(f"line {lineno}: cannot parse {line!r}")
        q, b, q2, b2, x = m.groups()
        if (q, b) in delta:
            raise TMError(f"line {lineno}: second transition for {q},{b}")
        delta[(q, b)] = (q2, b2, x)
    for k in ("states", "initial", "accept"):
        if k not in head:
            raise TMError(f"missing '{k}:' header")
    states = tuple(s.strip() for s in head["states"].split(",") if s.strip())
    return TuringMachine(states, head["initial"], head["accept"], delta)


def dump_tm(t: TuringMachine) -> str:
    lines = [f"states: {', '.join(t.states)}", f"initial: {t.initial}", f"accept: {t.accept}"]
    lines += [f"{q},{b} -> {q2},{b2},{x}" for (q, b), (q2, b2, x) in t.delta.items()]
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ simulation

def initial_row(t: TuringMachine, w: str, n: int) -> tuple:
    if len(w) > n:
        raise TMError(f"word of length {len(w)} does not fit a tape of {n} cells")
    bad = set(w) - set(INPUT)
    if bad:
        raise TMError(f"word uses symbols {sorted(bad)} outside {INPUT}")
    tape = ["a"] + list(w) + ["#"] * (n - len(w)) + ["a"]
    tape[1] = (t.initial, tape[1])
    return tuple(tape)


def _step(t: TuringMachine, row: tuple):
    """Next row, or an Outcome if the machine halts on this one."""
    j = next(i for i, c in enumerate(row) if isinstance(c, tuple))
    q, b = row[j]
    if b == "a":
        return Outcome.ACCEPT
    if b == "r" or (q, b) not in t.delta:
        return Outcome.REJECT
    q2, b2, x = t.delta[(q, b)]
    nxt = list(row)
    nxt[j] = b2
    k = j + (1 if x == "R" else -1)
    if not 0 <= k < len(row):
        return Outcome.REJECT
    nxt[k] = (q2, nxt[k])
    return tuple(nxt)


def run_rows(t: TuringMachine, w: str, n: int, max_steps: int = 10_000):
    """The rows ``C_0, C_1, ...`` up to the halting one, and the outcome."""
    rows = [initial_row(t, w, n)]
    while len(rows) <= max_steps:
        nxt = _step(t, rows[-1])
        if isinstance(nxt, Outcome):
            return rows, nxt
        rows.append(nxt)
    return rows, Outcome.TIMEOUT


def simulate_tm(t: TuringMachine, w: str, n: int, max_steps: int = 10_000) -> Outcome:
    return run_rows(t, w, n, max_steps)[1]


# ------------------------------------------------------------ predecessor sets

def pre_triples(t: TuringMachine, d) -> set[tuple]:
    """Windows ``(d1, d2, d3)`` of a row whose middle cell holds ``d`` one step later."""
    out = set()
    sym = SIGMA
    heads = [(q, b) for (q, b) in t.delta]
    if not isinstance(d, tuple):
        out.update((x, d, y) for x in sym for y in sym)
    for h in heads:
        q2, b2, x = t.delta[h]
        for y in sym:
            for z in sym:
                # head to the left moves right onto the middle cell, or away
                if x == "R" and d == (q2, y):
                    out.add((h, y, z))
                if x != "R" and d == y:
                    out.add((h, y, z))
                # head to the right moves left onto the middle cell, or away
                if x == "L" and d == (q2, z):
                    out.add((y, z, h))
                if x != "L" and d == z:
                    out.add((y, z, h))
        if d == b2:
            out.update((y, h, z) for y in sym for z in sym)
    return out


# ------------------------------------------------------------------------ game

def cell_text(d) -> str:
    """Cell content as a name token; the blank is spelled ``_`` since ``#``
    starts a comment in model files."""
    if isinstance(d, tuple):
        return f"{d[0]}/{cell_text(d[1])}"
    return "_" if d == "#" else d


def cell_state(j: int, d) -> str:
    return f"c{j}:{cell_text(d)}"


def _triple_state(j: int, tri) -> str:
    return f"t{j}:" + "|".join(cell_text(x) for x in tri)


@dataclass(frozen=True)
class HardnessGame:
    model: GameModel
    entry: str
    target: str
    formula: Coalition


def build_hardness_game(t: TuringMachine, w: str, n: int, *,
                        limit: int = 250_000) -> HardnessGame:
    """Generate the states reachable from ``s0``.

    To keep every state able to move at counter 0, the decrement sits on
    Verifier's move into a window (the window's three exits have weight 0),
    and each interior claim has a 0-edge to the losing sink ``sr``.
    """
    c0 = initial_row(t, w, n)
    pre = {}

    def pre_of(d):
        if d not in pre:
            pre[d] = sorted(pre_triples(t, d), key=repr)
        return pre[d]

    owner: dict[str, str] = {"s0": "verifier", "sz": "falsifier",
                             "sr": "falsifier", "sF": "falsifier"}
    labels = {"sF": {"accept"}, "sr": {"reject"}}
    edges: list[Transition] = [Transition("s0", 1, "s0"), Transition("sz", 0, "sF"),
                               Transition("sz", -1, "sr"), Transition("sF", 0, "sF"),
                               Transition("sr", 0, "sr")]
    start = (1, (t.accept, "a"))
    edges.append(Transition("s0", 0, cell_state(*start)))
    todo = [start]
    seen = {start}
    while todo:
        j, d = todo.pop()
        name = cell_state(j, d)
        owner[name] = "verifier"
        if c0[j] == d:
            edges.append(Transition(name, 0, "sz"))
        if j in (0, n + 1):
            edges.append(Transition(name, 0, "sF" if d == "a" else "sr"))
            continue
        edges.append(Transition(name, 0, "sr"))
        for tri in pre_of(d):
            tname = _triple_state(j, tri)
            if tname not in owner:
                owner[tname] = "falsifier"
                for k, x in zip((j - 1, j, j + 1), tri):
                    edges.append(Transition(tname, 0, cell_state(k, x)))
                    if (k, x) not in seen:
                        seen.add((k, x))
                        todo.append((k, x))
            edges.append(Transition(name, -1, tname))
        if len(owner) > limit:
            raise TMError(f"game exceeds {limit} states; lower the tape bound")
    states = list(owner)
    model = GameModel(states, ("verifier", "falsifier"), owner, edges, labels)
    phi = Coalition(frozenset({"verifier"}), Finally(Prop("accept")))
    return HardnessGame(model, "s0", "sF", phi)
