"""One-counter game models under VASS semantics, and their text format.

Model file format, one declaration per line (``#`` starts a comment)::

    players: ctrl, env
    unit                                  # optional: all weights in {-1,0,1}
    state s0 owner=env labels={}
    state coin owner=env labels={Insert}
    edge s0 -> coin weight=0              # weight defaults to 0

A transition with weight ``w`` is enabled at counter ``i`` iff ``i + w >= 0``.
Every state needs an outgoing edge of weight >= 0 so that no play gets stuck.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

__all__ = [
    "WeightClass", "Transition", "Configuration", "GameModel", "ModelError",
    "load_model", "dump_model", "enabled_moves", "eval_constraint", "is_history",
    "expand_socg",
]


class ModelError(ValueError):
    pass


class WeightClass(Enum):
    UNIT = "unit"
    SUCCINCT = "succinct"


class Transition(NamedTuple):
    source: str
    weight: int
    target: str


class Configuration(NamedTuple):
    state: str
    counter: int


@dataclass(frozen=True)
class GameModel:
    states: tuple[str, ...]
    players: tuple[str, ...]
    owner: dict[str, str]
    transitions: tuple[Transition, ...]
    labels: dict[str, frozenset[str]] = field(default_factory=dict)
    weight_class: WeightClass = WeightClass.SUCCINCT
    _out: dict[str, tuple[Transition, ...]] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "players", tuple(self.players))
        object.__setattr__(self, "transitions", tuple(Transition(*t) for t in self.transitions))
        object.__setattr__(self, "labels",
                           {s: frozenset(self.labels.get(s, ())) for s in self.states})
        self._validate()
        out: dict[str, list[Transition]] = {s: [] for s in self.states}
        for t in self.transitions:
            out[t.source].append(t)
        object.__setattr__(self, "_out", {s: tuple(ts) for s, ts in out.items()})

    def _validate(self):
        if len(set(self.states)) != len(self.states):
            raise ModelError("duplicate state names")
        players = set(self.players)
        for s in self.states:
            if s not in self.owner:
                raise ModelError(f"state {s!r} has no owner")
            if self.owner[s] not in players:
                raise ModelError(f"state {s!r} is owned by unknown player {self.owner[s]!r}")
        known = set(self.states)
        for s in self.owner:
            if s not in known:
                raise ModelError(f"owner given for unknown state {s!r}")
        for t in self.transitions:
            for end in (t.source, t.target):
                if end not in known:
                    raise ModelError(f"edge refers to unknown state {end!r}")
            if self.weight_class is WeightClass.UNIT and t.weight not in (-1, 0, 1):
                raise ModelError(f"weight {t.weight} on {t.source} -> {t.target} in a unit model")
        safe = {t.source for t in self.transitions if t.weight >= 0}
        for s in self.states:
            if s not in safe:
                raise ModelError(f"state {s!r} is deadlock-capable (no outgoing edge of weight >= 0)")

    def out(self, state: str) -> tuple[Transition, ...]:
        return self._out[state]

    @property
    def max_abs_weight(self) -> int:
        return max((abs(t.weight) for t in self.transitions), default=0)

    def reachable(self, state: str) -> list[str]:
        """States reachable from ``state`` in the control graph, in discovery order."""
        seen = {state}
        order = [state]
        for s in order:
            for t in self._out[s]:
                if t.target not in seen:
                    seen.add(t.target)
                    order.append(t.target)
        return order


def enabled_moves(m: GameModel, c: Configuration) -> list[tuple[Transition, Configuration]]:
    if c.state not in m.owner:
        raise ModelError(f"unknown state {c.state!r}")
    return [(t, Configuration(t.target, c.counter + t.weight))
            for t in m.out(c.state) if c.counter + t.weight >= 0]


def is_history(m: GameModel, h: list[Configuration]) -> bool:
    """Check that consecutive configurations are joined by enabled transitions."""
    if any(c.counter < 0 for c in h):
        return False
    for a, b in zip(h, h[1:]):
        if not any(t.target == b.state and a.counter + t.weight == b.counter
                   for t in m.out(a.state)):
            return False
    return True


def eval_constraint(rel: str, constant: int, modulus: int | None, counter: int) -> bool:
    if rel == "<":
        return counter < constant
    if rel == "<=":
        return counter <= constant
    if rel == "=":
        return counter == constant
    if rel == ">":
        return counter > constant
    if rel == ">=":
        return counter >= constant
    if rel == "mod":
        if not modulus or modulus < 1:
            raise ValueError("modulus must be at least 1")
        return (counter - constant) % modulus == 0
    raise ValueError(f"unknown relation {rel!r}")


# ------------------------------------------------------------------ file format

_STATE = re.compile(r"state\s+(\S+)((?:\s+\w+=(?:\{[^}]*\}|\S+))*)\s*$")
_ATTR = re.compile(r"(\w+)=(\{[^}]*\}|\S+)")
_EDGE = re.compile(r"edge\s+(\S+)\s*->\s*(\S+)(?:\s+weight=([+-]?\d+))?\s*$")


def load_model(text: str) -> GameModel:
    players: list[str] | None = None
    unit = False
    states: list[str] = []
    owner: dict[str, str] = {}
    labels: dict[str, frozenset[str]] = {}
    edges: list[Transition] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            if line.startswith("players:"):
                players = [p.strip() for p in line[len("players:"):].split(",") if p.strip()]
            elif line == "unit":
                unit = True
            elif line.startswith("state"):
                m = _STATE.match(line)
                if not m:
                    raise ModelError("malformed state declaration")
                name = m.group(1)
                if name in owner:
                    raise ModelError(f"state {name!r} declared twice (two owners)")
                attrs = dict(_ATTR.findall(m.group(2)))
                if "owner" not in attrs:
                    raise ModelError(f"state {name!r} has no owner")
                states.append(name)
                owner[name] = attrs["owner"]
                lab = attrs.get("labels", "{}").strip("{}")
                labels[name] = frozenset(p.strip() for p in lab.split(",") if p.strip())
            elif line.startswith("edge"):
                m = _EDGE.match(line)
                if not m:
                    raise ModelError("malformed edge declaration")
                edges.append(Transition(m.group(1), int(m.group(3) or 0), m.group(2)))
            else:
                raise ModelError(f"cannot parse {line!r}")
        except ModelError as e:
            raise ModelError(f"line {lineno}: {e}") from None
    if players is None:
        raise ModelError("missing 'players:' header")
    return GameModel(states, players, owner, edges, labels,
                     WeightClass.UNIT if unit else WeightClass.SUCCINCT)


def dump_model(m: GameModel) -> str:
    lines = [f"players: {', '.join(m.players)}"]
    if m.weight_class is WeightClass.UNIT:
        lines.append("unit")
    for s in m.states:
        lab = ",".join(sorted(m.labels[s]))
        lines.append(f"state {s} owner={m.owner[s]} labels={{{lab}}}")
    for t in m.transitions:
        lines.append(f"edge {t.source} -> {t.target} weight={t.weight}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------- succinct-to-unit expansion

def expand_socg(g):
    """Replace every edge of weight ``|w| > 1`` by a chain of ``|w|`` unit edges.

    Intermediate vertices belong to the owner of the edge's source and get the
    game's maximum colour. Decrement intermediates also get a 0-edge to a trap
    that the mover loses, so running out of counter mid-chain is fatal.
    """
    from .parity import GameBuilder, Player

    b = GameBuilder()
    top = max(g.color, default=0)
    base = b.embed(g, with_edges=False)
    traps: dict[Player, int] = {}

    def trap(mover: Player) -> int:
        if mover not in traps:
            col = 1 if mover is Player.VERIFIER else 0
            v = b.vertex(Player.VERIFIER, col, f"trap:{mover.name.lower()}-loses")
            b.edge(v, 0, v)
            traps[mover] = v
        return traps[mover]

    for u, w, v in g.edges:
        if abs(w) <= 1:
            b.edge(base + u, w, base + v)
            continue
        step = 1 if w > 0 else -1
        mover = g.owner[u]
        prev = base + u
        for k in range(abs(w) - 1):
            x = b.vertex(mover, top, f"chain:{u}->{v}#{k + 1}")
            b.edge(prev, step, x)
            if step < 0:
                b.edge(x, 0, trap(mover))
            prev = x
        b.edge(prev, step, base + v)
    b.period = g.period
    return b.build(base + g.entry, min_cap=g.min_cap)
