"""Characteristic one-counter parity games for QATL formulas.

``build_qatl_game(m, s, phi)`` returns a game whose entry is won by Verifier
from counter ``i`` iff ``m, s, i |= phi``; prepend the counter value with
:func:`attach_initial_credit`. Sub-games are entered through 0-edges and are
never left again, so each is built once per (state, subformula, polarity) and
shared.
"""

from __future__ import annotations

from .formula import (Bool, Coalition, Constraint, Formula, Globally, Next, Not, Or,
                      Prop, Until, desugar, is_qatl, render)
from .model import GameModel
from .parity import GameBuilder, OneCounterParityGame, Player

__all__ = [
    "build_prop_gadget", "build_constraint_gadget", "dualize", "build_qatl_game",
    "attach_initial_credit", "NotQATLError", "Compiler",
]

V, F = Player.VERIFIER, Player.FALSIFIER


class NotQATLError(ValueError):
    pass


class Compiler:
    """Shared builder state for one game; vertices are created with a polarity.

    A vertex built under ``neg`` negations has its owner swapped ``neg`` times
    and its colour raised by ``neg``, which is exactly what dualizing the
    finished fragment ``neg`` times would do.
    """

    def __init__(self, m: GameModel, *, literal: bool = False, star: bool = False,
                 stretch: bool = False):
        self.m = m
        self.literal = literal
        self.star = star
        self.stretch = stretch
        self.b = GameBuilder()
        self.memo: dict[tuple[str, Formula, int], int] = {}
        self.automata: list[tuple[int, int]] = []  # (states, colours) per product

    def vertex(self, owner: Player, color: int, neg: int, name: str, labels=frozenset()) -> int:
        if neg % 2:
            owner = owner.opponent
        tag = "~" * neg
        return self.b.vertex(owner, color + neg, f"{tag}{name}", labels)

    def loop(self, owner: Player, color: int, neg: int, name: str) -> int:
        v = self.vertex(owner, color, neg, name)
        self.b.edge(v, 0, v)
        return v

    def game(self, entry: int) -> OneCounterParityGame:
        return self.b.build(entry)

    # ---------------------------------------------------------------- dispatch

    def state(self, s: str, f: Formula, neg: int = 0) -> int:
        # constants and counter gadgets do not depend on the model state
        key = ("", f, neg) if isinstance(f, (Bool, Constraint)) else (s, f, neg)
        if key not in self.memo:
            self.memo[key] = self._build(s, f, neg)
        return self.memo[key]

    def _build(self, s: str, f: Formula, neg: int) -> int:
        if isinstance(f, Bool):
            return self.loop(V, 0 if f.value else 1, neg, f"{render(f)}@{s}")
        if isinstance(f, Prop):
            return self.loop(V, 0 if f.name in self.m.labels[s] else 1, neg, f"{f.name}@{s}")
        if isinstance(f, Constraint):
            return self.constraint(f, neg)
        if isinstance(f, Not):
            return self.state(s, f.sub, neg + 1)
        if isinstance(f, Or):
            v = self.vertex(V, 0, neg, f"or:{render(f)}@{s}")
            self.b.edge(v, 0, self.state(s, f.left, neg))
            self.b.edge(v, 0, self.state(s, f.right, neg))
            return v
        if isinstance(f, Coalition):
            unknown = f.agents - set(self.m.players)
            if unknown:
                raise ValueError(f"unknown agents {sorted(unknown)} in {render(f)}")
            body = f.sub
            if not self.star:
                if isinstance(body, Next):
                    return self.next(s, f, neg)
                if isinstance(body, Globally):
                    return self.globally(s, f, neg)
                if isinstance(body, Until):
                    return self.until(s, f, neg)
            from .mcgame_qatlstar import coalition_product
            return coalition_product(self, s, f, neg)
        raise NotQATLError(f"cannot build a game for {render(f)}")

    # ----------------------------------------------------------------- gadgets

    def constraint(self, f: Constraint, neg: int) -> int:
        c = f.constant
        if f.rel == "mod":
            k = f.modulus
            self.b.need_period(k)
            u = [self.loop(V if j < k - 1 else F, 1 if j < k - 1 else 0, neg,
                           f"r mod {k} = {c % k}:u{j}") for j in range(k)]
            for j in range(k):
                self.b.edge(u[j], -1, u[j - 1] if j else u[k - 1])
            return u[(c - 1) % k]
        if f.rel == "<":
            length = c
        elif f.rel == "<=":
            length = c + 1
        else:
            raise NotQATLError(f"constraint {render(f)} is not desugared")
        if length <= 0:
            return self.loop(V, 1, neg, f"{render(f)}:false")
        chain = [self.loop(F, 1 if j == length else 0, neg, f"{render(f)}:v{j}")
                 for j in range(length + 1)]
        for a, b in zip(chain, chain[1:]):
            self.b.edge(a, -1, b)
        return chain[0]

    def main_copy(self, s: str, agents: frozenset, color: int, neg: int, tag: str) -> dict[str, int]:
        main = {}
        for t in self.m.reachable(s):
            own = V if self.m.owner[t] in agents else F
            main[t] = self.vertex(own, color, neg, f"{tag}:main:{t}")
        return main

    def next(self, s: str, f: Coalition, neg: int) -> int:
        own = V if self.m.owner[s] in f.agents else F
        v = self.vertex(own, 0, neg, f"{render(f)}@{s}")
        for t in self.m.out(s):
            self.b.edge(v, t.weight, self.state(t.target, f.sub.sub, neg))
        return v

    def globally(self, s: str, f: Coalition, neg: int) -> int:
        tag = f"{render(f)}@{s}"
        phi = f.sub.sub
        main = self.main_copy(s, f.agents, 0, neg, tag)
        for x, v in main.items():
            for t in self.m.out(x):
                mid = self.vertex(F, 0, neg, f"{tag}:check:{x}->{t.target}")
                self.b.edge(v, t.weight, mid)
                self.b.edge(mid, 0, main[t.target])
                self.b.edge(mid, 0, self.state(t.target, phi, neg))
        if self.literal:
            return main[s]
        pro = self.vertex(F, 0, neg, f"{tag}:check0")
        self.b.edge(pro, 0, main[s])
        self.b.edge(pro, 0, self.state(s, phi, neg))
        return pro

    def until(self, s: str, f: Coalition, neg: int) -> int:
        tag = f"{render(f)}@{s}"
        left, right = f.sub.left, f.sub.right
        main = self.main_copy(s, f.agents, 1, neg, tag)

        def step(x: str, target: int) -> int:
            claim = self.vertex(V, 1, neg, f"{tag}:claim:{x}")
            check = self.vertex(F, 1, neg, f"{tag}:check:{x}")
            self.b.edge(claim, 0, self.state(x, right, neg))
            self.b.edge(claim, 0, check)
            self.b.edge(check, 0, self.state(x, left, neg))
            self.b.edge(check, 0, target)
            return claim

        for x, v in main.items():
            for t in self.m.out(x):
                self.b.edge(v, t.weight, step(t.target, main[t.target]))
        if self.literal:
            return main[s]
        return step(s, main[s])


# ------------------------------------------------------------- public builders

def build_prop_gadget(m: GameModel, s: str, p: str) -> OneCounterParityGame:
    c = Compiler(m)
    return c.game(c.state(s, Prop(p)))


def build_constraint_gadget(rel: str, c: int, k: int | None = None) -> OneCounterParityGame:
    if rel == "mod" and (k is None or k < 1):
        raise ValueError("modulus must be at least 1")
    comp = Compiler(GameModel(("_",), ("_",), {"_": "_"}, (("_", 0, "_"),)))
    return comp.game(comp.constraint(Constraint(rel, c, k), 0))


def dualize(g: OneCounterParityGame) -> OneCounterParityGame:
    """Swap every owner and add one to every colour."""
    b = GameBuilder()
    b.embed(g)
    b.dualize()
    return b.build(g.entry)


def build_qatl_game(m: GameModel, s: str, phi: Formula, *,
                    literal: bool = False) -> OneCounterParityGame:
    """Game for a QATL state formula; ``literal`` drops the position-0 checks."""
    if not is_qatl(phi):
        raise NotQATLError(f"{render(phi)} is not a QATL state formula")
    if s not in m.owner:
        raise ValueError(f"unknown state {s!r}")
    c = Compiler(m, literal=literal)
    return c.game(c.state(s, desugar(phi)))


def attach_initial_credit(g: OneCounterParityGame, i: int, *,
                          succinct: bool = False) -> OneCounterParityGame:
    """Prepend a ramp raising the counter from 0 to ``i`` before ``g.entry``."""
    if i < 0:
        raise ValueError("initial credit must be non-negative")
    b = GameBuilder()
    base = b.embed(g)
    entry = base + g.entry
    if succinct or i == 0:
        start = b.vertex(V, 0, f"credit:{i}")
        b.edge(start, i, entry)
    else:
        ramp = [b.vertex(V, 0, f"credit:{j}") for j in range(i)]
        for a, c in zip(ramp, ramp[1:] + [entry]):
            b.edge(a, 1, c)
        start = ramp[0]
    return b.build(start, min_cap=max(g.min_cap, i))
