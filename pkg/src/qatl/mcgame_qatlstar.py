"""Games for QATL* coalition formulas: the model, labelled by Verifier's claims,
in product with a deterministic parity automaton for the path formula.

Every model step is split in three: the owner's move, Verifier's claim of
which fresh propositions hold at the target, and Falsifier's chance to
challenge one claimed truth value by jumping into the game for that state
subformula (or its dual). The automaton reads the claim when it leaves the
challenge vertex, so it steps on every third vertex.
"""

from __future__ import annotations

from collections import deque
from dataclasses import replace
from itertools import chain, combinations

from .automata import DPA, ltl_to_dpa, stretch_dpa
from .formula import (And, Bool, Coalition, Constraint, Formula, Implies, Not, Or, Prop,
                      desugar, is_state_formula, propositions, render, substitute_fresh)
from .mcgame_qatl import Compiler
from .model import GameModel
from .parity import OneCounterParityGame, Player

__all__ = ["build_qatlstar_game", "build_coalition_game_star", "coalition_product",
           "admissible_claims"]

V, F = Player.VERIFIER, Player.FALSIFIER


def _subsets(items):
    items = sorted(items)
    return [frozenset(c) for c in chain.from_iterable(
        combinations(items, k) for k in range(len(items) + 1))]


def admissible_claims(m: GameModel, t: str, fresh, original) -> list[frozenset[str]]:
    """Letters Verifier may claim at ``t``: fresh propositions are free, the
    original ones must match the label of ``t``."""
    fixed = m.labels[t] & frozenset(original)
    return [fixed | c for c in _subsets(fresh)]


def coalition_product(comp: Compiler, s: str, f: Coalition, neg: int) -> int:
    m = comp.m
    ltl, binding = substitute_fresh(f.sub, include_props=comp.literal)
    fresh = sorted(binding)
    props = sorted(propositions(ltl))
    original = [p for p in props if p not in binding]
    d = ltl_to_dpa(ltl, props)
    comp.automata.append((len(d), d.n_colors))
    tag = f"{render(f)}@{s}"

    def challenges(t: str, claim: frozenset[str]) -> list[int]:
        out = []
        for p in fresh:
            psi = binding[p]
            out.append(comp.state(t, psi, neg if p in claim else neg + 1))
        return out

    if comp.stretch:
        return _product_stretched(comp, s, f, neg, d, fresh, original, challenges, tag)

    index: dict[tuple, int] = {}
    todo: deque = deque()

    def get(key, make):
        if key not in index:
            index[key] = make()
            todo.append(key)
        return index[key]

    def main(t, q):
        own = V if m.owner[t] in f.agents else F
        return get(("main", t, q), lambda: comp.vertex(own, d.color[q], neg, f"{tag}:main:{t}|{q}"))

    def spec(t, q):
        return get(("spec", t, q), lambda: comp.vertex(V, d.color[q], neg, f"{tag}:spec:{t}|{q}"))

    def choice(t, claim, q):
        name = f"{tag}:claim:{t}{{{','.join(sorted(claim))}}}|{q}"
        return get(("choice", t, claim, q),
                   lambda: comp.vertex(F, d.color[q], neg, name, claim))

    entry = spec(s, d.initial)
    while todo:
        key = todo.popleft()
        v = index[key]
        if key[0] == "main":
            _, t, q = key
            for tr in m.out(t):
                comp.b.edge(v, tr.weight, spec(tr.target, q))
        elif key[0] == "spec":
            _, t, q = key
            for claim in admissible_claims(m, t, fresh, original):
                comp.b.edge(v, 0, choice(t, claim, q))
        else:
            _, t, claim, q = key
            comp.b.edge(v, 0, main(t, d.step(q, claim)))
            for c in challenges(t, claim):
                comp.b.edge(v, 0, c)
    return entry


def _product_stretched(comp, s, f, neg, d: DPA, fresh, original, challenges, tag) -> int:
    """Same game, built by running a materialized stretched automaton over the
    three-phase skeleton; every skeleton vertex feeds it a letter."""
    m = comp.m
    sd = stretch_dpa(d, 3, phase=1)
    empty = frozenset()
    index: dict[tuple, int] = {}
    todo: deque = deque()

    def get(node, q):
        key = (node, q)
        if key not in index:
            kind, t = node[0], node[1]
            if kind == "main":
                own = V if m.owner[t] in f.agents else F
                lab = empty
            elif kind == "spec":
                own, lab = V, empty
            else:
                own, lab = F, node[2]
            name = f"{tag}:{kind}:{t}|{q}"
            index[key] = comp.vertex(own, sd.color[q], neg, name, lab if kind == "choice" else empty)
            todo.append((key, lab))
        return index[key]

    entry = get(("spec", s), sd.initial)
    while todo:
        (node, q), lab = todo.popleft()
        v = index[(node, q)]
        q2 = sd.step(q, lab)
        kind, t = node[0], node[1]
        if kind == "main":
            for tr in m.out(t):
                comp.b.edge(v, tr.weight, get(("spec", tr.target), q2))
        elif kind == "spec":
            for claim in admissible_claims(m, t, fresh, original):
                comp.b.edge(v, 0, get(("choice", t, claim), q2))
        else:
            comp.b.edge(v, 0, get(("main", t), q2))
            for c in challenges(t, node[2]):
                comp.b.edge(v, 0, c)
    return entry


def build_coalition_game_star(m: GameModel, s: str, agents, path: Formula, *,
                              literal: bool = False, stretch: bool = False) -> OneCounterParityGame:
    return build_qatlstar_game(m, s, Coalition(frozenset(agents), path),
                               literal=literal, stretch=stretch)


def build_qatlstar_game(m: GameModel, s: str, phi: Formula, *, literal: bool = False,
                        stretch: bool = False, stats: dict | None = None) -> OneCounterParityGame:
    """Game for a QATL* state formula; every coalition goes through the product.
    ``stats["automata"]`` receives the (states, colours) of each automaton."""
    if not is_state_formula(phi):
        raise ValueError(f"{render(phi)} is not a state formula")
    if s not in m.owner:
        raise ValueError(f"unknown state {s!r}")
    comp = Compiler(m, literal=literal, star=True, stretch=stretch)
    g = comp.game(comp.state(s, _desugar_state(phi)))
    if stats is not None:
        stats["automata"] = list(comp.automata)
    return g


def _desugar_state(phi: Formula) -> Formula:
    """Desugar the state layer only; path formulas keep their LTL operators,
    with state subformulas below them desugared recursively."""
    if isinstance(phi, (Bool, Prop, Constraint)):
        return desugar(phi)
    if isinstance(phi, Not):
        inner = _desugar_state(phi.sub)
        return inner.sub if isinstance(inner, Not) else Not(inner)
    if isinstance(phi, Or):
        return Or(_desugar_state(phi.left), _desugar_state(phi.right))
    if isinstance(phi, And):
        return _desugar_state(Not(Or(Not(phi.left), Not(phi.right))))
    if isinstance(phi, Implies):
        return Or(_desugar_state(Not(phi.left)), _desugar_state(phi.right))
    if isinstance(phi, Coalition):
        return Coalition(phi.agents, _desugar_path(phi.sub))
    raise ValueError(f"{render(phi)} is not a state formula")


def _desugar_path(f: Formula) -> Formula:
    if is_state_formula(f):
        return _desugar_state(f)
    kids = f.children()
    if len(kids) == 1:
        return replace(f, sub=_desugar_path(kids[0]))
    return replace(f, left=_desugar_path(kids[0]), right=_desugar_path(kids[1]))
