"""LTL to Buchi to parity automata, and exact tests on ultimately periodic words.

Letters are frozensets of proposition names. Parity acceptance is min-even,
as for games.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import chain, combinations
from math import factorial

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .formula import (And, Bool, Coalition, Constraint, Finally, Formula, Globally,
                      Implies, Next, Not, Or, Prop, Until, propositions)

__all__ = [
    "LassoWord", "NBA", "DPA", "AutomatonError",
    "ltl_to_nba", "nba_to_dpa", "stretch_dpa", "ltl_to_dpa",
    "nba_accepts_lasso", "dpa_accepts_lasso", "ltl_eval_lasso",
    "pad_lasso", "all_letters", "dump_automaton", "dpa_size_bound",
]

Letter = frozenset


class AutomatonError(ValueError):
    pass


def all_letters(props) -> list[Letter]:
    props = sorted(props)
    return [frozenset(c) for c in chain.from_iterable(
        combinations(props, k) for k in range(len(props) + 1))]


@dataclass(frozen=True)
class LassoWord:
    """The infinite word ``prefix . loop . loop . ...``."""

    prefix: tuple[Letter, ...]
    loop: tuple[Letter, ...]

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(frozenset(a) for a in self.prefix))
        object.__setattr__(self, "loop", tuple(frozenset(a) for a in self.loop))
        if not self.loop:
            raise AutomatonError("the loop of a lasso must be non-empty")

    def __len__(self) -> int:
        return len(self.prefix) + len(self.loop)

    def letter(self, i: int) -> Letter:
        return self.prefix[i] if i < len(self.prefix) else self.loop[i - len(self.prefix)]

    def next(self, i: int) -> int:
        return i + 1 if i + 1 < len(self) else len(self.prefix)

    def letters(self) -> set[Letter]:
        return set(self.prefix) | set(self.loop)


def pad_lasso(w: LassoWord, factor: int = 3) -> LassoWord:
    """Insert ``factor - 1`` empty letters after every letter."""
    pad = (frozenset(),) * (factor - 1)
    return LassoWord(tuple(x for a in w.prefix for x in (a, *pad)),
                     tuple(x for a in w.loop for x in (a, *pad)))


# ----------------------------------------------------------------- LTL on lassos

def ltl_eval_lasso(f: Formula, w: LassoWord) -> bool:
    """Truth of a pure LTL formula on ``w`` at position 0."""
    return _eval(f, w)[0]


def _eval(f: Formula, w: LassoWord) -> list[bool]:
    n = len(w)
    nxt = [w.next(i) for i in range(n)]
    if isinstance(f, Bool):
        return [f.value] * n
    if isinstance(f, Prop):
        return [f.name in w.letter(i) for i in range(n)]
    if isinstance(f, Not):
        return [not x for x in _eval(f.sub, w)]
    if isinstance(f, (Or, And, Implies)):
        a, b = _eval(f.left, w), _eval(f.right, w)
        if isinstance(f, Or):
            return [x or y for x, y in zip(a, b)]
        if isinstance(f, And):
            return [x and y for x, y in zip(a, b)]
        return [not x or y for x, y in zip(a, b)]
    if isinstance(f, Next):
        a = _eval(f.sub, w)
        return [a[nxt[i]] for i in range(n)]
    if isinstance(f, (Until, Finally)):
        a = _eval(f.left, w) if isinstance(f, Until) else [True] * n
        b = _eval(f.right if isinstance(f, Until) else f.sub, w)
        val = [False] * n
        for _ in range(n + 1):
            val = [b[i] or (a[i] and val[nxt[i]]) for i in range(n)]
        return val
    if isinstance(f, Globally):
        a = _eval(f.sub, w)
        val = [True] * n
        for _ in range(n + 1):
            val = [a[i] and val[nxt[i]] for i in range(n)]
        return val
    raise AutomatonError(f"not an LTL formula: {f}")


# ------------------------------------------------------------------------ NBA

@dataclass(frozen=True, eq=False)
class NBA:
    props: tuple[str, ...]
    n_states: int
    initial: frozenset[int]
    accepting: frozenset[int]
    delta: dict[tuple[int, Letter], frozenset[int]]
    names: tuple = ()

    def succ(self, q: int, a: Letter) -> frozenset[int]:
        return self.delta.get((q, a), frozenset())

    @property
    def letters(self) -> list[Letter]:
        return all_letters(self.props)

    def is_deterministic(self) -> bool:
        return len(self.initial) <= 1 and all(len(t) <= 1 for t in self.delta.values())


# Formulas in negation normal form, as tuples:
# ("tt",) ("ff",) ("p", x) ("np", x) ("and", a, b) ("or", a, b) ("X", a) ("U", a, b) ("R", a, b)

def _nnf(f: Formula, neg: bool = False) -> tuple:
    if isinstance(f, Bool):
        return ("tt",) if f.value != neg else ("ff",)
    if isinstance(f, Prop):
        return ("np", f.name) if neg else ("p", f.name)
    if isinstance(f, Not):
        return _nnf(f.sub, not neg)
    if isinstance(f, Or):
        return ("and" if neg else "or", _nnf(f.left, neg), _nnf(f.right, neg))
    if isinstance(f, And):
        return ("or" if neg else "and", _nnf(f.left, neg), _nnf(f.right, neg))
    if isinstance(f, Implies):
        return ("and" if neg else "or", _nnf(f.left, not neg), _nnf(f.right, neg))
    if isinstance(f, Next):
        return ("X", _nnf(f.sub, neg))
    if isinstance(f, Until):
        return ("R" if neg else "U", _nnf(f.left, neg), _nnf(f.right, neg))
    if isinstance(f, Finally):
        return ("R", ("ff",), _nnf(f.sub, True)) if neg else ("U", ("tt",), _nnf(f.sub, False))
    if isinstance(f, Globally):
        return ("U", ("tt",), _nnf(f.sub, True)) if neg else ("R", ("ff",), _nnf(f.sub, False))
    if isinstance(f, (Coalition, Constraint)):
        raise AutomatonError(f"not an LTL formula: {f}")
    raise AutomatonError(f"unknown node {f!r}")


def _untils(g: tuple, acc: list) -> list:
    if g[0] == "U" and g not in acc:
        acc.append(g)
    for h in g[1:]:
        if isinstance(h, tuple):
            _untils(h, acc)
    return acc


def _covers(obligations: frozenset):
    """Expand a set of obligations into (pos, neg, next, delayed untils) covers."""
    out = []
    stack = [(list(obligations), frozenset(), frozenset(), frozenset(), frozenset(), frozenset())]
    while stack:
        todo, done, pos, neg, nxt, delayed = stack.pop()
        if not todo:
            out.append((pos, neg, nxt, delayed))
            continue
        g, todo = todo[0], todo[1:]
        if g in done:
            stack.append((todo, done, pos, neg, nxt, delayed))
            continue
        done = done | {g}
        op = g[0]
        if op == "tt":
            stack.append((todo, done, pos, neg, nxt, delayed))
        elif op == "ff":
            continue
        elif op == "p":
            if g[1] not in neg:
                stack.append((todo, done, pos | {g[1]}, neg, nxt, delayed))
        elif op == "np":
            if g[1] not in pos:
                stack.append((todo, done, pos, neg | {g[1]}, nxt, delayed))
        elif op == "and":
            stack.append(([g[1], g[2], *todo], done, pos, neg, nxt, delayed))
        elif op == "or":
            stack.append(([g[2], *todo], done, pos, neg, nxt, delayed))
            stack.append(([g[1], *todo], done, pos, neg, nxt, delayed))
        elif op == "X":
            stack.append((todo, done, pos, neg, nxt | {g[1]}, delayed))
        elif op == "U":
            stack.append(([g[1], *todo], done, pos, neg, nxt | {g}, delayed | {g}))
            stack.append(([g[2], *todo], done, pos, neg, nxt, delayed))
        elif op == "R":
            stack.append(([g[2], *todo], done, pos, neg, nxt | {g}, delayed))
            stack.append(([g[1], g[2], *todo], done, pos, neg, nxt, delayed))
    return out


def ltl_to_nba(f: Formula, props=None) -> NBA:
    """Tableau construction: generalized Buchi over obligation sets, then degeneralized.

    ``props`` fixes the alphabet; it defaults to the propositions of ``f``.
    """
    root = _nnf(f)
    props = tuple(sorted(set(props) if props is not None else propositions(f)))
    if not propositions(f) <= set(props):
        raise AutomatonError("formula mentions propositions outside the alphabet")
    letters = all_letters(props)
    untils = _untils(root, [])
    k = len(untils)

    start = frozenset({root})
    gstates = {start: 0}
    order = [start]
    gtrans: list[list[tuple[Letter, int, int]]] = []  # (letter, target, next-counter-mask)
    for s in order:
        edges = []
        for pos, neg, nxt, delayed in _covers(s):
            tgt = frozenset(nxt)
            if tgt not in gstates:
                gstates[tgt] = len(order)
                order.append(tgt)
            ok = frozenset(i for i, u in enumerate(untils) if u not in delayed)
            for a in letters:
                if pos <= a and not (neg & a):
                    edges.append((a, gstates[tgt], ok))
        gtrans.append(edges)

    # degeneralize: (state, i) with i in 0..k, accepting when i == k
    levels = max(k, 0)
    index: dict[tuple[int, int], int] = {}
    names = []
    delta: dict[tuple[int, Letter], set[int]] = {}
    queue = deque()

    def node(s, i):
        key = (s, i)
        if key not in index:
            index[key] = len(names)
            names.append(key)
            queue.append(key)
        return index[key]

    node(0, 0 if k else levels)
    while queue:
        s, i = queue.popleft()
        src = index[(s, i)]
        for a, t, ok in gtrans[s]:
            if k == 0:
                j = 0
            else:
                j = 0 if i == k else i
                while j < k and j in ok:
                    j += 1
            delta.setdefault((src, a), set()).add(node(t, j))
    accepting = {index[key] for key in names if key[1] == levels}
    return _trim(NBA(props, len(names), frozenset({0}), frozenset(accepting),
                     {key: frozenset(v) for key, v in delta.items()}, tuple(names)))


def _scc(n: int, edges) -> tuple[np.ndarray, set[int]]:
    rows = [u for u, _ in edges]
    cols = [v for _, v in edges]
    g = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    _, comp = connected_components(g, directed=True, connection="strong")
    sizes = np.bincount(comp, minlength=n)
    cyclic = {u for u, v in edges if u == v} | {v for v in range(n) if sizes[comp[v]] > 1}
    return comp, cyclic


def _trim(b: NBA) -> NBA:
    """Drop states that are unreachable or cannot reach an accepting cycle."""
    edges = {(q, t) for (q, _), ts in b.delta.items() for t in ts}
    n = b.n_states
    if n == 0:
        return b
    comp, cyclic = _scc(n, edges)
    good = {q for q in b.accepting if q in cyclic}
    rev: dict[int, list[int]] = {}
    for u, v in edges:
        rev.setdefault(v, []).append(u)
    live = set(good)
    stack = list(good)
    while stack:
        v = stack.pop()
        for u in rev.get(v, ()):
            if u not in live:
                live.add(u)
                stack.append(u)
    fwd: dict[int, list[int]] = {}
    for u, v in edges:
        fwd.setdefault(u, []).append(v)
    reach = {q for q in b.initial if q in live}
    stack = list(reach)
    while stack:
        v = stack.pop()
        for u in fwd.get(v, ()):
            if u in live and u not in reach:
                reach.add(u)
                stack.append(u)
    keep = sorted(reach, key=lambda q: (q not in b.initial, q))
    ren = {q: i for i, q in enumerate(keep)}
    delta = {}
    for (q, a), ts in b.delta.items():
        if q in ren:
            tt = frozenset(ren[t] for t in ts if t in ren)
            if tt:
                delta[(ren[q], a)] = tt
    names = tuple(b.names[q] for q in keep) if b.names else ()
    return NBA(b.props, len(keep), frozenset(ren[q] for q in b.initial if q in ren),
               frozenset(ren[q] for q in b.accepting if q in ren), delta, names)


def nba_accepts_lasso(b: NBA, w: LassoWord) -> bool:
    """Search the product of ``b`` with the lasso positions for an accepting cycle."""
    _check_letters(b.props, w)
    index: dict[tuple[int, int], int] = {}
    order: list[tuple[int, int]] = []
    edges = []
    for q in b.initial:
        index[(q, 0)] = len(order)
        order.append((q, 0))
    for q, i in order:
        src = index[(q, i)]
        j = w.next(i)
        for t in b.succ(q, w.letter(i)):
            if (t, j) not in index:
                index[(t, j)] = len(order)
                order.append((t, j))
            edges.append((src, index[(t, j)]))
    if not order:
        return False
    _, cyclic = _scc(len(order), edges)
    return any(order[v][0] in b.accepting for v in cyclic)


def _check_letters(props, w: LassoWord) -> None:
    known = set(props)
    for a in w.letters():
        if not a <= known:
            raise AutomatonError(f"letter {set(a)} is outside the alphabet {sorted(known)}")


# ------------------------------------------------------------------------ DPA

@dataclass(frozen=True, eq=False)
class DPA:
    props: tuple[str, ...]
    delta: tuple[dict[Letter, int], ...]
    color: tuple[int, ...]
    initial: int = 0
    names: tuple = field(default=(), repr=False)

    def __post_init__(self):
        letters = set(all_letters(self.props))
        for q, row in enumerate(self.delta):
            if set(row) != letters:
                raise AutomatonError(f"transition function not total at state {q}")

    def __len__(self) -> int:
        return len(self.delta)

    def step(self, q: int, a: Letter) -> int:
        return self.delta[q][a]

    @property
    def n_colors(self) -> int:
        return len(set(self.color))


def dpa_accepts_lasso(d: DPA, w: LassoWord) -> bool:
    _check_letters(d.props, w)
    q = d.initial
    for a in w.prefix:
        q = d.step(q, a)
    seen: dict[tuple[int, int], int] = {}
    trace: list[int] = []
    pos = 0
    while (q, pos) not in seen:
        seen[(q, pos)] = len(trace)
        trace.append(q)
        q = d.step(q, w.loop[pos])
        pos = (pos + 1) % len(w.loop)
    cycle = trace[seen[(q, pos)]:]
    return min(d.color[x] for x in cycle) % 2 == 0


def dpa_size_bound(m: int) -> tuple[int, int]:
    """State and colour bounds for determinizing an ``m``-state NBA."""
    return 2 * m ** m * factorial(m), 2 * m


def nba_to_dpa(b: NBA) -> DPA:
    """Safra-tree determinization with nodes ranked by age, then minimized.

    A deterministic input is only completed with a rejecting sink.
    """
    letters = all_letters(b.props)
    if b.is_deterministic():
        d = _complete_deterministic(b, letters)
    else:
        d = _safra(b, letters)
    d = _minimize(d)
    states, colors = dpa_size_bound(b.n_states)
    assert len(d) <= max(states, 1), (len(d), states)
    assert d.n_colors <= max(colors, 2), (d.n_colors, colors)
    return d


def _complete_deterministic(b: NBA, letters) -> DPA:
    n = b.n_states
    if n == 0:
        return DPA(b.props, ({a: 0 for a in letters},), (1,))
    sink = n
    delta = []
    for q in range(n):
        delta.append({a: next(iter(b.succ(q, a)), sink) for a in letters})
    delta.append({a: sink for a in letters})
    color = [0 if q in b.accepting else 1 for q in range(n)] + [1]
    return DPA(b.props, tuple(delta), tuple(color), next(iter(b.initial)))


def _safra_step(b: NBA, tree: tuple, a: Letter):
    """One Safra step; ``tree`` is a tuple of (label, parent) in age order."""
    m = b.n_states
    labels = [set(lab) for lab, _ in tree]
    parent = [p for _, p in tree]
    for i in range(len(tree)):
        hit = labels[i] & b.accepting
        if hit:
            labels.append(set(hit))
            parent.append(i)
    labels = [set().union(*(b.succ(q, a) for q in lab)) for lab in labels]
    n = len(labels)
    for i in range(n):
        p = parent[i]
        if p >= 0:
            labels[i] &= labels[p]
            for j in range(p + 1, i):
                if parent[j] == p:
                    labels[i] -= labels[j]
    alive = [bool(lab) for lab in labels]
    events: list[int] = [2 * (i + 1) - 3 for i in range(n) if not alive[i] and i > 0]
    if not alive[0]:
        return None, 1
    for i in range(n):
        if not alive[i]:
            continue
        kids = [j for j in range(i + 1, n) if alive[j] and parent[j] == i]
        if kids and set().union(*(labels[j] for j in kids)) == labels[i]:
            events.append(2 * (i + 1) - 2)
            stack = kids
            while stack:
                j = stack.pop()
                if alive[j]:
                    alive[j] = False
                    events.append(2 * (j + 1) - 3)
                    stack.extend(x for x in range(j + 1, n) if alive[x] and parent[x] == j)
    ren = {}
    out = []
    for i in range(n):
        if alive[i]:
            ren[i] = len(out)
            out.append((frozenset(labels[i]), ren[parent[i]] if parent[i] >= 0 else -1))
    color = min(events) if events else 2 * m - 1
    return tuple(out), color


def _safra(b: NBA, letters) -> DPA:
    if not b.initial:
        return DPA(b.props, ({a: 0 for a in letters},), (1,))
    init = ((frozenset(b.initial), -1),)
    index = {(init, 0): 0}
    order = [(init, 0)]
    delta: list[dict[Letter, int]] = []
    cache: dict[tuple, tuple] = {}
    for tree, _ in order:
        row = {}
        for a in letters:
            key = (tree, a)
            if key not in cache:
                cache[key] = (None, 1) if tree is None else _safra_step(b, tree, a)
            nxt = cache[key]
            if nxt not in index:
                index[nxt] = len(order)
                order.append(nxt)
            row[a] = index[nxt]
        delta.append(row)
    color = tuple(c for _, c in order)
    return DPA(b.props, tuple(delta), color, 0, tuple(order))


def _minimize(d: DPA) -> DPA:
    """Moore partition refinement respecting colours, keeping reachable states only."""
    letters = all_letters(d.props)
    reach = [d.initial]
    seen = {d.initial}
    for q in reach:
        for a in letters:
            t = d.step(q, a)
            if t not in seen:
                seen.add(t)
                reach.append(t)
    block = {q: d.color[q] for q in reach}
    while True:
        sig = {q: (block[q], tuple(block[d.step(q, a)] for a in letters)) for q in reach}
        ids: dict[tuple, int] = {}
        new = {q: ids.setdefault(sig[q], len(ids)) for q in reach}
        if len(ids) == len(set(block.values())):
            block = new
            break
        block = new
    first: dict[int, int] = {}
    for q in reach:
        first.setdefault(block[q], q)
    # number blocks in discovery order so the initial state is 0
    order = sorted(first, key=lambda k: reach.index(first[k]))
    num = {k: i for i, k in enumerate(order)}
    delta = tuple({a: num[block[d.step(first[k], a)]] for a in letters} for k in order)
    color = tuple(d.color[first[k]] for k in order)
    return DPA(d.props, delta, color, num[block[d.initial]])


def ltl_to_dpa(f: Formula, props=None) -> DPA:
    return nba_to_dpa(ltl_to_nba(f, props))


def stretch_dpa(d: DPA, factor: int = 3, phase: int = 0) -> DPA:
    """Read a letter only at positions congruent to ``phase`` modulo ``factor``."""
    if factor < 1:
        raise AutomatonError("factor must be at least 1")
    if not 0 <= phase < factor:
        raise AutomatonError("phase must lie in [0, factor)")
    letters = all_letters(d.props)

    def sid(q, p):
        return q * factor + p

    delta = []
    color = []
    for q in range(len(d)):
        for p in range(factor):
            nxt = (p + 1) % factor
            delta.append({a: sid(d.step(q, a) if p == phase else q, nxt) for a in letters})
            color.append(d.color[q])
    return DPA(d.props, tuple(delta), tuple(color), sid(d.initial, 0))


def dump_automaton(x: NBA | DPA) -> str:
    """Plain-text listing for debugging."""
    lines = [f"AP: {len(x.props)} " + " ".join(f'"{p}"' for p in x.props)]

    def lt(a):
        return "{" + ",".join(sorted(a)) + "}"

    if isinstance(x, NBA):
        lines.append(f"States: {x.n_states}")
        lines.append("Start: " + " ".join(map(str, sorted(x.initial))))
        lines.append("Acceptance: Buchi " + " ".join(map(str, sorted(x.accepting))))
        for (q, a), ts in sorted(x.delta.items(), key=lambda kv: (kv[0][0], sorted(kv[0][1]))):
            for t in sorted(ts):
                lines.append(f"  {q} --{lt(a)}--> {t}")
    else:
        lines.append(f"States: {len(x)}")
        lines.append(f"Start: {x.initial}")
        lines.append("Acceptance: min-even parity")
        for q, row in enumerate(x.delta):
            lines.append(f"State: {q} color={x.color[q]}")
            for a, t in sorted(row.items(), key=lambda kv: sorted(kv[0])):
                lines.append(f"  --{lt(a)}--> {t}")
    return "\n".join(lines) + "\n"
