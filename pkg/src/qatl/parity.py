"""One-counter parity games, their finite truncations, and exact finite solvers.

Conventions: min-parity, Verifier (player 0) wins a play iff the least colour
seen infinitely often is even. An edge of weight ``w`` is enabled at counter
``c`` iff ``c + w >= 0``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from math import lcm

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

__all__ = [
    "Player", "Mode", "Verdict", "GameError", "StrategyError",
    "OneCounterParityGame", "GameBuilder", "FiniteArena", "SolveResult",
    "truncate", "solve_zielonka", "solve_spm", "solve_bracketed", "verify_strategy",
    "dump_game", "parse_game", "dump_arena", "random_arena",
]


class GameError(ValueError):
    pass


class StrategyError(ValueError):
    pass


class Player(IntEnum):
    VERIFIER = 0
    FALSIFIER = 1

    @property
    def opponent(self) -> Player:
        return Player(1 - self)


class Mode(Enum):
    OPTIMISTIC = "optimistic"
    PESSIMISTIC = "pessimistic"


class Verdict(Enum):
    VERIFIER_WINS = "verifier_wins"
    FALSIFIER_WINS = "falsifier_wins"
    UNKNOWN = "unknown"


@dataclass(frozen=True, eq=False)
class OneCounterParityGame:
    """A parity game on a finite graph whose edges update one counter.

    Vertices are ``0..n-1``. ``names`` carry provenance, ``labels`` (optional)
    are the proposition sets used by the QATL* product. ``period`` is a
    multiple of every modulus a constraint gadget tests, and ``min_cap`` is the
    smallest truncation bound that still represents the entry ramp exactly.
    """

    owner: tuple[Player, ...]
    color: tuple[int, ...]
    edges: tuple[tuple[int, int, int], ...]
    entry: int
    names: tuple[str, ...] = ()
    labels: tuple[frozenset[str], ...] | None = None
    period: int = 1
    min_cap: int = 0
    _out: tuple[tuple[tuple[int, int], ...], ...] = field(init=False, repr=False)

    def __post_init__(self):
        n = len(self.owner)
        if len(self.color) != n:
            raise GameError("owner and color sizes differ")
        if not self.names:
            object.__setattr__(self, "names", tuple(f"v{i}" for i in range(n)))
        if not 0 <= self.entry < n:
            raise GameError("entry is not a vertex")
        if any(c < 0 for c in self.color):
            raise GameError("colours must be non-negative")
        if self.period < 1:
            raise GameError("period must be positive")
        out: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for u, w, v in self.edges:
            if not (0 <= u < n and 0 <= v < n):
                raise GameError(f"edge {u}->{v} leaves the vertex set")
            out[u].append((w, v))
        for u in range(n):
            if not any(w >= 0 for w, _ in out[u]):
                raise GameError(f"vertex {self.names[u]!r} is deadlock-capable")
        object.__setattr__(self, "_out", tuple(tuple(o) for o in out))

    def __len__(self) -> int:
        return len(self.owner)

    def out(self, v: int) -> tuple[tuple[int, int], ...]:
        """Outgoing ``(weight, target)`` pairs."""
        return self._out[v]

    @property
    def max_color(self) -> int:
        return max(self.color, default=0)


class GameBuilder:
    """Mutable accumulator for a :class:`OneCounterParityGame`."""

    def __init__(self):
        self.owner: list[Player] = []
        self.color: list[int] = []
        self.names: list[str] = []
        self.labels: list[frozenset[str]] = []
        self.edges: list[tuple[int, int, int]] = []
        self.period = 1
        self.min_cap = 0

    def __len__(self) -> int:
        return len(self.owner)

    def vertex(self, owner: Player, color: int, name: str,
               labels: frozenset[str] = frozenset()) -> int:
        self.owner.append(Player(owner))
        self.color.append(color)
        self.names.append(name)
        self.labels.append(frozenset(labels))
        return len(self.owner) - 1

    def edge(self, u: int, w: int, v: int) -> None:
        self.edges.append((u, w, v))

    def need_period(self, k: int) -> None:
        self.period = lcm(self.period, k)

    def embed(self, g: OneCounterParityGame, with_edges: bool = True) -> int:
        """Copy ``g`` in and return the offset of its vertex 0."""
        base = len(self.owner)
        labels = g.labels or (frozenset(),) * len(g)
        for o, c, n, lab in zip(g.owner, g.color, g.names, labels):
            self.vertex(o, c, n, lab)
        if with_edges:
            self.edges.extend((base + u, w, base + v) for u, w, v in g.edges)
        self.need_period(g.period)
        self.min_cap = max(self.min_cap, g.min_cap)
        return base

    def dualize(self, start: int = 0, stop: int | None = None) -> None:
        """Swap owners and add one to every colour on ``[start, stop)``."""
        for v in range(start, len(self.owner) if stop is None else stop):
            self.owner[v] = self.owner[v].opponent
            self.color[v] += 1

    def build(self, entry: int, min_cap: int | None = None) -> OneCounterParityGame:
        labelled = any(self.labels)
        return OneCounterParityGame(
            tuple(self.owner), tuple(self.color), tuple(self.edges), entry,
            tuple(self.names), tuple(self.labels) if labelled else None,
            self.period, self.min_cap if min_cap is None else min_cap)


# ------------------------------------------------------------------ truncation

TOP_WIN = "TOP_WIN"
TOP_LOSE = "TOP_LOSE"


@dataclass(eq=False)
class FiniteArena:
    """Finite game graph obtained by bounding the counter.

    ``keys[i]`` says what vertex ``i`` stands for: ``(v, c)`` with ``c >= 0`` is
    game vertex ``v`` at counter ``c``; ``(v, -1 - r)`` is ``v`` at an
    abstract counter above the cap congruent to ``r`` modulo the period;
    ``("res", ...)`` tuples are resolution vertices, and the two strings
    ``TOP_WIN`` / ``TOP_LOSE`` are the absorbing sinks.
    """

    owner: list[int]
    color: list[int]
    succ: list[list[int]]
    keys: list = field(default_factory=list)
    mode: Mode | None = None
    cap: int | None = None
    index: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.owner)

    def id(self, v: int, counter: int) -> int | None:
        return self.index.get((v, counter))

    def check(self) -> None:
        for i, s in enumerate(self.succ):
            if not s:
                raise GameError(f"arena vertex {i} has no successor")
            if any(not 0 <= j < len(self.succ) for j in s):
                raise GameError(f"arena vertex {i} has a dangling successor")


def truncate(g: OneCounterParityGame, cap: int, mode: Mode, *,
             overflow: str = "sink", roots=None) -> FiniteArena:
    """Bound the counter of ``g`` by ``cap``.

    With ``overflow="sink"``, a move that lifts the counter above ``cap`` goes to
    ``TOP_WIN`` (optimistic) or ``TOP_LOSE`` (pessimistic). With
    ``overflow="omega"`` it goes to an abstract vertex that remembers only the
    counter modulo ``g.period``; decrements out of the abstract range are
    resolved by Verifier (optimistic) or Falsifier (pessimistic), who picks
    which concrete value above the cap the counter had. A real counter cannot
    fall forever, so a resolution inside a strongly connected part of ``g``
    without increments gets colour 0 or 1, losing for the resolver; all other
    colours are shifted up by 2 to make room.

    Only configurations reachable from ``roots`` (default: ``(entry, 0)``) are
    built.
    """
    if cap < 0:
        raise GameError("cap must be non-negative")
    if overflow not in ("sink", "omega"):
        raise ValueError(f"unknown overflow policy {overflow!r}")
    if overflow == "omega":
        drop = max((-w for _, w, _ in g.edges), default=0)
        if cap + 1 < drop:
            raise GameError(f"cap {cap} is too small for a decrement of {drop}")
    period = g.period
    resolver = Player.VERIFIER if mode is Mode.OPTIMISTIC else Player.FALSIFIER
    shift = 2 if overflow == "omega" else 0
    neutral = g.max_color + shift
    penalty = 1 - resolver
    falling = _falling_vertices(g) if overflow == "omega" else set()
    owner: list[int] = []
    color: list[int] = []
    succ: list[list[int]] = []
    keys: list = []
    index: dict = {}
    todo: deque = deque()

    def node(key, own, col):
        i = index.get(key)
        if i is None:
            i = index[key] = len(owner)
            owner.append(own)
            color.append(col)
            succ.append([])
            keys.append(key)
            todo.append(i)
        return i

    def conf(v, c):
        return node((v, c), g.owner[v], g.color[v] + shift)

    def above(v, c):
        # counter c > cap
        if overflow == "sink":
            return node(TOP_WIN, 0, 0) if mode is Mode.OPTIMISTIC else node(TOP_LOSE, 0, 1)
        return conf(v, -1 - c % period)

    for v, c in roots if roots is not None else [(g.entry, 0)]:
        if c > cap:
            raise GameError(f"root counter {c} exceeds cap {cap}")
        conf(v, c)

    while todo:
        i = todo.popleft()
        key = keys[i]
        if key in (TOP_WIN, TOP_LOSE):
            succ[i] = [i]
            continue
        if key[0] == "res":
            continue  # successors filled at creation
        v, c = key
        out = set()
        for w, t in g.out(v):
            if c >= 0:
                d = c + w
                if d < 0:
                    continue
                out.add(conf(t, d) if d <= cap else above(t, d))
            elif w >= 0:
                out.add(conf(t, -1 - (-1 - c + w) % period))
            else:
                r = -1 - c
                # concrete counters x > cap with x = r (mod period) for which x + w <= cap
                options = {conf(t, -1 - (r + w) % period)}
                x = cap + 1 + (r - cap - 1) % period
                while x + w <= cap:
                    if x + w >= 0:
                        options.add(conf(t, x + w))
                    x += period
                if len(options) == 1 and v not in falling:
                    out.add(options.pop())
                else:
                    rkey = ("res", v, r, w, t)
                    fresh = rkey not in index
                    j = node(rkey, resolver, penalty if v in falling else neutral)
                    if fresh:
                        succ[j] = sorted(options)
                    out.add(j)
        succ[i] = sorted(out)
    a = FiniteArena(owner, color, succ, keys, mode, cap, index)
    a.check()
    return a


def _falling_vertices(g: OneCounterParityGame) -> set[int]:
    """Vertices whose strongly connected component has no positive edge inside."""
    n = len(g)
    if not g.edges:
        return set(range(n))
    rows = [u for u, _, _ in g.edges]
    cols = [v for _, _, v in g.edges]
    m = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    _, comp = connected_components(m, directed=True, connection="strong")
    rising = {comp[u] for u, w, v in g.edges if w > 0 and comp[u] == comp[v]}
    return {v for v in range(n) if comp[v] not in rising}


# --------------------------------------------------------------------- solvers

@dataclass
class SolveResult:
    winner: list[int]
    strategy: dict[int, int] = field(default_factory=dict)

    def region(self, player: Player) -> set[int]:
        return {v for v, p in enumerate(self.winner) if p == player}


def _preds(succ: list[list[int]]) -> list[list[int]]:
    pred: list[list[int]] = [[] for _ in succ]
    for u, vs in enumerate(succ):
        for v in vs:
            pred[v].append(u)
    return pred


def _attractor(a: FiniteArena, pred, player: int, target: set[int], sub: set[int]):
    """Attractor of ``player`` to ``target`` inside ``sub``."""
    attr = set(target)
    strat: dict[int, int] = {}
    count: dict[int, int] = {}
    queue = deque(attr)
    owner, succ = a.owner, a.succ
    while queue:
        v = queue.popleft()
        for u in pred[v]:
            if u in attr or u not in sub:
                continue
            if owner[u] == player:
                attr.add(u)
                strat[u] = v
                queue.append(u)
            else:
                k = count.get(u)
                if k is None:
                    k = sum(1 for x in succ[u] if x in sub)
                k -= 1
                count[u] = k
                if k == 0:
                    attr.add(u)
                    queue.append(u)
    return attr, strat


def solve_zielonka(a: FiniteArena) -> SolveResult:
    """Recursive attractor algorithm; exact regions and positional strategies.

    Strongly connected components are solved bottom-up: each component first
    loses the vertices attracted to already decided regions, and only the
    rest goes through the recursion.
    """
    n = len(a)
    pred = _preds(a.succ)
    winner = [-1] * n
    strat: dict[int, int] = {}
    for comp in _components_bottom_up(a):
        sub = set(comp)
        for p in (0, 1):
            sub -= _attract_decided(a, pred, p, sub, winner, strat)
        if sub:
            win, s_sub = _solve(a, pred, sub)
            for p in (0, 1):
                for v in win[p]:
                    winner[v] = p
            strat.update(s_sub)
    return SolveResult(winner, strat)


def _attract_decided(a: FiniteArena, pred, p: int, sub: set[int], winner: list[int],
                     strat: dict[int, int]) -> set[int]:
    """Vertices of ``sub`` that ``p`` attracts into the region already won by
    ``p``. Works forwards from ``sub`` so shared sinks with many predecessors
    are not rescanned for every component."""
    owner, succ = a.owner, a.succ
    attr: set[int] = set()
    count: dict[int, int] = {}
    queue = deque()
    for v in sub:
        if owner[v] == p:
            x = next((x for x in succ[v] if winner[x] == p), None)
            if x is not None:
                attr.add(v)
                strat[v] = x
                queue.append(v)
        else:
            k = sum(1 for x in succ[v] if winner[x] != p)
            count[v] = k
            if k == 0:
                attr.add(v)
                queue.append(v)
    while queue:
        v = queue.popleft()
        winner[v] = p
        for u in pred[v]:
            if u in attr or u not in sub:
                continue
            if owner[u] == p:
                attr.add(u)
                strat[u] = v
                queue.append(u)
            else:
                count[u] -= 1
                if count[u] == 0:
                    attr.add(u)
                    queue.append(u)
    return attr


def _components_bottom_up(a: FiniteArena) -> list[list[int]]:
    """Strongly connected components, each listed after all components it can reach."""
    n = len(a)
    rows = np.fromiter((u for u, s in enumerate(a.succ) for _ in s), dtype=np.int64)
    cols = np.fromiter((v for s in a.succ for v in s), dtype=np.int64)
    m = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    k, comp = connected_components(m, directed=True, connection="strong")
    members: list[list[int]] = [[] for _ in range(k)]
    for v, c in enumerate(comp.tolist()):
        members[c].append(v)
    cr, cc = comp[rows], comp[cols]
    cross = cr != cc
    pairs = set(zip(cr[cross].tolist(), cc[cross].tolist()))
    out_deg = [0] * k
    rev: list[list[int]] = [[] for _ in range(k)]
    for x, y in pairs:
        out_deg[x] += 1
        rev[y].append(x)
    ready = [c for c in range(k) if out_deg[c] == 0]
    order = []
    while ready:
        c = ready.pop()
        order.append(members[c])
        for x in rev[c]:
            out_deg[x] -= 1
            if out_deg[x] == 0:
                ready.append(x)
    return order


def _solve(a, pred, sub):
    win: tuple[set[int], set[int]] = (set(), set())
    strat: dict[int, int] = {}
    while sub:
        d = min(a.color[v] for v in sub)
        p = d % 2
        top = {v for v in sub if a.color[v] == d}
        attr, s_attr = _attractor(a, pred, p, top, sub)
        w1, strat1 = _solve(a, pred, sub - attr)
        if not w1[1 - p]:
            win[p].update(sub)
            strat.update(strat1)
            strat.update(s_attr)
            for v in top:
                if a.owner[v] == p:
                    strat[v] = next(x for x in a.succ[v] if x in sub)
            break
        b, s_b = _attractor(a, pred, 1 - p, w1[1 - p], sub)
        win[1 - p].update(b)
        strat.update((v, x) for v, x in strat1.items() if v in w1[1 - p])
        strat.update(s_b)
        sub = sub - b
    return win, strat


def solve_spm(a: FiniteArena) -> SolveResult:
    """Small progress measures; an independent check on :func:`solve_zielonka`.

    Each player's strategy comes from its own lifting run, Falsifier's on the
    dual arena (colours shifted by one).
    """
    won, strategy = _spm(a, Player.VERIFIER, list(a.color))
    lost, dual = _spm(a, Player.FALSIFIER, [c + 1 for c in a.color])
    winner = [0 if w else 1 for w in won]
    if any(x == y for x, y in zip(won, lost)):
        raise AssertionError("progress measures disagree with their dual")
    strategy.update(dual)
    return SolveResult(winner, strategy)


def _spm(a: FiniteArena, me: Player, color: list[int]):
    """Lift measures for ``me`` winning on even ``color``; return the won
    vertices and a strategy on them."""
    n = len(a)
    odd = sorted({c for c in color if c % 2})
    bound = [sum(1 for x in color if x == c) for c in odd]
    zero = (0,) * len(odd)

    def prog(m, c):
        if m is None:
            return None
        k = sum(1 for o in odd if o <= c)
        head = list(m[:k])
        if c % 2:
            i = k - 1
            while i >= 0:
                if head[i] < bound[i]:
                    head[i] += 1
                    break
                head[i] = 0
                i -= 1
            if i < 0:
                return None
        return tuple(head) + zero[k:]

    def key(m):
        return (1,) if m is None else (0,) + m

    pred = _preds(a.succ)
    rho: list[tuple | None] = [zero] * n
    queue = deque(range(n))
    queued = [True] * n
    while queue:
        v = queue.popleft()
        queued[v] = False
        if rho[v] is None:
            continue
        vals = [prog(rho[w], color[v]) for w in a.succ[v]]
        new = (min if a.owner[v] == me else max)(vals, key=key)
        if key(new) > key(rho[v]):
            rho[v] = new
            for u in pred[v]:
                if not queued[u]:
                    queued[u] = True
                    queue.append(u)
    won = [m is not None for m in rho]
    strategy = {v: min(a.succ[v], key=lambda w: key(prog(rho[w], color[v])))
                for v in range(n) if won[v] and a.owner[v] == me}
    return won, strategy


def verify_strategy(a: FiniteArena, r: SolveResult, player: Player) -> bool:
    """Check that ``r.strategy`` wins for ``player`` on ``player``'s region."""
    region = [r.winner[v] == player for v in range(len(a))]
    rows, cols = [], []
    for v in range(len(a)):
        if not region[v]:
            continue
        if a.owner[v] == player:
            s = r.strategy.get(v)
            if s is None or s not in a.succ[v]:
                raise StrategyError(f"no legal strategy choice at vertex {v}")
            if not region[s]:
                raise StrategyError(f"strategy leaves the claimed region at vertex {v}")
            nxt = [s]
        else:
            nxt = a.succ[v]
            if not all(region[x] for x in nxt):
                return False
        for x in nxt:
            rows.append(v)
            cols.append(x)
    colors = np.asarray(a.color)
    inside = np.asarray(region, dtype=bool)
    rows_a, cols_a = np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64)
    for c in sorted({a.color[v] for v in range(len(a)) if region[v]}):
        if c % 2 == player:
            continue
        keep = inside & (colors >= c)
        m = keep[rows_a] & keep[cols_a] if len(rows_a) else np.zeros(0, dtype=bool)
        g = csr_matrix((np.ones(int(m.sum())), (rows_a[m], cols_a[m])), shape=(len(a), len(a)))
        _, comp = connected_components(g, directed=True, connection="strong")
        sizes = np.bincount(comp, minlength=len(a))
        loops = set(rows_a[m][rows_a[m] == cols_a[m]].tolist())
        for v in np.flatnonzero(keep & (colors == c)):
            if sizes[comp[v]] > 1 or int(v) in loops:
                return False
    return True


# --------------------------------------------------------------------- bracket

def solve_bracketed(g: OneCounterParityGame, cap: int, *, overflow: str = "omega",
                    stats: dict | None = None) -> Verdict:
    """Sound three-valued verdict at ``(entry, 0)`` from two bounded solves."""
    if cap < g.min_cap:
        raise GameError(f"cap {cap} is below the {g.min_cap} needed by the entry ramp")
    pess = truncate(g, cap, Mode.PESSIMISTIC, overflow=overflow)
    res = solve_zielonka(pess)
    if stats is not None:
        stats["pessimistic_vertices"] = len(pess)
    if res.winner[pess.id(g.entry, 0)] == Player.VERIFIER:
        return Verdict.VERIFIER_WINS
    opt = truncate(g, cap, Mode.OPTIMISTIC, overflow=overflow)
    res = solve_zielonka(opt)
    if stats is not None:
        stats["optimistic_vertices"] = len(opt)
    if res.winner[opt.id(g.entry, 0)] == Player.FALSIFIER:
        return Verdict.FALSIFIER_WINS
    return Verdict.UNKNOWN


# ----------------------------------------------------------------- text formats

_OWN = {Player.VERIFIER: "V", Player.FALSIFIER: "F"}


def dump_game(g: OneCounterParityGame, provenance: bool = True) -> str:
    lines = [f"I v{g.entry}"]
    for v in range(len(g)):
        if provenance:
            lines.append(f"# v{v} {g.names[v]}")
        lines.append(f"V v{v} {_OWN[g.owner[v]]} {g.color[v]}")
    for u, w, v in g.edges:
        lines.append(f"E v{u} {w} v{v}")
    return "\n".join(lines) + "\n"


def parse_game(text: str) -> OneCounterParityGame:
    """Read the ``V``/``E``/``I`` line format written by :func:`dump_game`.

    Vertex names are arbitrary tokens. Without an ``I`` line the first vertex
    is the entry. An optional fourth ``V`` field is ignored.
    """
    ids: dict[str, int] = {}
    owner, color, names, edges = [], [], [], []
    entry = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        try:
            if parts[0] == "V" and len(parts) in (4, 5):
                if parts[1] in ids:
                    raise GameError(f"vertex {parts[1]!r} declared twice")
                if parts[2] not in ("V", "F"):
                    raise GameError(f"owner must be V or F, got {parts[2]!r}")
                ids[parts[1]] = len(owner)
                owner.append(Player.VERIFIER if parts[2] == "V" else Player.FALSIFIER)
                color.append(int(parts[3]))
                names.append(parts[1])
            elif parts[0] == "E" and len(parts) == 4:
                edges.append((parts[1], int(parts[2]), parts[3]))
            elif parts[0] == "I" and len(parts) == 2:
                entry = parts[1]
            else:
                raise GameError(f"cannot parse {line!r}")
        except ValueError as e:
            raise GameError(f"line {lineno}: {e}") from None
    try:
        resolved = tuple((ids[u], w, ids[v]) for u, w, v in edges)
        start = ids[entry] if entry is not None else 0
    except KeyError as e:
        raise GameError(f"unknown vertex {e.args[0]!r}") from None
    if not owner:
        raise GameError("empty game")
    return OneCounterParityGame(tuple(owner), tuple(color), resolved, start, tuple(names))


def _counter_text(key) -> str:
    if isinstance(key, str):
        return "-"
    if key[0] == "res":
        return "res"
    c = key[1]
    return str(c) if c >= 0 else f"w{-1 - c}"


def dump_arena(a: FiniteArena, names=None) -> str:
    lines = []
    for i, key in enumerate(a.keys):
        if names is not None and not isinstance(key, str) and key[0] != "res":
            lines.append(f"# a{i} {names[key[0]]}")
        lines.append(f"V a{i} {_OWN[Player(a.owner[i])]} {a.color[i]} {_counter_text(key)}")
    for i, s in enumerate(a.succ):
        for j in s:
            lines.append(f"E a{i} 0 a{j}")
    return "\n".join(lines) + "\n"


def random_arena(rng, n: int, colors: int, max_out: int = 3) -> FiniteArena:
    """Uniformly wired arena for differential testing (every vertex has a successor)."""
    owner = [int(rng.integers(2)) for _ in range(n)]
    color = [int(rng.integers(colors)) for _ in range(n)]
    succ = []
    for _ in range(n):
        k = int(rng.integers(1, max_out + 1))
        succ.append(sorted({int(x) for x in rng.integers(n, size=k)}))
    return FiniteArena(owner, color, succ, [(v, 0) for v in range(n)])
