"""Reference evaluator for QATL: controllable-predecessor fixpoints over the
configuration graph with the counter bounded by ``cap``.

Each subformula gets a pair of sets over configurations, a lower one (surely
true) and an upper one (possibly true). With ``frontier="omega"`` the
counters above ``cap`` are kept as abstract values that remember only the
counter modulo the formula's moduli; a decrement out of that range may land
on several concrete values, and the lower pass requires all of them to be
good while the upper pass settles for one. With ``frontier="sink"`` a move
across the cap simply counts as bad (lower) or good (upper).
"""

from __future__ import annotations

from enum import Enum
from functools import reduce
from math import lcm

import numpy as np

from .formula import (Bool, Coalition, Constraint, Formula, Globally, Next, Not, Or, Prop,
                      Until, desugar, is_qatl, render, subformulas)
from .model import Configuration, GameModel, eval_constraint

__all__ = ["ThreeValued", "cpre", "eval_qatl_bracket", "Evaluator"]


class ThreeValued(Enum):
    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "unknown"

    def __invert__(self) -> ThreeValued:
        return {ThreeValued.TRUE: ThreeValued.FALSE,
                ThreeValued.FALSE: ThreeValued.TRUE}.get(self, ThreeValued.UNKNOWN)

    def __or__(self, other: ThreeValued) -> ThreeValued:
        if ThreeValued.TRUE in (self, other):
            return ThreeValued.TRUE
        if self is other is ThreeValued.FALSE:
            return ThreeValued.FALSE
        return ThreeValued.UNKNOWN

    def __and__(self, other: ThreeValued) -> ThreeValued:
        return ~(~self | ~other)

    @classmethod
    def of(cls, lower: bool, upper: bool) -> ThreeValued:
        if lower:
            return cls.TRUE
        return cls.UNKNOWN if upper else cls.FALSE


class Evaluator:
    """Lower/upper truth tables for every subformula, over one model and cap."""

    def __init__(self, m: GameModel, cap: int, *, period: int = 1, frontier: str = "omega"):
        if cap < 0:
            raise ValueError("cap must be non-negative")
        if frontier not in ("omega", "sink"):
            raise ValueError(f"unknown frontier {frontier!r}")
        drop = max((-t.weight for t in m.transitions), default=0)
        if frontier == "omega" and cap + 1 < drop:
            raise ValueError(f"cap {cap} is below the largest decrement {drop} minus one")
        self.m, self.cap, self.period, self.frontier = m, cap, period, frontier
        width = cap + 1 + (period if frontier == "omega" else 0)
        self.width = width
        self.n = len(m.states)
        self.sidx = {s: k for k, s in enumerate(m.states)}
        self.size = self.n * width
        self.OUT, self.IN = self.size, self.size + 1
        self._build_moves()
        self.cache: dict[Formula, tuple[np.ndarray, np.ndarray]] = {}

    # configuration index: state * width + counter, or + cap + 1 + residue for omega
    def index(self, s: str, counter: int) -> int:
        if counter > self.cap:
            if self.frontier == "sink":
                raise ValueError("counter above cap")
            return self.omega(s, counter % self.period)
        return self.sidx[s] * self.width + counter

    def omega(self, s: str, residue: int) -> int:
        return self.sidx[s] * self.width + self.cap + 1 + residue

    def _build_moves(self):
        cap, K = self.cap, self.period
        cfg, lo, hi, start = [], [], [], []
        for s in self.m.states:
            for c in range(self.width):
                start.append(len(cfg))
                omega = c > cap
                r = c - cap - 1
                for t in self.m.out(s):
                    w = t.weight
                    if not omega:
                        d = c + w
                        if d < 0:
                            continue
                        if d <= cap:
                            opts_lo = opts_hi = [self.index(t.target, d)]
                        elif self.frontier == "omega":
                            opts_lo = opts_hi = [self.index(t.target, d)]
                        else:
                            opts_lo, opts_hi = [self.OUT], [self.IN]
                    else:
                        opts = [self.omega(t.target, (r + w) % K)]
                        x = cap + 1 + (r - cap - 1) % K
                        while x + w <= cap:
                            if x + w >= 0:
                                opts.append(self.index(t.target, x + w))
                            x += K
                        opts_lo = opts_hi = opts
                    cfg.append(len(start) - 1)
                    lo.append(opts_lo)
                    hi.append(opts_hi)
        wmax = max(len(o) for o in lo + hi)

        def pad(rows):
            return np.array([o + [o[0]] * (wmax - len(o)) for o in rows], dtype=np.int64)

        self.move_cfg = np.array(cfg, dtype=np.int64)
        self.opts_lo, self.opts_hi = pad(lo), pad(hi)
        self.start = np.array(start, dtype=np.int64)
        self.cfg_owner = [self.m.owner[s] for s in self.m.states for _ in range(self.width)]
        self._mine: dict[frozenset, np.ndarray] = {}

    def _cpre(self, agents: frozenset, target: np.ndarray, upper: bool) -> np.ndarray:
        ext = np.concatenate([target, [False, True]])
        if upper:
            good = ext[self.opts_hi].any(axis=1)
        else:
            good = ext[self.opts_lo].all(axis=1)
        some = np.logical_or.reduceat(good, self.start)
        every = np.logical_and.reduceat(good, self.start)
        mine = self._mine.get(agents)
        if mine is None:
            mine = self._mine[agents] = np.array([o in agents for o in self.cfg_owner])
        return np.where(mine, some, every)

    def _atom(self, f: Formula) -> np.ndarray:
        lo = np.zeros(self.size, dtype=bool)
        hi = np.zeros(self.size, dtype=bool)
        for s in self.m.states:
            for c in range(self.width):
                i = self.sidx[s] * self.width + c
                if isinstance(f, Bool):
                    lo[i] = hi[i] = f.value
                elif isinstance(f, Prop):
                    lo[i] = hi[i] = f.name in self.m.labels[s]
                elif c <= self.cap:
                    lo[i] = hi[i] = eval_constraint(f.rel, f.constant, f.modulus, c)
                elif f.rel == "mod":
                    lo[i] = hi[i] = eval_constraint("mod", f.constant, f.modulus,
                                                    c - self.cap - 1)
                elif self.cap >= f.constant:
                    lo[i] = hi[i] = False  # counter > cap >= constant
                else:
                    lo[i], hi[i] = False, True
        return lo, hi

    def tables(self, f: Formula) -> tuple[np.ndarray, np.ndarray]:
        if f not in self.cache:
            self.cache[f] = self._tables(f)
        return self.cache[f]

    def _tables(self, f: Formula):
        if isinstance(f, (Bool, Prop, Constraint)):
            return self._atom(f)
        if isinstance(f, Not):
            lo, hi = self.tables(f.sub)
            return ~hi, ~lo
        if isinstance(f, Or):
            (a, b), (c, d) = self.tables(f.left), self.tables(f.right)
            return a | c, b | d
        if isinstance(f, Coalition):
            body = f.sub
            out = []
            for upper in (False, True):
                if isinstance(body, Next):
                    out.append(self._cpre(f.agents, self.tables(body.sub)[upper], upper))
                elif isinstance(body, Globally):
                    phi = self.tables(body.sub)[upper]
                    z = phi.copy()
                    while True:
                        nz = phi & self._cpre(f.agents, z, upper)
                        if (nz == z).all():
                            break
                        z = nz
                    out.append(z)
                elif isinstance(body, Until):
                    left = self.tables(body.left)[upper]
                    right = self.tables(body.right)[upper]
                    z = right.copy()
                    while True:
                        nz = right | (left & self._cpre(f.agents, z, upper))
                        if (nz == z).all():
                            break
                        z = nz
                    out.append(z)
                else:
                    raise ValueError(f"{render(f)} is not QATL")
            return out[0], out[1]
        raise ValueError(f"{render(f)} is not a desugared QATL formula")

    def value(self, f: Formula, config: Configuration) -> ThreeValued:
        lo, hi = self.tables(f)
        i = self.index(config.state, config.counter)
        return ThreeValued.of(bool(lo[i]), bool(hi[i]))


def _period(f: Formula) -> int:
    return reduce(lcm, (g.modulus for g in subformulas(f)
                        if isinstance(g, Constraint) and g.rel == "mod"), 1)


def eval_qatl_bracket(m: GameModel, config: Configuration, phi: Formula, cap: int, *,
                      frontier: str = "omega") -> ThreeValued:
    """Three-valued truth of a QATL state formula at ``config``."""
    config = Configuration(*config)
    if cap < config.counter:
        raise ValueError(f"cap {cap} is below the initial counter {config.counter}")
    if not is_qatl(phi):
        raise ValueError(f"{render(phi)} is not a QATL state formula")
    f = desugar(phi)
    ev = Evaluator(m, cap, period=_period(f), frontier=frontier)
    return ev.value(f, config)


def cpre(m: GameModel, agents, target, cap: int, *, upper: bool = False) -> set[Configuration]:
    """Configurations from which ``agents`` force the next configuration into
    ``target``; moves across ``cap`` count as inside the target iff ``upper``."""
    ev = Evaluator(m, cap, frontier="sink")
    vec = np.zeros(ev.size, dtype=bool)
    for s, c in target:
        if c <= cap:
            vec[ev.index(s, c)] = True
    res = ev._cpre(frozenset(agents), vec, upper)
    return {Configuration(s, c) for s in m.states for c in range(cap + 1)
            if res[ev.index(s, c)]}
