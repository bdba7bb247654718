"""End-to-end model checking: pick the builder for the formula's fragment, put
the initial counter in front, and solve with a growing cap until the bracket
closes."""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

from .formula import Constraint, Formula, parse, render, subformulas
from .formula import is_qatl, is_state_formula
from .mcgame_qatl import attach_initial_credit, build_qatl_game
from .mcgame_qatlstar import build_qatlstar_game
from .model import Configuration, GameModel, expand_socg, load_model
from .parity import OneCounterParityGame, Verdict, dump_game, solve_bracketed
from .refeval import eval_qatl_bracket, ThreeValued

__all__ = ["CheckVerdict", "CheckRequest", "Report", "check", "build_game", "game_text",
           "default_cap", "load_example", "EXIT_CODES"]


class CheckVerdict(Enum):
    VERIFIED = "VERIFIED"
    FALSIFIED = "FALSIFIED"
    UNKNOWN = "UNKNOWN"


EXIT_CODES = {CheckVerdict.VERIFIED: 0, CheckVerdict.FALSIFIED: 1, CheckVerdict.UNKNOWN: 2}

_FROM_GAME = {Verdict.VERIFIER_WINS: CheckVerdict.VERIFIED,
              Verdict.FALSIFIER_WINS: CheckVerdict.FALSIFIED,
              Verdict.UNKNOWN: CheckVerdict.UNKNOWN}
_FROM_REF = {ThreeValued.TRUE: CheckVerdict.VERIFIED,
             ThreeValued.FALSE: CheckVerdict.FALSIFIED,
             ThreeValued.UNKNOWN: CheckVerdict.UNKNOWN}


@dataclass
class CheckRequest:
    model: GameModel | str | Path
    formula: Formula | str
    state: str
    counter: int = 0
    cap: int | None = None
    cap_limit: int = 1024
    engine: str = "game"
    literal_figures: bool = False
    expand_succinct: bool = False

    def resolve(self) -> tuple[GameModel, Formula]:
        m = self.model
        if not isinstance(m, GameModel):
            m = load_model(Path(m).read_text())
        f = parse(self.formula) if isinstance(self.formula, str) else self.formula
        if self.state not in m.owner:
            raise ValueError(f"unknown state {self.state!r}")
        if self.counter < 0:
            raise ValueError("initial counter must be non-negative")
        if self.engine not in ("game", "refeval"):
            raise ValueError(f"unknown engine {self.engine!r}")
        return m, f


@dataclass
class Report:
    verdict: CheckVerdict
    fragment: str
    engine: str
    cap: int
    stats: dict = field(default_factory=dict)
    wall_time: float = 0.0
    warnings: list[str] = field(default_factory=list)

    def record(self) -> str:
        d = asdict(self)
        d["verdict"] = self.verdict.value
        d["wall_time"] = round(self.wall_time, 4)
        return json.dumps(d, sort_keys=True)

    def text(self) -> str:
        lines = [f"{self.verdict.value}: {self.fragment} formula, {self.engine} engine, cap {self.cap}"]
        lines += [f"  {k}: {v}" for k, v in sorted(self.stats.items())]
        lines += [f"  warning: {w}" for w in self.warnings]
        return "\n".join(lines)

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.verdict]


def default_cap(f: Formula, counter: int) -> int:
    consts = [g.constant for g in subformulas(f) if isinstance(g, Constraint)]
    return max(64, counter + 8, max(consts, default=0) + 8)


def _fragment(f: Formula) -> str:
    if is_qatl(f):
        return "QATL"
    if is_state_formula(f):
        return "QATL*"
    raise ValueError(f"{render(f)} is not a state formula")


def build_game(req: CheckRequest, stats: dict | None = None) -> OneCounterParityGame:
    """The one-counter parity game for the request, initial counter included."""
    m, f = req.resolve()
    if _fragment(f) == "QATL":
        g = build_qatl_game(m, req.state, f, literal=req.literal_figures)
    else:
        g = build_qatlstar_game(m, req.state, f, literal=req.literal_figures, stats=stats)
    g = attach_initial_credit(g, req.counter, succinct=req.expand_succinct)
    if req.expand_succinct:
        g = expand_socg(g)
    return g


def game_text(req: CheckRequest) -> str:
    return dump_game(build_game(req))


def check(req: CheckRequest) -> Report:
    start = time.perf_counter()
    m, f = req.resolve()
    fragment = _fragment(f)
    cap = req.cap if req.cap is not None else default_cap(f, req.counter)
    if cap < req.counter:
        raise ValueError(f"cap {cap} is below the initial counter {req.counter}")
    stats: dict = {}
    warnings: list[str] = []
    if req.engine == "refeval":
        if fragment != "QATL":
            raise ValueError("the refeval engine handles QATL formulas only")
        solve = lambda c: _FROM_REF[eval_qatl_bracket(m, Configuration(req.state, req.counter), f, c)]
    else:
        g = build_game(req, stats)
        stats.update(vertices=len(g), edges=len(g.edges), colors=len(set(g.color)))
        solve = lambda c: _FROM_GAME[solve_bracketed(g, c, stats=stats)]
    while True:
        verdict = solve(cap)
        if verdict is not CheckVerdict.UNKNOWN:
            break
        if cap * 2 > req.cap_limit:
            warnings.append(f"bracket still open at cap {cap}; cap limit {req.cap_limit} reached")
            break
        cap *= 2
    return Report(verdict, fragment, req.engine, cap, stats,
                  time.perf_counter() - start, warnings)


def load_example(name: str) -> str:
    """Text of a file shipped in the package data directory."""
    return resources.files("qatl").joinpath("data", name).read_text()
