"""Command line front end. Exit codes: 0 verified, 1 falsified, 2 unknown,
10 and up for errors."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .checker import CheckRequest, check, game_text, load_example
from .formula import FormulaSyntaxError, render
from .hardness import TMError, build_hardness_game, parse_tm, simulate_tm
from .model import ModelError, dump_model
from .parity import GameError, Verdict, parse_game, solve_bracketed

EXAMPLE_FORMULAS = (
    "<<ctrl>> G ((Request & r < 3) -> X X Release)",
    "<<ctrl>> G ((Request & r >= 3) -> F Dispense)",
)

ERR_INPUT, ERR_USAGE = 10, 11


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qatl", description="QATL / QATL* model checking on one-counter game models")
    sub = p.add_subparsers(dest="cmd", required=True)

    c = sub.add_parser("check", help="check a formula at a configuration")
    c.add_argument("--model", required=True, help="model file")
    c.add_argument("--formula", required=True)
    c.add_argument("--state", required=True)
    c.add_argument("--counter", type=int, default=0)
    c.add_argument("--cap", type=int, help="initial truncation cap (doubled while unknown)")
    c.add_argument("--cap-limit", type=int, default=1024)
    c.add_argument("--engine", choices=("game", "refeval"), default="game")
    c.add_argument("--literal-figures", action="store_true",
                   help="build the gadgets without the position-0 checks")
    c.add_argument("--dump-game", action="store_true", help="print the game instead of solving it")
    c.add_argument("--succinct", action="store_true",
                   help="give the initial counter as one weighted edge and expand weights to unit chains")

    a = sub.add_parser("solve-arena", help="solve a one-counter parity game file")
    a.add_argument("file")
    a.add_argument("--cap", type=int, default=64)

    h = sub.add_parser("gen-hardness", help="reachability game for a bounded Turing machine run")
    h.add_argument("--tm", required=True)
    h.add_argument("--word", default="")
    h.add_argument("--tape", type=int, required=True)
    h.add_argument("--out", help="write the model here instead of stdout")
    h.add_argument("--check", action="store_true", help="also check the formula and compare with simulation")
    h.add_argument("--cap", type=int, default=8)

    e = sub.add_parser("examples", help="print the vending machine model and its formulas")
    e.add_argument("--name", help="print this shipped data file instead")
    return p


def _emit(rep) -> int:
    print(rep.record())
    print(rep.text())
    return rep.exit_code


def _check(args) -> int:
    req = CheckRequest(args.model, args.formula, args.state, args.counter, args.cap,
                       args.cap_limit, args.engine, args.literal_figures, args.succinct)
    if args.dump_game:
        sys.stdout.write(game_text(req))
        return 0
    return _emit(check(req))


def _solve_arena(args) -> int:
    g = parse_game(Path(args.file).read_text())
    stats: dict = {}
    v = solve_bracketed(g, max(args.cap, g.min_cap), stats=stats)
    print(json.dumps({"winner": v.value, "cap": args.cap, "vertices": len(g), **stats}, sort_keys=True))
    print(f"{v.value} at v{g.entry} from counter 0")
    return {Verdict.VERIFIER_WINS: 0, Verdict.FALSIFIER_WINS: 1, Verdict.UNKNOWN: 2}[v]


def _gen_hardness(args) -> int:
    t = parse_tm(Path(args.tm).read_text())
    h = build_hardness_game(t, args.word, args.tape)
    text = dump_model(h.model)
    if args.out:
        Path(args.out).write_text(text)
    elif not args.check:
        sys.stdout.write(text)
    print(f"# formula: {render(h.formula)}  state: {h.entry}  counter: 0", file=sys.stderr)
    if not args.check:
        return 0
    rep = check(CheckRequest(h.model, h.formula, h.entry, 0, args.cap))
    sim = simulate_tm(t, args.word, args.tape)
    rep.stats["simulation"] = sim.value
    return _emit(rep)


def _examples(args) -> int:
    if args.name:
        sys.stdout.write(load_example(args.name))
        return 0
    sys.stdout.write(load_example("vending.ocg"))
    for f in EXAMPLE_FORMULAS:
        print(f"# formula (state idle): {f}")
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    run = {"check": _check, "solve-arena": _solve_arena,
           "gen-hardness": _gen_hardness, "examples": _examples}[args.cmd]
    try:
        return run(args)
    except (FormulaSyntaxError, ModelError, TMError, GameError, FileNotFoundError) as e:
        print(json.dumps({"error": type(e).__name__, "message": str(e)}))
        return ERR_INPUT
    except ValueError as e:
        print(json.dumps({"error": "ValueError", "message": str(e)}))
        return ERR_USAGE


if __name__ == "__main__":
    sys.exit(main())
