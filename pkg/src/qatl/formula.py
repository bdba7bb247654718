"""QATL / QATL* formulas: AST, parser, printer, desugaring and classification.

Concrete syntax::

    <<a,b>> phi          coalition (``<<>>`` is the empty coalition)
    X phi  F phi  G phi  next / eventually / always
    phi U psi            until (right associative)
    ! & | ->             boolean connectives
    r < 3   r <= 3   r = 3   r > 3   r >= 3   r mod 4 = 3
    true  false  p

Precedence, tightest first: unary operators, ``U``, ``&``, ``|``, ``->``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator

__all__ = [
    "Formula", "Bool", "Prop", "Constraint", "Not", "Or", "And", "Implies",
    "Next", "Until", "Finally", "Globally", "Coalition", "FormulaSyntaxError",
    "Fragment", "FragmentInfo", "parse", "render", "desugar", "classify",
    "substitute_fresh", "substitute_back", "subformulas", "propositions",
    "is_state_formula", "is_qatl", "RELATIONS", "TRUE", "FALSE",
]

RELATIONS = ("<", "<=", "=", ">", ">=", "mod")


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


@dataclass(frozen=True)
class Formula:
    """Base node. ``span`` is (start, end) in the source text, ignored by ``==``."""

    span: tuple[int, int] | None = field(default=None, compare=False, repr=False, kw_only=True)

    def children(self) -> tuple[Formula, ...]:
        return ()

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True)
class Bool(Formula):
    value: bool


@dataclass(frozen=True)
class Prop(Formula):
    name: str


@dataclass(frozen=True)
class Constraint(Formula):
    """Counter constraint ``r rel constant``; ``rel == "mod"`` means r = constant (mod modulus)."""

    rel: str
    constant: int
    modulus: int | None = None

    def __post_init__(self):
        if self.rel not in RELATIONS:
            raise ValueError(f"unknown relation {self.rel!r}")
        if (self.rel == "mod") != (self.modulus is not None):
            raise ValueError("modulus is required exactly for 'mod' constraints")
        if self.modulus is not None and self.modulus < 1:
            raise ValueError("modulus must be at least 1")


@dataclass(frozen=True)
class Not(Formula):
    sub: Formula

    def children(self):
        return (self.sub,)


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Next(Formula):
    sub: Formula

    def children(self):
        return (self.sub,)


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Finally(Formula):
    sub: Formula

    def children(self):
        return (self.sub,)


@dataclass(frozen=True)
class Globally(Formula):
    sub: Formula

    def children(self):
        return (self.sub,)


@dataclass(frozen=True)
class Coalition(Formula):
    agents: frozenset[str]
    sub: Formula

    def __post_init__(self):
        object.__setattr__(self, "agents", frozenset(self.agents))

    def children(self):
        return (self.sub,)


TRUE = Bool(True)
FALSE = Bool(False)


def subformulas(f: Formula) -> Iterator[Formula]:
    """Pre-order traversal."""
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        stack.extend(reversed(g.children()))


def propositions(f: Formula) -> frozenset[str]:
    return frozenset(g.name for g in subformulas(f) if isinstance(g, Prop))


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<coal><<[^<>]*>>)|(?P<num>-?\d+)|(?P<op>->|<=|>=|[!&|()<>=])"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_'.]*))"
)
_KEYWORDS = {"X", "F", "G", "U", "r", "mod", "true", "false"}
_AGENT = re.compile(r"[A-Za-z_][A-Za-z0-9_'.]*")


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int
    end: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise FormulaSyntaxError(f"unknown token {text[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        value = m.group(kind)
        if kind == "ident" and value in _KEYWORDS:
            kind = "kw"
        toks.append(_Tok(kind, value, start, m.end()))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text), len(text)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def accept(self, text: str) -> _Tok | None:
        if self.tok.text == text and self.tok.kind in ("op", "kw"):
            return self.take()
        return None

    def expect(self, text: str) -> _Tok:
        t = self.accept(text)
        if t is None:
            raise FormulaSyntaxError(f"expected {text!r}, found {self.tok.text or 'end of input'!r}", self.tok.pos)
        return t

    def parse(self) -> Formula:
        f = self.implies()
        if self.tok.kind != "eof":
            raise FormulaSyntaxError(f"unexpected {self.tok.text!r}", self.tok.pos)
        return f

    def implies(self) -> Formula:
        left = self.disj()
        if self.accept("->"):
            right = self.implies()
            return Implies(left, right, span=(left.span[0], right.span[1]))
        return left

    def disj(self) -> Formula:
        f = self.conj()
        while self.accept("|"):
            g = self.conj()
            f = Or(f, g, span=(f.span[0], g.span[1]))
        return f

    def conj(self) -> Formula:
        f = self.until()
        while self.accept("&"):
            g = self.until()
            f = And(f, g, span=(f.span[0], g.span[1]))
        return f

    def until(self) -> Formula:
        left = self.unary()
        if self.accept("U"):
            right = self.until()
            return Until(left, right, span=(left.span[0], right.span[1]))
        return left

    def unary(self) -> Formula:
        t = self.tok
        ops = {"!": Not, "X": Next, "F": Finally, "G": Globally}
        if t.text in ops and t.kind in ("op", "kw"):
            self.take()
            sub = self.unary()
            return ops[t.text](sub, span=(t.pos, sub.span[1]))
        if t.kind == "coal":
            self.take()
            inner = t.text[2:-2].strip()
            agents = [a.strip() for a in inner.split(",")] if inner else []
            for a in agents:
                if not _AGENT.fullmatch(a):
                    raise FormulaSyntaxError(f"bad agent name {a!r}", t.pos)
            sub = self.unary()
            return Coalition(frozenset(agents), sub, span=(t.pos, sub.span[1]))
        return self.atom()

    def atom(self) -> Formula:
        t = self.tok
        if self.accept("("):
            f = self.implies()
            close = self.expect(")")
            return _respan(f, (t.pos, close.end))
        if t.kind == "kw" and t.text in ("true", "false"):
            self.take()
            return Bool(t.text == "true", span=(t.pos, t.end))
        if t.kind == "kw" and t.text == "r":
            return self.constraint()
        if t.kind == "ident":
            self.take()
            return Prop(t.text, span=(t.pos, t.end))
        raise FormulaSyntaxError(f"unexpected {t.text or 'end of input'!r}", t.pos)

    def constraint(self) -> Formula:
        start = self.take().pos
        if self.accept("mod"):
            k = self.number()
            self.expect("=")
            c = self.number()
            if k < 1:
                raise FormulaSyntaxError("modulus must be at least 1", start)
            return Constraint("mod", c, k, span=(start, self.toks[self.i - 1].end))
        t = self.tok
        if t.kind != "op" or t.text not in ("<", "<=", "=", ">", ">="):
            raise FormulaSyntaxError("expected a comparison after 'r'", t.pos)
        self.take()
        c = self.number()
        return Constraint(t.text, c, span=(start, self.toks[self.i - 1].end))

    def number(self) -> int:
        t = self.tok
        if t.kind != "num":
            raise FormulaSyntaxError(f"expected an integer, found {t.text or 'end of input'!r}", t.pos)
        self.take()
        return int(t.text)


def _respan(f: Formula, span: tuple[int, int]) -> Formula:
    object.__setattr__(f, "span", span)
    return f


def parse(text: str) -> Formula:
    """Parse ``text`` into a formula, raising :class:`FormulaSyntaxError` on bad input."""
    return _Parser(text).parse()


# --------------------------------------------------------------- printing

# binding strength; larger binds tighter
_PREC = {Implies: 1, Or: 2, And: 3, Until: 4}
_UNARY_PREC = 5


def _prec(f: Formula) -> int:
    return _PREC.get(type(f), _UNARY_PREC)


def render(f: Formula) -> str:
    """Print ``f`` in the concrete syntax with the minimal parentheses ``parse`` needs."""
    if isinstance(f, Bool):
        return "true" if f.value else "false"
    if isinstance(f, Prop):
        return f.name
    if isinstance(f, Constraint):
        if f.rel == "mod":
            return f"r mod {f.modulus} = {f.constant}"
        return f"r {f.rel} {f.constant}"
    if isinstance(f, (Not, Next, Finally, Globally, Coalition)):
        if isinstance(f, Coalition):
            head = "<<" + ",".join(sorted(f.agents)) + ">> "
        else:
            head = {Not: "!", Next: "X ", Finally: "F ", Globally: "G "}[type(f)]
        return head + _wrap(f.sub, _prec(f.sub) < _UNARY_PREC)
    op = {Implies: "->", Or: "|", And: "&", Until: "U"}[type(f)]
    p = _PREC[type(f)]
    if isinstance(f, (Implies, Until)):  # right associative
        left = _wrap(f.left, _prec(f.left) <= p)
        right = _wrap(f.right, _prec(f.right) < p)
    else:
        left = _wrap(f.left, _prec(f.left) < p)
        right = _wrap(f.right, _prec(f.right) <= p)
    return f"{left} {op} {right}"


def _wrap(f: Formula, paren: bool) -> str:
    s = render(f)
    return f"({s})" if paren else s


# ------------------------------------------------------------ state/path split

def is_state_formula(f: Formula) -> bool:
    if isinstance(f, (Bool, Prop, Constraint, Coalition)):
        return True
    if isinstance(f, (Not, Or, And, Implies)):
        return all(is_state_formula(c) for c in f.children())
    return False


def _is_qatl_state(f: Formula) -> bool:
    if isinstance(f, (Bool, Prop, Constraint)):
        return True
    if isinstance(f, (Not, Or, And, Implies)):
        return all(_is_qatl_state(c) for c in f.children())
    if isinstance(f, Coalition):
        body = f.sub
        if isinstance(body, (Next, Globally, Finally)):
            return _is_qatl_state(body.sub)
        if isinstance(body, Until):
            return _is_qatl_state(body.left) and _is_qatl_state(body.right)
    return False


def is_qatl(f: Formula) -> bool:
    """True iff every temporal operator sits directly under a coalition over QATL operands."""
    return _is_qatl_state(f)


class Fragment(Enum):
    QATL = "QATL"
    QATL_STAR = "QATL*"


@dataclass(frozen=True)
class FragmentInfo:
    fragment: Fragment
    is_state_formula: bool
    proposition_set: frozenset[str]
    coalition_count: int
    max_constraint_constant: int
    max_modulus: int


def classify(f: Formula) -> FragmentInfo:
    nodes = list(subformulas(f))
    constraints = [g for g in nodes if isinstance(g, Constraint)]
    return FragmentInfo(
        fragment=Fragment.QATL if is_qatl(f) else Fragment.QATL_STAR,
        is_state_formula=is_state_formula(f),
        proposition_set=propositions(f),
        coalition_count=sum(isinstance(g, Coalition) for g in nodes),
        max_constraint_constant=max((abs(g.constant) for g in constraints), default=0),
        max_modulus=max((g.modulus for g in constraints if g.modulus), default=0),
    )


# --------------------------------------------------------------- desugaring

def _neg(f: Formula) -> Formula:
    return f.sub if isinstance(f, Not) else Not(f)


def desugar(f: Formula) -> Formula:
    """Rewrite into the core connectives.

    Constraints become ``<``, ``<=`` or ``mod``; ``&`` and ``->`` become ``|``
    and ``!``; ``F`` becomes ``true U``. ``G`` stays primitive directly under a
    coalition when its operand is a state formula, and becomes ``!(true U !.)``
    everywhere else. Double negations are cancelled.
    """
    if isinstance(f, (Bool, Prop)):
        return f
    if isinstance(f, Constraint):
        c = f.constant
        if f.rel == "=":
            return _neg(Or(Not(Constraint("<=", c)), Constraint("<", c)))
        if f.rel == ">":
            return Not(Constraint("<=", c))
        if f.rel == ">=":
            return Not(Constraint("<", c))
        if f.rel == "mod":
            return Constraint("mod", c % f.modulus, f.modulus)
        return Constraint(f.rel, c)
    if isinstance(f, Not):
        return _neg(desugar(f.sub))
    if isinstance(f, Or):
        return Or(desugar(f.left), desugar(f.right))
    if isinstance(f, And):
        return _neg(Or(_neg(desugar(f.left)), _neg(desugar(f.right))))
    if isinstance(f, Implies):
        return Or(_neg(desugar(f.left)), desugar(f.right))
    if isinstance(f, Next):
        return Next(desugar(f.sub))
    if isinstance(f, Until):
        return Until(desugar(f.left), desugar(f.right))
    if isinstance(f, Finally):
        return Until(TRUE, desugar(f.sub))
    if isinstance(f, Globally):
        return _neg(Until(TRUE, _neg(desugar(f.sub))))
    if isinstance(f, Coalition):
        body = f.sub
        if isinstance(body, Globally) and is_state_formula(body.sub):
            return Coalition(f.agents, Globally(desugar(body.sub)))
        return Coalition(f.agents, desugar(body))
    raise TypeError(f"not a formula: {f!r}")


# ------------------------------------------------- fresh-proposition substitution

def substitute_fresh(path_formula: Formula, *, include_props: bool = False
                     ) -> tuple[Formula, dict[str, Formula]]:
    """Replace outermost coalition and constraint subformulas by fresh propositions.

    Returns the pure LTL formula and the binding from fresh names to the
    replaced subformulas. Structurally equal subformulas share one name. With
    ``include_props`` the original propositions are replaced as well.
    """
    taken = propositions(path_formula)
    binding: dict[str, Formula] = {}
    names: dict[Formula, str] = {}
    counter = 0

    def fresh_for(g: Formula) -> Prop:
        nonlocal counter
        if g not in names:
            while True:
                counter += 1
                name = f"q{counter}"
                if name not in taken:
                    break
            names[g] = name
            binding[name] = g
        return Prop(names[g])

    def walk(g: Formula) -> Formula:
        if isinstance(g, (Coalition, Constraint)) or (include_props and isinstance(g, Prop)):
            return fresh_for(g)
        if isinstance(g, (Bool, Prop)):
            return g
        if isinstance(g, (Not, Next, Finally, Globally)):
            return type(g)(walk(g.sub))
        return type(g)(walk(g.left), walk(g.right))

    return walk(path_formula), binding


def substitute_back(ltl: Formula, binding: dict[str, Formula]) -> Formula:
    """Inverse of :func:`substitute_fresh`."""
    if isinstance(ltl, Prop):
        return binding.get(ltl.name, ltl)
    if isinstance(ltl, Bool):
        return ltl
    if isinstance(ltl, (Not, Next, Finally, Globally)):
        return type(ltl)(substitute_back(ltl.sub, binding))
    if isinstance(ltl, Coalition):
        return Coalition(ltl.agents, substitute_back(ltl.sub, binding))
    if isinstance(ltl, Constraint):
        return ltl
    return type(ltl)(substitute_back(ltl.left, binding), substitute_back(ltl.right, binding))
