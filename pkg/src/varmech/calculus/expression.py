"""Expression language for user-defined energies and Lagrangians.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | 't' | 'q' '[' INT ']' | 'qdot' '[' INT ']'
            | FUNC '(' expr ')' | IDENT | '(' expr ')'

``^`` binds tighter than unary minus and is right-associative, so
``-x^2`` is ``-(x^2)`` and ``2^3^2`` is ``2^(3^2)``.  ``FUNC`` is one of
``sin cos exp sqrt``; any other identifier names a numeric parameter.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from ..errors import ExpressionError
from . import dual

__all__ = [
    "Num",
    "Time",
    "Var",
    "Param",
    "Neg",
    "BinOp",
    "Call",
    "Expression",
    "parse_expression",
    "to_source",
]

FUNCTIONS = {"sin": dual.sin, "cos": dual.cos, "exp": dual.exp, "sqrt": dual.sqrt}
_RESERVED = {"t", "q", "qdot"}


# --------------------------------------------------------------------- AST
# Source positions are kept for error messages but do not take part in
# equality, so a re-parsed expression compares equal to the original.


@dataclass(frozen=True)
class Num:
    value: float
    pos: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Time:
    pos: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Var:
    kind: str  # "q" or "qdot"
    index: int
    pos: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Param:
    name: str
    pos: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Neg:
    operand: object
    pos: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object
    pos: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Call:
    func: str
    arg: object
    pos: tuple = field(default=None, compare=False, repr=False)


# ------------------------------------------------------------------- lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()\[\]])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # number | ident | op | end
    text: str
    line: int
    col: int


def _tokenize(src: str) -> list[_Token]:
    tokens = []
    i = 0
    line, line_start = 1, 0
    while i < len(src):
        m = _TOKEN_RE.match(src, i)
        if m is None:
            raise ExpressionError(f"unexpected character {src[i]!r}", line, i - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        if kind == "ws":
            for j, ch in enumerate(text):
                if ch == "\n":
                    line += 1
                    line_start = i + j + 1
        else:
            tokens.append(_Token(kind, text, line, i - line_start + 1))
        i = m.end()
    tokens.append(_Token("end", "", line, i - line_start + 1))
    return tokens


# ------------------------------------------------------------------ parser


class _Parser:
    def __init__(self, src, dim, params):
        self.toks = _tokenize(src)
        self.i = 0
        self.dim = dim
        self.params = params

    @property
    def tok(self) -> _Token:
        return self.toks[self.i]

    def _advance(self) -> _Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def _error(self, msg, tok=None):
        tok = tok or self.tok
        return ExpressionError(msg, tok.line, tok.col)

    def _expect(self, text):
        if self.tok.text != text or self.tok.kind not in ("op", "ident"):
            found = self.tok.text or "end of input"
            raise self._error(f"expected {text!r}, found {found!r}")
        return self._advance()

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            raise self._error(f"unexpected {self.tok.text!r}")
        return node

    def expr(self):
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            t = self._advance()
            node = BinOp(t.text, node, self.term(), pos=(t.line, t.col))
        return node

    def term(self):
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            t = self._advance()
            node = BinOp(t.text, node, self.unary(), pos=(t.line, t.col))
        return node

    def unary(self):
        if self.tok.kind == "op" and self.tok.text == "-":
            t = self._advance()
            return Neg(self.unary(), pos=(t.line, t.col))
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            t = self._advance()
            return BinOp("^", base, self.unary(), pos=(t.line, t.col))
        return base

    def atom(self):
        t = self.tok
        pos = (t.line, t.col)
        if t.kind == "number":
            self._advance()
            return Num(float(t.text), pos=pos)
        if t.kind == "op" and t.text == "(":
            self._advance()
            node = self.expr()
            self._expect(")")
            return node
        if t.kind == "ident":
            self._advance()
            if t.text == "t":
                return Time(pos=pos)
            if t.text in ("q", "qdot"):
                return self._indexed(t)
            if self.tok.kind == "op" and self.tok.text == "(":
                if t.text not in FUNCTIONS:
                    raise self._error(f"unknown function {t.text!r}", t)
                self._advance()
                arg = self.expr()
                self._expect(")")
                return Call(t.text, arg, pos=pos)
            if t.text in FUNCTIONS:
                raise self._error(f"function {t.text!r} needs an argument", t)
            if self.params is not None and t.text not in self.params:
                raise self._error(f"unknown identifier {t.text!r}", t)
            return Param(t.text, pos=pos)
        found = t.text or "end of input"
        raise self._error(f"unexpected {found!r}")

    def _indexed(self, name_tok):
        self._expect("[")
        t = self.tok
        if t.kind != "number" or not t.text.isdigit():
            raise self._error(f"expected integer index after {name_tok.text}[")
        self._advance()
        self._expect("]")
        idx = int(t.text)
        if self.dim is not None and idx >= self.dim:
            raise self._error(f"index {idx} out of range for dimension {self.dim}", t)
        return Var(name_tok.text, idx, pos=(name_tok.line, name_tok.col))


# ----------------------------------------------------------------- printer

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


def _prec(node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _PREC["neg"]
    return _PREC["atom"]


def _fmt_number(x: float) -> str:
    if x < 0 or not np.isfinite(x):
        raise ValueError(f"literal {x!r} has no source form")
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


def to_source(node) -> str:
    """Print an AST with the minimal parentheses that re-parse to the same tree."""
    if isinstance(node, Num):
        return _fmt_number(node.value)
    if isinstance(node, Time):
        return "t"
    if isinstance(node, Var):
        return f"{node.kind}[{node.index}]"
    if isinstance(node, Param):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    if isinstance(node, Neg):
        inner = to_source(node.operand)
        # operand is parsed by `unary`, which accepts powers and atoms bare
        if _prec(node.operand) < _PREC["neg"]:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, BinOp):
        p = _PREC[node.op]
        left, right = to_source(node.left), to_source(node.right)
        if node.op == "^":
            if _prec(node.left) < _PREC["atom"]:
                left = f"({left})"
            if _prec(node.right) < _PREC["neg"]:
                right = f"({right})"
            return f"{left}^{right}"
        if _prec(node.left) < p:
            left = f"({left})"
        if _prec(node.right) <= p:
            right = f"({right})"
        return f"{left} {node.op} {right}"
    raise TypeError(f"not an expression node: {node!r}")


# ---------------------------------------------------------------- compiler


def _compile(node, params: Mapping[str, float]) -> Callable:
    if isinstance(node, Num):
        v = node.value
        return lambda q, qd, t: v
    if isinstance(node, Time):
        return lambda q, qd, t: t
    if isinstance(node, Var):
        i = node.index
        if node.kind == "q":
            return lambda q, qd, t: q[i]
        return lambda q, qd, t: qd[i]
    if isinstance(node, Param):
        if node.name not in params:
            line, col = node.pos or (None, None)
            raise ExpressionError(f"unknown identifier {node.name!r}", line, col)
        v = float(params[node.name])
        return lambda q, qd, t: v
    if isinstance(node, Neg):
        f = _compile(node.operand, params)
        return lambda q, qd, t: -f(q, qd, t)
    if isinstance(node, Call):
        fn = FUNCTIONS[node.func]
        f = _compile(node.arg, params)
        return lambda q, qd, t: fn(f(q, qd, t))
    if isinstance(node, BinOp):
        a = _compile(node.left, params)
        b = _compile(node.right, params)
        op = node.op
        if op == "+":
            return lambda q, qd, t: a(q, qd, t) + b(q, qd, t)
        if op == "-":
            return lambda q, qd, t: a(q, qd, t) - b(q, qd, t)
        if op == "*":
            return lambda q, qd, t: a(q, qd, t) * b(q, qd, t)
        if op == "/":
            return lambda q, qd, t: a(q, qd, t) / b(q, qd, t)
        if isinstance(node.right, Num):
            c = node.right.value
            return lambda q, qd, t: dual.power(a(q, qd, t), c)
        return lambda q, qd, t: dual.power(a(q, qd, t), b(q, qd, t))
    raise TypeError(f"not an expression node: {node!r}")


def _walk(node):
    yield node
    for child in ("operand", "left", "right", "arg"):
        sub = getattr(node, child, None)
        if sub is not None:
            yield from _walk(sub)


class Expression:
    """Parsed expression: an immutable AST plus helpers."""

    __slots__ = ("root",)

    def __init__(self, root):
        self.root = root

    def __eq__(self, other):
        return isinstance(other, Expression) and self.root == other.root

    def __hash__(self):
        return hash(self.root)

    def __repr__(self):
        return f"Expression({to_source(self.root)!r})"

    def __str__(self):
        return to_source(self.root)

    def nodes(self):
        return list(_walk(self.root))

    @property
    def max_index(self) -> int:
        """Largest variable index used, or -1."""
        return max((n.index for n in _walk(self.root) if isinstance(n, Var)), default=-1)

    @property
    def uses_time(self) -> bool:
        return any(isinstance(n, Time) for n in _walk(self.root))

    @property
    def uses_velocity(self) -> bool:
        return any(isinstance(n, Var) and n.kind == "qdot" for n in _walk(self.root))

    @property
    def parameters(self) -> set[str]:
        return {n.name for n in _walk(self.root) if isinstance(n, Param)}

    def compile(self, params: Mapping[str, float] | None = None) -> Callable:
        """Return ``f(q, qdot, t)``; works on floats, ndarrays and duals."""
        return _compile(self.root, dict(params or {}))

    def evaluate(self, q=(), qdot=(), t=0.0, params=None) -> float:
        q = np.asarray(q, dtype=float)
        qdot = np.asarray(qdot, dtype=float)
        with np.errstate(all="ignore"):
            return float(self.compile(params)(q, qdot, float(t)))


def parse_expression(src: str, dim: int | None = None, params=None) -> Expression:
    """Parse ``src``.

    When ``dim`` is given, variable indices are bounds-checked; when
    ``params`` is given (a mapping or set of names), unknown identifiers are
    rejected at parse time rather than at compile time.
    """
    if not isinstance(src, str):
        raise TypeError("expression source must be a string")
    names = None if params is None else set(params)
    bad = names & _RESERVED if names else set()
    if bad:
        raise ExpressionError(f"parameter names shadow reserved words: {sorted(bad)}")
    return Expression(_Parser(src, dim, names).parse())
