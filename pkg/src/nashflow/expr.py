"""Arithmetic expression language for payoffs, derived quantities and best responses.

Grammar (lowest to highest precedence)::

    expr  := cmp
    cmp   := add (("<" | "<=" | ">" | ">=" | "=") add)?
    add   := mul (("+" | "-") mul)*
    mul   := unary (("*" | "/") unary)*
    unary := "-" unary | pow
    pow   := atom ("^" unary)?
    atom  := number | ident | ident "(" expr ("," expr)* ")" | "(" expr ")"

Builtins: ``min(a, b)``, ``max(a, b)`` and ``if(cond, then, else)`` where
``cond`` must be a comparison. Comparisons evaluate to 1.0 / 0.0.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

__all__ = [
    "Token", "Number", "Var", "Neg", "BinOp", "Compare", "Call", "Expression",
    "ExprError", "LexError", "ParseError", "ArityError", "UnknownFunctionError",
    "EvaluationError", "UnboundVariableError", "DomainError",
    "tokenize", "parse", "evaluate", "evaluate_array", "free_variables", "to_source",
]


class ExprError(Exception):
    """Base class for every error raised by the expression language."""


class LexError(ExprError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class ParseError(ExprError):
    def __init__(self, message: str, position: int, expected: frozenset[str] = frozenset()):
        detail = f" (expected one of: {', '.join(sorted(expected))})" if expected else ""
        super().__init__(f"{message} at position {position}{detail}")
        self.position = position
        self.expected = expected


class ArityError(ParseError):
    pass


class UnknownFunctionError(ParseError):
    pass


class EvaluationError(ExprError):
    pass


class UnboundVariableError(EvaluationError):
    def __init__(self, name: str):
        super().__init__(f"unbound variable {name}")
        self.name = name


class DomainError(EvaluationError):
    pass


# ---------------------------------------------------------------- tokens

@dataclass(frozen=True)
class Token:
    kind: str  # "number" | "identifier" | "operator" | "punctuation"
    text: str
    position: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<identifier>[A-Za-z][A-Za-z0-9_]*)
  | (?P<operator><=|>=|[-+*/^<>=])
  | (?P<punctuation>[(),])
    """,
    re.VERBOSE,
)


def tokenize(source: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise LexError(f"unexpected character {source[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), pos))
        pos = m.end()
    return tokens


# ---------------------------------------------------------------- AST

@dataclass(frozen=True)
class Number:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expression"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Compare:
    op: str  # one of < <= > >= =
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Expression", ...]


Expression = Union[Number, Var, Neg, BinOp, Compare, Call]

_ARITY = {"min": 2, "max": 2, "if": 3}
_CMP_OPS = ("<", "<=", ">", ">=", "=")


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = tokenize(source)
        self.i = 0

    def peek(self) -> Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def pos(self) -> int:
        tok = self.peek()
        return tok.position if tok else len(self.source)

    def at(self, *texts: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind in ("operator", "punctuation") and tok.text in texts

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.peek()
            what = repr(found.text) if found else "end of input"
            raise ParseError(f"unexpected {what}", self.pos(), frozenset({text}))
        return self.advance()

    def parse(self) -> Expression:
        e = self.cmp()
        if self.peek() is not None:
            raise ParseError(f"unexpected {self.peek().text!r}", self.pos(),
                             frozenset({"end of input", "+", "-", "*", "/", "^", *_CMP_OPS}))
        return e

    def cmp(self) -> Expression:
        left = self.add()
        if self.at(*_CMP_OPS):
            op = self.advance().text
            left = Compare(op, left, self.add())
        return left

    def add(self) -> Expression:
        left = self.mul()
        while self.at("+", "-"):
            op = self.advance().text
            left = BinOp(op, left, self.mul())
        return left

    def mul(self) -> Expression:
        left = self.unary()
        while self.at("*", "/"):
            op = self.advance().text
            left = BinOp(op, left, self.unary())
        return left

    def unary(self) -> Expression:
        if self.at("-"):
            self.advance()
            return Neg(self.unary())
        return self.pow()

    def pow(self) -> Expression:
        base = self.atom()
        if self.at("^"):
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expression:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", self.pos(),
                             frozenset({"number", "identifier", "(", "-"}))
        if tok.kind == "number":
            self.advance()
            value = float(tok.text)
            if not math.isfinite(value):
                raise ParseError(f"number {tok.text} out of range", tok.position)
            return Number(value)
        if tok.kind == "identifier":
            self.advance()
            if self.at("("):
                return self.call(tok)
            return Var(tok.text)
        if self.at("("):
            self.advance()
            e = self.cmp()
            self.expect(")")
            return e
        raise ParseError(f"unexpected {tok.text!r}", tok.position,
                         frozenset({"number", "identifier", "(", "-"}))

    def call(self, name: Token) -> Expression:
        if name.text not in _ARITY:
            raise UnknownFunctionError(f"unknown function {name.text!r}", name.position)
        self.expect("(")
        args = [self.cmp()]
        while self.at(","):
            self.advance()
            args.append(self.cmp())
        self.expect(")")
        if len(args) != _ARITY[name.text]:
            raise ArityError(
                f"{name.text} takes {_ARITY[name.text]} arguments, got {len(args)}", name.position)
        if name.text == "if" and not isinstance(args[0], Compare):
            raise ArityError("first argument of if must be a comparison", name.position)
        return Call(name.text, tuple(args))


def parse(source: str) -> Expression:
    return _Parser(source).parse()


# ---------------------------------------------------------------- evaluation

def _finite(x: float, what: str) -> float:
    if not math.isfinite(x):
        raise DomainError(f"{what} produced a non-finite value")
    return x


def _binop(op: str, x: float, y: float) -> float:
    if op == "+":
        r = x + y
    elif op == "-":
        r = x - y
    elif op == "*":
        r = x * y
    elif op == "/":
        if y == 0.0:
            raise DomainError("division by zero")
        r = x / y
    else:
        if x == 0.0 and y < 0.0:
            raise DomainError("zero raised to a negative power")
        try:
            r = x ** y
        except OverflowError:
            raise DomainError("power overflow") from None
        if isinstance(r, complex):
            raise DomainError("negative base raised to a fractional power")
    return _finite(r, op)


def _compare(op: str, x: float, y: float) -> float:
    if op == "<":
        return float(x < y)
    if op == "<=":
        return float(x <= y)
    if op == ">":
        return float(x > y)
    if op == ">=":
        return float(x >= y)
    return float(x == y)


def evaluate(e: Expression, bindings: Mapping[str, float]) -> float:
    """Evaluate ``e`` with IEEE doubles; NaN and infinities are reported as errors."""
    if isinstance(e, Number):
        return e.value
    if isinstance(e, Var):
        try:
            return float(bindings[e.name])
        except KeyError:
            raise UnboundVariableError(e.name) from None
    if isinstance(e, Neg):
        return -evaluate(e.operand, bindings)
    if isinstance(e, BinOp):
        return _binop(e.op, evaluate(e.left, bindings), evaluate(e.right, bindings))
    if isinstance(e, Compare):
        return _compare(e.op, evaluate(e.left, bindings), evaluate(e.right, bindings))
    if isinstance(e, Call):
        if e.func == "if":
            taken = e.args[1] if evaluate(e.args[0], bindings) != 0.0 else e.args[2]
            return evaluate(taken, bindings)
        x, y = (evaluate(a, bindings) for a in e.args)
        return min(x, y) if e.func == "min" else max(x, y)
    raise TypeError(f"not an expression node: {e!r}")


_NP_BIN = {"+": np.add, "-": np.subtract, "*": np.multiply, "/": np.divide, "^": np.power}
_NP_CMP = {"<": np.less, "<=": np.less_equal, ">": np.greater, ">=": np.greater_equal, "=": np.equal}


def _eval_np(e: Expression, env: Mapping[str, np.ndarray]) -> np.ndarray:
    if isinstance(e, Number):
        return np.float64(e.value)
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise UnboundVariableError(e.name) from None
    if isinstance(e, Neg):
        return np.negative(_eval_np(e.operand, env))
    if isinstance(e, BinOp):
        x, y = _eval_np(e.left, env), _eval_np(e.right, env)
        if e.op == "^":
            x = np.asarray(x, dtype=float)
        return _NP_BIN[e.op](x, y)
    if isinstance(e, Compare):
        return _NP_CMP[e.op](_eval_np(e.left, env), _eval_np(e.right, env)).astype(float)
    if isinstance(e, Call):
        args = [_eval_np(a, env) for a in e.args]
        if e.func == "if":
            return np.where(args[0] != 0.0, args[1], args[2])
        return (np.minimum if e.func == "min" else np.maximum)(*args)
    raise TypeError(f"not an expression node: {e!r}")


def evaluate_array(e: Expression, bindings: Mapping[str, np.ndarray]) -> np.ndarray:
    """Vectorised :func:`evaluate` over broadcastable arrays of bindings.

    Both branches of ``if`` are computed, but an error in the untaken branch is
    discarded. Any non-finite element of the result is re-evaluated with the
    scalar evaluator so the caller sees the same error the scalar path raises.
    """
    env = {k: np.asarray(v, dtype=float) for k, v in bindings.items()}
    with np.errstate(all="ignore"):
        out = np.asarray(_eval_np(e, env), dtype=float)
        shape = np.broadcast_shapes(out.shape, *(v.shape for v in env.values()))
        out = np.broadcast_to(out, shape)
    bad = ~np.isfinite(out)
    if bad.any():
        idx = tuple(int(k) for k in np.argwhere(bad)[0])
        point = {k: float(np.broadcast_to(v, shape)[idx]) for k, v in env.items()}
        evaluate(e, point)
        raise DomainError("expression produced a non-finite value")
    return out


def free_variables(e: Expression) -> set[str]:
    if isinstance(e, Number):
        return set()
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Neg):
        return free_variables(e.operand)
    if isinstance(e, (BinOp, Compare)):
        return free_variables(e.left) | free_variables(e.right)
    return set().union(*(free_variables(a) for a in e.args))


def to_source(e: Expression) -> str:
    """Fully parenthesised source text; ``parse(to_source(e)) == e``."""
    if isinstance(e, Number):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_source(e.operand)})"
    if isinstance(e, (BinOp, Compare)):
        return f"({to_source(e.left)} {e.op} {to_source(e.right)})"
    return f"{e.func}({', '.join(to_source(a) for a in e.args)})"
