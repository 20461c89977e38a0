"""Arithmetic expression trees: parsing, evaluation, rendering, folding.

Expressions are what the genotype mapper produces as flat text.  This module
parses that text into an immutable AST, evaluates it against lagged data
(scalar or vectorized), renders it back to a canonical string, and performs
constant folding for reporting and persistence.

There are no protected operators: division by zero, log of a non-positive
value, or overflow makes the result non-finite, which callers treat as an
invalid model.  Non-finite intermediates are pinned to NaN immediately so
they cannot be masked by a later operation (e.g. 1/(1/0)).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Union

import numpy as np

from .errors import DataError

UNARY_FUNCTIONS = {
    "exp": np.exp,
    "sin": np.sin,
    "cos": np.cos,
    "log": np.log,
    "tan": np.tan,
}

Node = Union["Constant", "VarRef", "PredRef", "UnaryFun", "Neg", "BinOp"]


@dataclass(frozen=True)
class Constant:
    value: float


@dataclass(frozen=True)
class VarRef:
    name: str
    lag: int = 0
    bracketed: bool = True  # False for bare identifiers like x, y, z


@dataclass(frozen=True)
class PredRef:
    name: str
    lag: int


@dataclass(frozen=True)
class UnaryFun:
    name: str
    arg: Node


@dataclass(frozen=True)
class Neg:
    arg: Node


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: Node
    right: Node


@dataclass
class EvalContext:
    """Value lookups for one evaluation instant.

    ``feature(name, lag)`` returns the measured value of a variable ``lag``
    samples back; ``prediction(lag)`` returns a previously emitted prediction.
    """

    feature: Callable[[str, int], float]
    prediction: Optional[Callable[[int], float]] = None


def evaluate(e: Node, ctx: EvalContext) -> float:
    """Evaluate ``e`` at a single instant; returns NaN on any non-finite step."""
    with np.errstate(all="ignore"):
        return float(_eval(e, ctx))


def _eval(e: Node, ctx: EvalContext) -> float:
    if isinstance(e, Constant):
        return e.value
    if isinstance(e, VarRef):
        return float(ctx.feature(e.name, e.lag))
    if isinstance(e, PredRef):
        if ctx.prediction is None:
            raise KeyError(f"no prediction lookup bound for {e.name}")
        return float(ctx.prediction(e.lag))
    if isinstance(e, Neg):
        return -_eval(e.arg, ctx)
    if isinstance(e, UnaryFun):
        v = _eval(e.arg, ctx)
        if not np.isfinite(v):
            return float("nan")
        r = float(UNARY_FUNCTIONS[e.name](np.float64(v)))
        return r if np.isfinite(r) else float("nan")
    if isinstance(e, BinOp):
        a = _eval(e.left, ctx)
        if not np.isfinite(a):
            return float("nan")
        b = _eval(e.right, ctx)
        if not np.isfinite(b):
            return float("nan")
        r = float(_BINOPS[e.op](np.float64(a), np.float64(b)))
        return r if np.isfinite(r) else float("nan")
    raise TypeError(f"not an expression node: {e!r}")


_BINOPS = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.divide,
}


def evaluate_batch(e: Node, features: dict) -> np.ndarray:
    """Vectorized evaluation over aligned lag arrays.

    ``features`` maps ``(name, lag)`` to equal-length float arrays.  Only
    valid for expressions without prediction references (those are inherently
    sequential).  Entries where any step went non-finite are NaN.
    """
    with np.errstate(all="ignore"):
        return _eval_batch(e, features)


def _pin_nonfinite(a: np.ndarray) -> np.ndarray:
    bad = ~np.isfinite(a)
    if bad.any():
        a = np.where(bad, np.nan, a)
    return a


def _eval_batch(e: Node, features: dict) -> np.ndarray:
    if isinstance(e, Constant):
        n = len(next(iter(features.values())))
        return np.full(n, np.float64(e.value))
    if isinstance(e, VarRef):
        return features[(e.name, e.lag)]
    if isinstance(e, PredRef):
        raise ValueError("prediction references cannot be evaluated in batch")
    if isinstance(e, Neg):
        return -_eval_batch(e.arg, features)
    if isinstance(e, UnaryFun):
        return _pin_nonfinite(UNARY_FUNCTIONS[e.name](_eval_batch(e.arg, features)))
    if isinstance(e, BinOp):
        a = _eval_batch(e.left, features)
        b = _eval_batch(e.right, features)
        return _pin_nonfinite(_BINOPS[e.op](a, b))
    raise TypeError(f"not an expression node: {e!r}")


def render(e: Node) -> str:
    """Deterministic infix text with explicit parentheses; parse-stable."""
    if isinstance(e, Constant):
        return _format_number(e.value)
    if isinstance(e, VarRef):
        return f"{e.name}[k-{e.lag}]" if e.bracketed else e.name
    if isinstance(e, PredRef):
        return f"{e.name}[k-{e.lag}]"
    if isinstance(e, Neg):
        return f"(-{render(e.arg)})"
    if isinstance(e, UnaryFun):
        return f"{e.name}({render(e.arg)})"
    if isinstance(e, BinOp):
        return f"({render(e.left)}{e.op}{render(e.right)})"
    raise TypeError(f"not an expression node: {e!r}")


def _format_number(v: float) -> str:
    # positional (no exponent) so the tokenizer can always read it back
    return np.format_float_positional(v, unique=True, trim="0")


_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<lagref>[A-Za-z_]\w*)\[k-(?P<lag>\d+)\]"
    r"|(?P<ident>[A-Za-z_]\w*)"
    r"|(?P<number>\d+\.\d+|\d+\.?|\.\d+)"
    r"|(?P<op>[-+*/()])"
    r")"
)


def _tokenize(text: str) -> Iterator[tuple]:
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise DataError(f"cannot tokenize expression at position {pos}: {text[pos:pos + 12]!r}")
        pos = m.end()
        if m.group("lagref"):
            yield ("lagref", m.group("lagref"), int(m.group("lag")))
        elif m.group("ident"):
            yield ("ident", m.group("ident"), None)
        elif m.group("number"):
            yield ("number", m.group("number"), None)
        else:
            yield ("op", m.group("op"), None)


class _Parser:
    def __init__(self, text: str, prediction_var: Optional[str]):
        self.tokens = list(_tokenize(text))
        self.pos = 0
        self.prediction_var = prediction_var
        self.text = text

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self):
        tok = self.peek()
        if tok is None:
            raise DataError(f"unexpected end of expression: {self.text!r}")
        self.pos += 1
        return tok

    def expect_op(self, op: str):
        tok = self.next()
        if tok[0] != "op" or tok[1] != op:
            raise DataError(f"expected {op!r} in expression {self.text!r}, got {tok[1]!r}")

    def parse(self) -> Node:
        node = self.expr()
        if self.peek() is not None:
            raise DataError(f"trailing tokens in expression {self.text!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while (tok := self.peek()) and tok[0] == "op" and tok[1] in "+-":
            self.next()
            node = BinOp(tok[1], node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while (tok := self.peek()) and tok[0] == "op" and tok[1] in "*/":
            self.next()
            node = BinOp(tok[1], node, self.unary())
        return node

    def unary(self) -> Node:
        tok = self.peek()
        if tok and tok[0] == "op" and tok[1] in "+-":
            self.next()
            inner = self.unary()
            if tok[1] == "+":
                return inner
            if isinstance(inner, Constant):
                return Constant(-inner.value)
            return Neg(inner)
        return self.primary()

    def primary(self) -> Node:
        tok = self.next()
        kind, text, lag = tok
        if kind == "number":
            return Constant(float(text))
        if kind == "lagref":
            if self.prediction_var is not None and text == self.prediction_var:
                return PredRef(text, lag)
            return VarRef(text, lag, bracketed=True)
        if kind == "ident":
            if text in UNARY_FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return UnaryFun(text, arg)
            return VarRef(text, 0, bracketed=False)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise DataError(f"unexpected token {text!r} in expression {self.text!r}")


def parse(text: str, prediction_var: Optional[str] = None) -> Node:
    """Parse infix expression text into an AST.

    Identifiers matching ``prediction_var`` in ``name[k-lag]`` form become
    prediction references; every other identifier is a variable reference.
    """
    return _Parser(text, prediction_var).parse()


def fold_constants(e: Node) -> Node:
    """Replace reference-free subtrees with their constant value.

    Also drops multiplications by exactly 1.0, which arise from folds like
    exp(0.0).  Evaluation semantics are preserved bit-for-bit.
    """
    folded, is_const = _fold(e)
    return folded


def _fold(e: Node) -> tuple:
    if isinstance(e, Constant):
        return e, True
    if isinstance(e, (VarRef, PredRef)):
        return e, False
    if isinstance(e, Neg):
        arg, const = _fold(e.arg)
        node = Neg(arg)
        return (_to_constant(node) if const else node), const
    if isinstance(e, UnaryFun):
        arg, const = _fold(e.arg)
        node = UnaryFun(e.name, arg)
        return (_to_constant(node) if const else node), const
    if isinstance(e, BinOp):
        left, lc = _fold(e.left)
        right, rc = _fold(e.right)
        if lc and rc:
            return _to_constant(BinOp(e.op, left, right)), True
        if e.op == "*":
            if isinstance(left, Constant) and left.value == 1.0:
                return right, rc
            if isinstance(right, Constant) and right.value == 1.0:
                return left, lc
        return BinOp(e.op, left, right), False
    raise TypeError(f"not an expression node: {e!r}")


def _to_constant(e: Node) -> Node:
    v = evaluate(e, EvalContext(feature=lambda n, l: float("nan")))
    return Constant(v) if np.isfinite(v) else e


def walk(e: Node) -> Iterator[Node]:
    """Yield every node of the tree, parents first."""
    yield e
    if isinstance(e, (UnaryFun, Neg)):
        yield from walk(e.arg)
    elif isinstance(e, BinOp):
        yield from walk(e.left)
        yield from walk(e.right)


def variable_names(e: Node) -> set:
    """All identifiers referenced, both measured and predicted."""
    names = set()
    for node in walk(e):
        if isinstance(node, (VarRef, PredRef)):
            names.add(node.name)
    return names


def has_pred_refs(e: Node) -> bool:
    return any(isinstance(n, PredRef) for n in walk(e))


def max_lags(e: Node) -> tuple:
    """(largest measured-variable lag, largest prediction lag); 0 if unused."""
    var_lag = 0
    pred_lag = 0
    for node in walk(e):
        if isinstance(node, VarRef):
            var_lag = max(var_lag, node.lag)
        elif isinstance(node, PredRef):
            pred_lag = max(pred_lag, node.lag)
    return var_lag, pred_lag
