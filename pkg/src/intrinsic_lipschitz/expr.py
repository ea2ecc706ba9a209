"""A small arithmetic language for section heights and weight functions.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := base ('^' number)?
    base   := number | ident | '(' expr ')' | func '(' expr ')'

Identifiers are the base coordinates ``y1 .. yk``; ``func`` is one of
``sin cos exp abs sqrt tanh``.  There are no unary operators.  Evaluation
is vectorized: bind each ``yi`` to a numpy array.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "abs": np.abs,
    "sqrt": np.sqrt,
    "tanh": np.tanh,
}
_VAR = re.compile(r"y[1-9][0-9]*\Z")


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class ExprEvalError(ValueError):
    pass


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


def tokenize(src: str) -> list:
    tokens, pos = [], 0
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if not m:
            offset = pos + (len(src[pos:]) - len(src[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {src[offset]!r}", offset)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.take()
        if text != value or kind != "op":
            raise ExprSyntaxError(f"expected {value!r}, found {text or 'end of input'!r}", pos)

    def parse(self):
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {text!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        node = self.base()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            kind, text, pos = self.take()
            if kind != "num":
                raise ExprSyntaxError("exponent must be a number", pos)
            node = BinOp("^", node, Num(float(text)))
        return node

    def base(self):
        kind, text, pos = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "ident":
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                k2, t2, p2 = self.peek()
                if (k2, t2) == ("op", ","):
                    raise ExprSyntaxError(f"{text} takes exactly one argument", p2)
                self.expect(")")
                return Call(text, arg)
            if not _VAR.match(text):
                raise ExprSyntaxError(f"unknown identifier {text!r}", pos)
            if self.peek()[:2] == ("op", "("):
                raise ExprSyntaxError(f"{text} is not a function", self.peek()[2])
            return Var(text)
        if (kind, text) == ("op", "("):
            node = self.expr()
            self.expect(")")
            return node
        raise ExprSyntaxError(f"unexpected {text or 'end of input'!r}", pos)


def parse_expression(src: str):
    if not src or not src.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(src).parse()


def evaluate_expression(ast, env: dict):
    """Evaluate ``ast`` with ``env`` mapping ``y1 .. yk`` to numbers or arrays."""
    with np.errstate(all="ignore"):
        out = _eval(ast, env)
    return float(out) if np.ndim(out) == 0 else out


def _check(v, what):
    if not np.all(np.isfinite(v)):
        raise ExprEvalError(f"{what} produced a non-finite value")
    return v


def _eval(node, env):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        if node.name not in env:
            raise ExprEvalError(f"unknown identifier {node.name!r}")
        return np.asarray(env[node.name], float)
    if isinstance(node, Call):
        a = _eval(node.arg, env)
        if node.func == "sqrt" and np.any(np.asarray(a) < 0):
            raise ExprEvalError("sqrt of a negative value")
        return _check(FUNCTIONS[node.func](a), node.func)
    a = _eval(node.left, env)
    b = _eval(node.right, env)
    if node.op == "+":
        r = a + b
    elif node.op == "-":
        r = a - b
    elif node.op == "*":
        r = a * b
    elif node.op == "/":
        if np.any(np.abs(b) < 1e-300):
            raise ExprEvalError("division by zero")
        r = a / b
    else:
        r = np.power(a, b)
    return _check(r, node.op)


def to_source(node) -> str:
    """Fully parenthesized source text; ``parse_expression(to_source(a)) == a``."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    if node.op == "^":
        return f"({to_source(node.left)}^{repr(float(node.right.value))})"
    return f"({to_source(node.left)}{node.op}{to_source(node.right)})"


def compile_expression(src: str):
    """Parse once, return ``f(base) -> values`` over an ``(m, k)`` array of base points."""
    ast = parse_expression(src)

    def f(base):
        base = np.asarray(base, float)
        if base.ndim == 1:
            base = base[:, None]
        env = {f"y{i + 1}": base[:, i] for i in range(base.shape[1])}
        return np.broadcast_to(evaluate_expression(ast, env), (len(base),)).astype(float)

    f.source = src
    f.ast = ast
    return f
