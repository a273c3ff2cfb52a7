"""Tiny arithmetic expression grammar for coefficient functions.

Supported syntax: the variable ``x``, decimal literals, ``+ - * / ^``,
and parentheses.  ``^`` is exponentiation and binds tightest; unary
minus is allowed.  Expressions are parsed once into a small AST that
can be evaluated on numpy arrays and differentiated exactly.
"""

from __future__ import annotations

import re

import numpy as np

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|(x)|([()+\-*/^]))")


class ExpressionError(ValueError):
    """Malformed expression string."""


# ---- AST nodes ----

class Node:
    def __call__(self, x):
        raise NotImplementedError

    def diff(self) -> "Node":
        raise NotImplementedError


class Const(Node):
    def __init__(self, value: float):
        self.value = float(value)

    def __call__(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.value)

    def diff(self):
        return Const(0.0)

    def __repr__(self):
        return repr(self.value)


class Var(Node):
    def __call__(self, x):
        return np.asarray(x, dtype=float)

    def diff(self):
        return Const(1.0)

    def __repr__(self):
        return "x"


class Binary(Node):
    op = "?"

    def __init__(self, left: Node, right: Node):
        self.left = left
        self.right = right

    def __repr__(self):
        return f"({self.left!r} {self.op} {self.right!r})"


class Add(Binary):
    op = "+"

    def __call__(self, x):
        return self.left(x) + self.right(x)

    def diff(self):
        return Add(self.left.diff(), self.right.diff())


class Sub(Binary):
    op = "-"

    def __call__(self, x):
        return self.left(x) - self.right(x)

    def diff(self):
        return Sub(self.left.diff(), self.right.diff())


class Mul(Binary):
    op = "*"

    def __call__(self, x):
        return self.left(x) * self.right(x)

    def diff(self):
        return Add(Mul(self.left.diff(), self.right), Mul(self.left, self.right.diff()))


class Div(Binary):
    op = "/"

    def __call__(self, x):
        return self.left(x) / self.right(x)

    def diff(self):
        num = Sub(Mul(self.left.diff(), self.right), Mul(self.left, self.right.diff()))
        return Div(num, Mul(self.right, self.right))


class Pow(Binary):
    op = "^"

    def __call__(self, x):
        return self.left(x) ** self.right(x)

    def diff(self):
        # General rule d(u^v) = u^v * (v' ln u + v u'/u); collapses to the
        # power rule when the exponent is constant.
        if isinstance(self.right, Const):
            n = self.right.value
            return Mul(Mul(Const(n), Pow(self.left, Const(n - 1.0))), self.left.diff())
        return Mul(self, Add(Mul(self.right.diff(), Log(self.left)),
                             Mul(self.right, Div(self.left.diff(), self.left))))


class Log(Node):
    # Internal node produced only by differentiating variable exponents.
    def __init__(self, arg: Node):
        self.arg = arg

    def __call__(self, x):
        return np.log(self.arg(x))

    def diff(self):
        return Div(self.arg.diff(), self.arg)

    def __repr__(self):
        return f"log({self.arg!r})"


# ---- parser (precedence climbing) ----

def _tokenize(text: str) -> list[str]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            if text[pos:].strip():
                raise ExpressionError(f"unexpected character at {text[pos:]!r}")
            break
        tokens.append(m.group(1) or m.group(2) or m.group(3))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, tokens: list[str]):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def expr(self) -> Node:
        node = self.term()
        while self.peek() in ("+", "-"):
            op = self.take()
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek() in ("*", "/"):
            op = self.take()
            rhs = self.unary()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def unary(self) -> Node:
        if self.peek() == "-":
            self.take()
            return Sub(Const(0.0), self.unary())
        if self.peek() == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek() == "^":
            self.take()
            # Right associative; exponent may itself be signed.
            return Pow(base, self.unary())
        return base

    def atom(self) -> Node:
        tok = self.take()
        if tok is None:
            raise ExpressionError("unexpected end of expression")
        if tok == "(":
            node = self.expr()
            if self.take() != ")":
                raise ExpressionError("missing closing parenthesis")
            return node
        if tok == "x":
            return Var()
        try:
            return Const(float(tok))
        except (TypeError, ValueError):
            raise ExpressionError(f"unexpected token {tok!r}") from None


def parse(text: str) -> Node:
    """Parse an expression string into an evaluable, differentiable AST."""
    # Tolerate Python-style exponentiation in config files.
    tokens = _tokenize(text.replace("**", "^"))
    if not tokens:
        raise ExpressionError("empty expression")
    parser = _Parser(tokens)
    node = parser.expr()
    if parser.peek() is not None:
        raise ExpressionError(f"trailing tokens near {parser.peek()!r}")
    return node
