"""Recursive-descent parser shared by the polynomial and operator syntaxes.

Grammar::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("+" | "-") unary | power
    power  := atom (("^" | "**") unary)?
    atom   := NUMBER | NAME | "(" expr ")"

NUMBER is an integer or decimal literal (kept exact). Exponents must reduce
to non-negative integer constants. The caller supplies how names, constants
and division are interpreted, so the same grammar builds jet polynomials,
rational functions and differential operators.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Callable, Generic, TypeVar

from .errors import ConfigurationError

T = TypeVar("T")

_TOKEN = re.compile(r"\s*(?:(\d+\.\d*|\.\d+|\d+)|([A-Za-z_][A-Za-z_0-9']*)|(\*\*|[-+*/^()]))")


def tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ConfigurationError(f"unexpected character {text[pos]!r}", position=pos, text=text)
        num, name, op = m.groups()
        if num is not None:
            tokens.append(("num", num))
        elif name is not None:
            tokens.append(("name", name))
        else:
            tokens.append(("op", op))
        pos = m.end()
    return tokens


class Parser(Generic[T]):
    def __init__(
        self,
        atom: Callable[[str], T],
        const: Callable[[Fraction], T],
        divide: Callable[[T, T], T],
        power: Callable[[T, int], T] | None = None,
        as_integer: Callable[[T], int | None] | None = None,
    ):
        self.atom = atom
        self.const = const
        self.divide = divide
        self.power = power or (lambda base, n: base**n)
        self.as_integer = as_integer

    def parse(self, text: str) -> T:
        self.tokens = tokenize(text)
        self.i = 0
        self.text = text
        if not self.tokens:
            raise ConfigurationError("empty expression")
        value = self._expr()
        if self.i != len(self.tokens):
            raise ConfigurationError(
                f"unexpected token {self.tokens[self.i][1]!r}", text=text
            )
        return value

    def _peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def _take(self, value: str | None = None):
        tok = self._peek()
        if tok[0] is None or (value is not None and tok[1] != value):
            raise ConfigurationError(f"expected {value or 'token'}", text=self.text)
        self.i += 1
        return tok

    def _expr(self) -> T:
        value = self._term()
        while self._peek() in (("op", "+"), ("op", "-")):
            op = self._take()[1]
            rhs = self._term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def _term(self) -> T:
        value = self._unary()
        while self._peek() in (("op", "*"), ("op", "/")):
            op = self._take()[1]
            rhs = self._unary()
            value = value * rhs if op == "*" else self.divide(value, rhs)
        return value

    def _unary(self) -> T:
        if self._peek() == ("op", "-"):
            self._take()
            return -self._unary()
        if self._peek() == ("op", "+"):
            self._take()
            return self._unary()
        return self._power()

    def _power(self) -> T:
        base = self._atom()
        if self._peek() in (("op", "^"), ("op", "**")):
            self._take()
            exp_tok = self._peek()
            if exp_tok[0] == "num" and exp_tok[1].isdigit():
                self._take()
                n = int(exp_tok[1])
            else:
                raise ConfigurationError("exponent must be a non-negative integer", text=self.text)
            base = self.power(base, n)
        return base

    def _atom(self) -> T:
        kind, val = self._peek()
        if kind == "num":
            self._take()
            return self.const(Fraction(val))
        if kind == "name":
            self._take()
            return self.atom(val)
        if (kind, val) == ("op", "("):
            self._take()
            inner = self._expr()
            self._take(")")
            return inner
        raise ConfigurationError(f"unexpected token {val!r}", text=self.text)
