"""Linear ordinary differential operators with rational-function coefficients.

An operator ``sum_k c_k(x) d^k`` is a :class:`LinearDiffOp`; multiplication
by a function is the order-0 operator, so composition needs no special
cases. Coefficients are exact :class:`RationalFn` values kept in lowest
terms after every operation.
"""

from __future__ import annotations

import functools
import json
from fractions import Fraction
from math import comb
from typing import Iterable, Sequence

from ._parsing import Parser
from .errors import ConfigurationError, ShapeError


class UPoly:
    """Dense univariate polynomial, coefficients low to high."""

    __slots__ = ("c",)

    def __init__(self, coeffs: Iterable = ()):
        c = [Fraction(v) for v in coeffs]
        while c and c[-1] == 0:
            c.pop()
        self.c = tuple(c)

    @classmethod
    def const(cls, v) -> "UPoly":
        return cls([v])

    @classmethod
    def x(cls) -> "UPoly":
        return cls([0, 1])

    @classmethod
    def monomial(cls, k: int, coeff=1) -> "UPoly":
        return cls([0] * k + [coeff])

    @property
    def degree(self) -> int:
        return len(self.c) - 1

    def is_zero(self) -> bool:
        return not self.c

    def lead(self) -> Fraction:
        return self.c[-1] if self.c else Fraction(0)

    def __add__(self, o: "UPoly") -> "UPoly":
        n = max(len(self.c), len(o.c))
        a = self.c + (Fraction(0),) * (n - len(self.c))
        b = o.c + (Fraction(0),) * (n - len(o.c))
        return UPoly(x + y for x, y in zip(a, b))

    def __neg__(self) -> "UPoly":
        return UPoly(-v for v in self.c)

    def __sub__(self, o: "UPoly") -> "UPoly":
        return self + (-o)

    def __mul__(self, o) -> "UPoly":
        if not isinstance(o, UPoly):
            o = UPoly.const(o)
        if not self.c or not o.c:
            return UPoly()
        out = [Fraction(0)] * (len(self.c) + len(o.c) - 1)
        for i, a in enumerate(self.c):
            if a:
                for j, b in enumerate(o.c):
                    out[i + j] += a * b
        return UPoly(out)

    __rmul__ = __mul__

    def divmod(self, o: "UPoly") -> tuple["UPoly", "UPoly"]:
        if o.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.c)
        q = [Fraction(0)] * max(0, len(rem) - len(o.c) + 1)
        lead = o.c[-1]
        for i in range(len(q) - 1, -1, -1):
            coef = rem[i + len(o.c) - 1] / lead
            q[i] = coef
            if coef:
                for j, b in enumerate(o.c):
                    rem[i + j] -= coef * b
        return UPoly(q), UPoly(rem[: len(o.c) - 1])

    def monic(self) -> "UPoly":
        return self * (1 / self.lead()) if self.c else self

    def derivative(self, k: int = 1) -> "UPoly":
        p = self
        for _ in range(k):
            p = UPoly(i * v for i, v in enumerate(p.c) if i)
        return p

    def __call__(self, x):
        acc = 0
        for v in reversed(self.c):
            acc = acc * x + (float(v) if not isinstance(x, Fraction) else v)
        return acc

    def __eq__(self, o) -> bool:
        return isinstance(o, UPoly) and self.c == o.c

    def __hash__(self) -> int:
        return hash(self.c)

    def __str__(self) -> str:
        if not self.c:
            return "0"
        parts = []
        for k in range(len(self.c) - 1, -1, -1):
            v = self.c[k]
            if not v:
                continue
            mag = abs(v)
            if k == 0:
                body = str(mag)
            else:
                xs = "x" if k == 1 else f"x^{k}"
                body = xs if mag == 1 else f"{mag}*{xs}"
            parts.append(("-" if v < 0 else "+", body))
        text = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for s, b in parts[1:]:
            text += f" {s} {b}"
        return text

    __repr__ = __str__


def poly_gcd(a: UPoly, b: UPoly) -> UPoly:
    while not b.is_zero():
        a, b = b, a.divmod(b)[1]
    return a.monic() if not a.is_zero() else UPoly.const(1)


class RationalFn:
    """Reduced quotient of univariate polynomials, monic denominator."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=None):
        num = num if isinstance(num, UPoly) else UPoly.const(num)
        den = UPoly.const(1) if den is None else (den if isinstance(den, UPoly) else UPoly.const(den))
        if den.is_zero():
            raise ZeroDivisionError("rational function with zero denominator")
        if num.is_zero():
            self.num, self.den = UPoly(), UPoly.const(1)
            return
        g = poly_gcd(num, den)
        if g.degree > 0:
            num = num.divmod(g)[0]
            den = den.divmod(g)[0]
        lead = den.lead()
        self.num = num * (1 / lead)
        self.den = den * (1 / lead)

    @classmethod
    def coerce(cls, v) -> "RationalFn":
        if isinstance(v, RationalFn):
            return v
        if isinstance(v, UPoly):
            return cls(v)
        if isinstance(v, (int, Fraction)):
            return cls(UPoly.const(v))
        if isinstance(v, str):
            return parse_rational(v)
        raise ConfigurationError("cannot convert to rational function", value=repr(v))

    @classmethod
    def x(cls) -> "RationalFn":
        return cls(UPoly.x())

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_polynomial(self) -> bool:
        return self.den.degree == 0

    def is_constant(self) -> bool:
        return self.is_polynomial() and self.num.degree <= 0

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ShapeError("rational function is not constant", value=str(self))
        return self.num.c[0] if self.num.c else Fraction(0)

    def __add__(self, o) -> "RationalFn":
        o = RationalFn.coerce(o)
        if self.den == o.den:
            return RationalFn(self.num + o.num, self.den)
        return RationalFn(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self) -> "RationalFn":
        return RationalFn(-self.num, self.den)

    def __sub__(self, o) -> "RationalFn":
        return self + (-RationalFn.coerce(o))

    def __rsub__(self, o) -> "RationalFn":
        return RationalFn.coerce(o) - self

    def __mul__(self, o) -> "RationalFn":
        o = RationalFn.coerce(o)
        return RationalFn(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, o) -> "RationalFn":
        o = RationalFn.coerce(o)
        if o.is_zero():
            raise ZeroDivisionError("division by the zero rational function")
        return RationalFn(self.num * o.den, self.den * o.num)

    def __rtruediv__(self, o) -> "RationalFn":
        return RationalFn.coerce(o) / self

    def __pow__(self, n: int) -> "RationalFn":
        out = RationalFn(1)
        for _ in range(n):
            out = out * self
        return out

    def derivative(self, k: int = 1) -> "RationalFn":
        r = self
        for _ in range(k):
            if r.is_polynomial():
                r = RationalFn(r.num.derivative(), r.den)
            else:
                r = RationalFn(
                    r.num.derivative() * r.den - r.num * r.den.derivative(), r.den * r.den
                )
        return r

    def __call__(self, x):
        return self.num(x) / self.den(x)

    def __eq__(self, o) -> bool:
        try:
            o = RationalFn.coerce(o)
        except ConfigurationError:
            return NotImplemented
        return self.num == o.num and self.den == o.den

    def __hash__(self) -> int:
        return hash((self.num, self.den))

    def __str__(self) -> str:
        if self.is_polynomial():
            return str(self.num)
        return f"({self.num})/({self.den})"

    __repr__ = __str__

    def to_json(self) -> dict:
        return {"num": [str(v) for v in self.num.c], "den": [str(v) for v in self.den.c]}

    @classmethod
    def from_json(cls, data) -> "RationalFn":
        if isinstance(data, (int, str)):
            return cls.coerce(Fraction(data) if not isinstance(data, str) else parse_rational(data))
        return cls(UPoly(Fraction(v) for v in data["num"]), UPoly(Fraction(v) for v in data.get("den", ["1"])))


def _rational_div(a: RationalFn, b: RationalFn) -> RationalFn:
    return a / b


@functools.lru_cache(maxsize=1)
def _rational_parser() -> Parser:
    def atom(name: str) -> RationalFn:
        if name != "x":
            raise ConfigurationError(f"unknown symbol {name!r} in rational function")
        return RationalFn.x()

    return Parser(atom=atom, const=lambda c: RationalFn(c), divide=_rational_div)


def parse_rational(text: str) -> RationalFn:
    return _rational_parser().parse(text)


# --------------------------------------------------------------------------
# operators
# --------------------------------------------------------------------------


class LinearDiffOp:
    """``sum_k coeffs[k] * d^k`` in the variable ``var``."""

    __slots__ = ("coeffs", "var")

    def __init__(self, coeffs: Sequence = (), var: str = "x"):
        cs = [RationalFn.coerce(c) for c in coeffs]
        while cs and cs[-1].is_zero():
            cs.pop()
        self.coeffs = tuple(cs)
        self.var = var

    @classmethod
    def multiplication(cls, a) -> "LinearDiffOp":
        return cls([a])

    @classmethod
    def identity(cls) -> "LinearDiffOp":
        return cls([1])

    @classmethod
    def d(cls, k: int = 1) -> "LinearDiffOp":
        return cls([0] * k + [1])

    @classmethod
    def parse(cls, text: str) -> "LinearDiffOp":
        return _op_parser().parse(text)

    def order(self) -> int:
        """-1 for the zero operator."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def coeff(self, k: int) -> RationalFn:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else RationalFn(0)

    def __add__(self, o) -> "LinearDiffOp":
        o = _as_op(o)
        n = max(len(self.coeffs), len(o.coeffs))
        return LinearDiffOp([self.coeff(k) + o.coeff(k) for k in range(n)], self.var)

    __radd__ = __add__

    def __neg__(self) -> "LinearDiffOp":
        return LinearDiffOp([-c for c in self.coeffs], self.var)

    def __sub__(self, o) -> "LinearDiffOp":
        return self + (-_as_op(o))

    def __rsub__(self, o) -> "LinearDiffOp":
        return _as_op(o) - self

    def __mul__(self, o) -> "LinearDiffOp":
        return compose(self, _as_op(o))

    def __rmul__(self, o) -> "LinearDiffOp":
        return compose(_as_op(o), self)

    __matmul__ = __mul__

    def __pow__(self, n: int) -> "LinearDiffOp":
        out = LinearDiffOp.identity()
        for _ in range(n):
            out = compose(out, self)
        return out

    def __call__(self, p) -> RationalFn:
        return apply_op(self, p)

    def __eq__(self, o) -> bool:
        if not isinstance(o, LinearDiffOp):
            return NotImplemented
        return self.coeffs == o.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for k in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[k]
            if c.is_zero():
                continue
            dpart = f"d{k}"
            if c.is_constant():
                v = c.constant_value()
                sign, mag = ("-" if v < 0 else "+"), abs(v)
                if k == 0:
                    body = str(mag)
                else:
                    body = dpart if mag == 1 else f"{mag}*{dpart}"
            else:
                sign = "+"
                body = f"({c})" if k == 0 else f"({c})*{dpart}"
            parts.append((sign, body))
        text = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for s, b in parts[1:]:
            text += f" {s} {b}"
        return text

    def __repr__(self) -> str:
        return f"LinearDiffOp[{self.var}]({self})"

    def to_json(self) -> dict:
        return {"var": self.var, "coeffs": [c.to_json() for c in self.coeffs]}

    @classmethod
    def from_json(cls, data) -> "LinearDiffOp":
        if isinstance(data, str):
            data = json.loads(data)
        return cls([RationalFn.from_json(c) for c in data["coeffs"]], data.get("var", "x"))

    def evaluate_coefficients(self, x):
        """Floating values of every coefficient at ``x``."""
        return [c(x) for c in self.coeffs]


def _as_op(o) -> LinearDiffOp:
    if isinstance(o, LinearDiffOp):
        return o
    return LinearDiffOp.multiplication(RationalFn.coerce(o))


def compose(L: LinearDiffOp, M: LinearDiffOp) -> LinearDiffOp:
    """L o M via d^i b = sum_k C(i,k) b^(k) d^(i-k)."""
    L, M = _as_op(L), _as_op(M)
    if L.is_zero() or M.is_zero():
        return LinearDiffOp((), L.var)
    out = [RationalFn(0)] * (L.order() + M.order() + 1)
    for i, a in enumerate(L.coeffs):
        if a.is_zero():
            continue
        for j, b in enumerate(M.coeffs):
            if b.is_zero():
                continue
            for k in range(i + 1):
                bk = b.derivative(k)
                if bk.is_zero():
                    break
                out[i - k + j] = out[i - k + j] + a * bk * comb(i, k)
    return LinearDiffOp(out, L.var)


def commutator(L: LinearDiffOp, M: LinearDiffOp) -> LinearDiffOp:
    return compose(L, M) - compose(M, L)


def apply_op(L: LinearDiffOp, p) -> RationalFn:
    """Exact sum_k c_k p^(k)."""
    p = RationalFn.coerce(p)
    out = RationalFn(0)
    for k, c in enumerate(L.coeffs):
        if not c.is_zero():
            out = out + c * p.derivative(k)
    return out


def stirling_first(k: int) -> list[int]:
    """Signed Stirling numbers s(k, j), j = 0..k: x(x-1)...(x-k+1) = sum s(k,j) x^j."""
    row = [1]
    for i in range(k):
        nxt = [0] * (len(row) + 1)
        for j, v in enumerate(row):
            nxt[j + 1] += v
            nxt[j] -= i * v
        row = nxt
    return row


def euler_substitute(L: LinearDiffOp) -> LinearDiffOp:
    """Rewrite sum a_k x^k d_x^k as a constant-coefficient operator in d_t, x = e^t."""
    out = [Fraction(0)] * max(1, len(L.coeffs))
    for k, c in enumerate(L.coeffs):
        if c.is_zero():
            continue
        ratio = c / RationalFn(UPoly.monomial(k))
        if not ratio.is_constant():
            raise ShapeError(
                "operator is not of Euler form a_k x^k d^k", order=k, coefficient=str(c)
            )
        a = ratio.constant_value()
        for j, s in enumerate(stirling_first(k)):
            out[j] += a * s
    return LinearDiffOp(out, var="t")


def monic_operator_from_kernel(basis: Sequence) -> LinearDiffOp:
    """Exact monic operator whose kernel is spanned by rational functions.

    Solves sum_{k<m} c_k phi_i^(k) = -phi_i^(m) by Gaussian elimination over
    the field of rational functions (Cramer form of the bordered Wronskian).
    """
    phis = [RationalFn.coerce(p) for p in basis]
    m = len(phis)
    if m == 0:
        return LinearDiffOp.identity()
    rows = []
    for phi in phis:
        rows.append([phi.derivative(k) for k in range(m)] + [-phi.derivative(m)])
    # eliminate
    for col in range(m):
        piv = next((r for r in range(col, m) if not rows[r][col].is_zero()), None)
        if piv is None:
            raise ShapeError("kernel functions are linearly dependent (zero Wronskian)")
        rows[col], rows[piv] = rows[piv], rows[col]
        inv = 1 / rows[col][col]
        rows[col] = [v * inv for v in rows[col]]
        for r in range(m):
            if r != col and not rows[r][col].is_zero():
                f = rows[r][col]
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[col])]
    coeffs = [rows[k][m] for k in range(m)] + [RationalFn(1)]
    return LinearDiffOp(coeffs)


def _op_div(a: LinearDiffOp, b: LinearDiffOp) -> LinearDiffOp:
    if b.order() != 0:
        raise ConfigurationError("operators can only be divided by functions (order-0 terms)")
    return compose(a, LinearDiffOp.multiplication(1 / b.coeffs[0]))


@functools.lru_cache(maxsize=1)
def _op_parser() -> Parser:
    def atom(name: str) -> LinearDiffOp:
        if name == "x":
            return LinearDiffOp.multiplication(RationalFn.x())
        if name in ("d", "D"):
            return LinearDiffOp.d(1)
        if name[:1] in ("d", "D") and name[1:].isdigit():
            return LinearDiffOp.d(int(name[1:]))
        raise ConfigurationError(f"unknown symbol {name!r} in operator")

    return Parser(
        atom=atom,
        const=lambda c: LinearDiffOp.multiplication(RationalFn(c)),
        divide=_op_div,
    )
