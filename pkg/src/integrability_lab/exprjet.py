"""Exact polynomials over jet coordinates and polynomial vector fields.

Coordinates are ordered ``x < t < y < y1 < y2 < ... < u0 < u1 < ...``.
Coefficients are :class:`fractions.Fraction`, so every verdict built on
these objects (conservation laws, brackets, symmetry checks) is exact.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

from ._parsing import Parser
from .errors import ConfigurationError, DomainError

Rat = Fraction
EXPONENT_CAP = 2**32

_KIND_RANK = {"x": 0, "t": 1, "y": 2, "u": 3}


@functools.total_ordering
@dataclass(frozen=True)
class JetCoord:
    kind: str
    index: int = 0

    def __post_init__(self):
        if self.kind not in _KIND_RANK:
            raise ConfigurationError("unknown jet coordinate kind", kind=self.kind)
        if self.index < 0 or (self.kind in ("x", "t") and self.index != 0):
            raise ConfigurationError("bad jet coordinate index", kind=self.kind, index=self.index)

    @property
    def key(self) -> tuple[int, int]:
        return (_KIND_RANK[self.kind], self.index)

    def __lt__(self, other: "JetCoord") -> bool:
        return self.key < other.key

    @property
    def name(self) -> str:
        if self.kind in ("x", "t"):
            return self.kind
        if self.kind == "y":
            return "y" if self.index == 0 else f"y{self.index}"
        return f"u{self.index}"

    def __str__(self) -> str:
        return self.name

    def __repr__(self) -> str:
        return f"JetCoord({self.name})"

    def shifted(self, by: int = 1) -> "JetCoord":
        """Next jet coordinate under the total x-derivative."""
        if self.kind not in ("y", "u"):
            raise DomainError("only y/u coordinates have derivatives", coord=self.name)
        return JetCoord(self.kind, self.index + by)

    @classmethod
    def parse(cls, name: str) -> "JetCoord":
        name = name.strip()
        if name in ("x", "t"):
            return cls(name)
        if name == "y":
            return cls("y", 0)
        if name.startswith("y'"):
            if set(name[1:]) == {"'"}:
                return cls("y", len(name) - 1)
        if name[:1] in ("y", "u") and name[1:].isdigit():
            return cls(name[0], int(name[1:]))
        if name == "u":
            return cls("u", 0)
        raise ConfigurationError(f"unknown coordinate name {name!r}")


X = JetCoord("x")
T = JetCoord("t")


def y(k: int = 0) -> JetCoord:
    return JetCoord("y", k)


def u(k: int = 0) -> JetCoord:
    return JetCoord("u", k)


CoordLike = Union[JetCoord, str]


def as_coord(c: CoordLike) -> JetCoord:
    return c if isinstance(c, JetCoord) else JetCoord.parse(c)


Monomial = tuple  # tuple[(JetCoord, int), ...] sorted by coordinate


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for c, e in b:
        d[c] = d.get(c, 0) + e
        if d[c] > EXPONENT_CAP:
            raise ConfigurationError("exponent overflow", coord=c.name)
    return tuple(sorted(d.items()))


def _mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


class JetPolynomial:
    """Immutable multivariate polynomial with rational coefficients."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None):
        clean = {}
        for m, c in (terms or {}).items():
            c = Fraction(c)
            if c:
                clean[tuple(sorted(m))] = clean.get(tuple(sorted(m)), Fraction(0)) + c
        self._terms = {m: c for m, c in clean.items() if c}
        self._hash = None

    # construction -------------------------------------------------------
    @classmethod
    def const(cls, c) -> "JetPolynomial":
        return cls({(): Fraction(c)})

    @classmethod
    def var(cls, coord: CoordLike) -> "JetPolynomial":
        return cls({((as_coord(coord), 1),): Fraction(1)})

    @classmethod
    def parse(cls, text: str) -> "JetPolynomial":
        return _poly_parser().parse(text)

    @staticmethod
    def coerce(value) -> "JetPolynomial":
        if isinstance(value, JetPolynomial):
            return value
        if isinstance(value, str):
            return JetPolynomial.parse(value)
        if isinstance(value, (int, Fraction)):
            return JetPolynomial.const(value)
        if isinstance(value, float) and value.is_integer():
            return JetPolynomial.const(int(value))
        raise ConfigurationError("cannot convert to an exact polynomial", value=repr(value))

    # inspection ---------------------------------------------------------
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(m == () for m in self._terms)

    def constant_value(self) -> Fraction:
        return self._terms.get((), Fraction(0))

    def coords(self) -> frozenset:
        return frozenset(c for m in self._terms for c, _ in m)

    def degree(self) -> int:
        return max((_mono_degree(m) for m in self._terms), default=-1)

    def max_order(self, kind: str = "u") -> int:
        """Highest derivative index of ``kind`` present, -1 if none."""
        return max((c.index for c in self.coords() if c.kind == kind), default=-1)

    # arithmetic ---------------------------------------------------------
    def __add__(self, other) -> "JetPolynomial":
        try:
            other = JetPolynomial.coerce(other)
        except ConfigurationError:
            return NotImplemented
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, Fraction(0)) + c
        return JetPolynomial(out)

    __radd__ = __add__

    def __neg__(self) -> "JetPolynomial":
        return JetPolynomial({m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> "JetPolynomial":
        try:
            other = JetPolynomial.coerce(other)
        except ConfigurationError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "JetPolynomial":
        return JetPolynomial.coerce(other) - self

    def __mul__(self, other) -> "JetPolynomial":
        if isinstance(other, JetVectorField):
            return NotImplemented
        try:
            other = JetPolynomial.coerce(other)
        except ConfigurationError:
            return NotImplemented
        out: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, Fraction(0)) + c1 * c2
        return JetPolynomial(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "JetPolynomial":
        if not isinstance(n, int) or n < 0:
            raise ConfigurationError("polynomial powers must be non-negative integers", n=n)
        result = JetPolynomial.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def scale(self, c) -> "JetPolynomial":
        c = Fraction(c)
        return JetPolynomial({m: c * v for m, v in self._terms.items()})

    def div_const(self, c) -> "JetPolynomial":
        c = Fraction(c)
        if c == 0:
            raise ZeroDivisionError("division of polynomial by zero")
        return self.scale(1 / c)

    def diff(self, coord: CoordLike) -> "JetPolynomial":
        coord = as_coord(coord)
        out: dict = {}
        for m, c in self._terms.items():
            d = dict(m)
            e = d.get(coord, 0)
            if not e:
                continue
            if e == 1:
                del d[coord]
            else:
                d[coord] = e - 1
            key = tuple(sorted(d.items()))
            out[key] = out.get(key, Fraction(0)) + c * e
        return JetPolynomial(out)

    def substitute(self, mapping: Mapping[JetCoord, "JetPolynomial"]) -> "JetPolynomial":
        result = JetPolynomial()
        for m, c in self._terms.items():
            term = JetPolynomial.const(c)
            for coord, e in m:
                if coord in mapping:
                    term = term * (JetPolynomial.coerce(mapping[coord]) ** e)
                else:
                    term = term * JetPolynomial({((coord, e),): Fraction(1)})
            result = result + term
        return result

    def evaluate(self, values: Mapping):
        """Numeric evaluation; ``values`` maps coordinates (or names) to numbers or arrays."""
        vals = {as_coord(k): v for k, v in values.items()}
        missing = self.coords() - set(vals)
        if missing:
            raise DomainError(
                "missing coordinate values", missing=sorted(c.name for c in missing)
            )
        total = 0.0
        for m, c in self._terms.items():
            term = float(c)
            for coord, e in m:
                term = term * vals[coord] ** e
            total = total + term
        return total

    def evaluate_exact(self, values: Mapping) -> Fraction:
        vals = {as_coord(k): Fraction(v) for k, v in values.items()}
        total = Fraction(0)
        for m, c in self._terms.items():
            term = c
            for coord, e in m:
                term *= vals[coord] ** e
            total += term
        return total

    # comparison / display ---------------------------------------------
    def __eq__(self, other) -> bool:
        try:
            other = JetPolynomial.coerce(other)
        except ConfigurationError:
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def sorted_terms(self) -> list:
        def key(item):
            m, _ = item
            return (-_mono_degree(m), [(c.key, -e) for c, e in m])

        return sorted(self._terms.items(), key=key)

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for m, c in self.sorted_terms():
            factors = [c.name if e == 1 else f"{c.name}^{e}" for c, e in m]
            mag = abs(c)
            if not factors:
                body = str(mag)
            elif mag == 1:
                body = "*".join(factors)
            else:
                body = f"{mag}*" + "*".join(factors)
            sign = "-" if c < 0 else "+"
            parts.append((sign, body))
        head_sign, head = parts[0]
        text = ("-" if head_sign == "-" else "") + head
        for sign, body in parts[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self) -> str:
        return f"JetPolynomial({str(self)!r})"


def _poly_div(a: JetPolynomial, b: JetPolynomial) -> JetPolynomial:
    if not b.is_constant() or b.is_zero():
        raise ConfigurationError("polynomial syntax only allows division by nonzero constants")
    return a.div_const(b.constant_value())


@functools.lru_cache(maxsize=1)
def _poly_parser() -> Parser:
    return Parser(
        atom=JetPolynomial.var,
        const=JetPolynomial.const,
        divide=_poly_div,
    )


def poly(text_or_value) -> JetPolynomial:
    """Shorthand: ``poly("2*u0*u1")``."""
    return JetPolynomial.coerce(text_or_value)


ZERO = JetPolynomial()
ONE = JetPolynomial.const(1)


class JetVectorField:
    """Polynomial vector field sum_i f_i d/dc_i over declared coordinates."""

    __slots__ = ("coords", "_comps")

    def __init__(self, coords: Sequence[CoordLike], components: Mapping[CoordLike, object]):
        self.coords = tuple(sorted(as_coord(c) for c in coords))
        if len(set(self.coords)) != len(self.coords):
            raise ConfigurationError("duplicate coordinates in vector field")
        comps = {}
        declared = set(self.coords)
        for c, p in components.items():
            c = as_coord(c)
            if c not in declared:
                raise DomainError("component for undeclared coordinate", coord=c.name)
            p = JetPolynomial.coerce(p)
            extra = p.coords() - declared
            if extra:
                raise DomainError(
                    "component uses undeclared coordinates",
                    coord=c.name,
                    undeclared=sorted(e.name for e in extra),
                )
            if not p.is_zero():
                comps[c] = p
        self._comps = comps

    @classmethod
    def from_components(cls, coords: Sequence[CoordLike], components: Sequence) -> "JetVectorField":
        """Components listed in the given coordinate order, e.g. ``(1, "y1", 1)``."""
        coords = [as_coord(c) for c in coords]
        if len(coords) != len(components):
            raise ConfigurationError("component count does not match coordinates")
        return cls(coords, dict(zip(coords, components)))

    def component(self, coord: CoordLike) -> JetPolynomial:
        coord = as_coord(coord)
        if coord not in self.coords:
            raise DomainError("coordinate not declared", coord=coord.name)
        return self._comps.get(coord, ZERO)

    def components(self) -> tuple:
        return tuple(self.component(c) for c in self.coords)

    def is_zero(self) -> bool:
        return not self._comps

    def apply(self, F) -> JetPolynomial:
        """Sum_i f_i * dF/dc_i."""
        F = JetPolynomial.coerce(F)
        extra = F.coords() - set(self.coords)
        if extra:
            raise DomainError(
                "polynomial uses coordinates outside the field's domain",
                undeclared=sorted(c.name for c in extra),
            )
        out = ZERO
        for c, fc in self._comps.items():
            d = F.diff(c)
            if not d.is_zero():
                out = out + fc * d
        return out

    def __call__(self, F) -> JetPolynomial:
        return self.apply(F)

    def _check_domain(self, other: "JetVectorField") -> None:
        if set(self.coords) != set(other.coords):
            raise DomainError(
                "vector fields live on different coordinate domains",
                left=[c.name for c in self.coords],
                right=[c.name for c in other.coords],
            )

    def __add__(self, other: "JetVectorField") -> "JetVectorField":
        self._check_domain(other)
        return JetVectorField(
            self.coords, {c: self.component(c) + other.component(c) for c in self.coords}
        )

    def __sub__(self, other: "JetVectorField") -> "JetVectorField":
        self._check_domain(other)
        return JetVectorField(
            self.coords, {c: self.component(c) - other.component(c) for c in self.coords}
        )

    def __mul__(self, factor) -> "JetVectorField":
        """Multiply every component by a polynomial or constant."""
        F = JetPolynomial.coerce(factor)
        return JetVectorField(self.coords, {c: F * p for c, p in self._comps.items()})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, JetVectorField):
            return NotImplemented
        return set(self.coords) == set(other.coords) and self._comps == other._comps

    def __hash__(self) -> int:
        return hash((self.coords, frozenset(self._comps.items())))

    def __str__(self) -> str:
        return "(" + ", ".join(str(p) for p in self.components()) + ")"

    def __repr__(self) -> str:
        names = ", ".join(c.name for c in self.coords)
        return f"JetVectorField[{names}]{self}"

    def to_dict(self) -> dict:
        return {c.name: str(self.component(c)) for c in self.coords}

    @classmethod
    def from_dict(cls, data: Mapping[str, str]) -> "JetVectorField":
        return cls(list(data), {k: JetPolynomial.parse(str(v)) for k, v in data.items()})

    def numeric_rhs(self):
        """Callable ``rhs(t, state)`` with state ordered like ``self.coords``."""
        import numpy as np

        comps = self.components()
        coords = self.coords

        def rhs(_t, state):
            vals = dict(zip(coords, state))
            return np.array([p.evaluate(vals) if not p.is_zero() else 0.0 for p in comps])

        return rhs


def apply_field(L: JetVectorField, F) -> JetPolynomial:
    return L.apply(F)


def lie_bracket(f: JetVectorField, g: JetVectorField) -> JetVectorField:
    """Component i of [f, g] is f(g_i) - g(f_i)."""
    f._check_domain(g)
    return JetVectorField(
        f.coords, {c: f.apply(g.component(c)) - g.apply(f.component(c)) for c in f.coords}
    )


def total_derivative(P) -> JetPolynomial:
    """D_x: x -> 1, y_k -> y_{k+1}, u_k -> u_{k+1}."""
    P = JetPolynomial.coerce(P)
    out = ZERO
    for c in sorted(P.coords()):
        d = P.diff(c)
        if c.kind == "x":
            out = out + d
        elif c.kind in ("y", "u"):
            out = out + d * JetPolynomial.var(c.shifted())
        else:
            raise DomainError("total x-derivative is undefined for t", coord=c.name)
    return out


def prolong(K, depth: int) -> list[JetPolynomial]:
    """``[K, D_x K, ..., D_x^depth K]``."""
    if depth < 1:
        raise ConfigurationError("prolongation depth must be >= 1", depth=depth)
    K = JetPolynomial.coerce(K)
    out = [K]
    for _ in range(depth):
        out.append(total_derivative(out[-1]))
    return out


def jet_coords(kind: str, upto: int) -> list[JetCoord]:
    return [JetCoord(kind, k) for k in range(upto + 1)]


def coords_of(polys: Iterable[JetPolynomial]) -> frozenset:
    out: set = set()
    for p in polys:
        out |= p.coords()
    return frozenset(out)
