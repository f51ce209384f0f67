from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from integrability_lab.errors import ConfigurationError, DomainError
from integrability_lab.exprjet import (
    JetCoord,
    JetPolynomial,
    JetVectorField,
    lie_bracket,
    prolong,
    total_derivative,
)

NAMES = ["x", "y", "y1", "u0", "u1", "u2"]
SYMS = {n: sp.Symbol(n) for n in NAMES}

fractions = st.fractions(min_value=-5, max_value=5, max_denominator=4)
monomials = st.dictionaries(st.sampled_from(NAMES[:4]), st.integers(1, 3), max_size=3)
polys = st.lists(st.tuples(fractions, monomials), max_size=4).map(
    lambda terms: sum(
        (
            JetPolynomial.const(c) * _mono(m)
            for c, m in terms
        ),
        JetPolynomial(),
    )
)


def _mono(m):
    p = JetPolynomial.const(1)
    for name, e in m.items():
        p = p * JetPolynomial.var(name) ** e
    return p


def to_sympy(p: JetPolynomial):
    return sp.sympify(str(p).replace("^", "**"), locals=SYMS) if not p.is_zero() else sp.Integer(0)


class TestCoordinates:
    def test_ordering(self):
        names = ["u1", "x", "y2", "t", "u0", "y"]
        ordered = sorted(JetCoord.parse(n) for n in names)
        assert [c.name for c in ordered] == ["x", "t", "y", "y2", "u0", "u1"]

    def test_shift(self):
        assert JetCoord.parse("u3").shifted().name == "u4"

    @pytest.mark.parametrize("bad", ["q", "u-1", "z"])
    def test_unknown_names(self, bad):
        with pytest.raises(ConfigurationError):
            JetCoord.parse(bad)


class TestPolynomials:
    def test_parse_and_print(self):
        p = JetPolynomial.parse("2*u0*u1 + 1/3*u2 - y^2*x")
        assert str(p) == "-x*y^2 + 2*u0*u1 + 1/3*u2"
        assert JetPolynomial.parse(str(p)) == p

    def test_negative_exponent_rejected(self):
        with pytest.raises(ConfigurationError):
            JetPolynomial.parse("u0^-1")

    def test_missing_value_in_evaluation(self):
        with pytest.raises(DomainError):
            JetPolynomial.parse("u0*u1").evaluate({"u0": 1.0})

    @given(polys, polys, polys)
    def test_ring_axioms(self, a, b, c):
        assert a * (b + c) == a * b + a * c
        assert (a * b) * c == a * (b * c)
        assert a - a == JetPolynomial()

    @given(polys, polys)
    def test_product_matches_sympy(self, a, b):
        assert sp.expand(to_sympy(a * b) - to_sympy(a) * to_sympy(b)) == 0

    @given(polys, st.sampled_from(NAMES[:4]))
    def test_partial_derivative_matches_sympy(self, a, name):
        assert sp.expand(to_sympy(a.diff(name)) - sp.diff(to_sympy(a), SYMS[name])) == 0

    @given(polys, st.fractions(-3, 3, max_denominator=3), st.fractions(-3, 3, max_denominator=3))
    def test_exact_evaluation_matches_sympy(self, a, v1, v2):
        vals = {"x": v1, "y": v2, "y1": v1 + v2, "u0": v1 * v2}
        want = to_sympy(a).subs({SYMS[k]: sp.Rational(v.numerator, v.denominator) for k, v in vals.items()})
        assert a.evaluate_exact(vals) == Fraction(int(sp.numer(want)), int(sp.denom(want)))

    @given(polys, polys)
    def test_total_derivative_is_a_derivation(self, a, b):
        D = total_derivative
        assert D(a * b) == D(a) * b + a * D(b)

    def test_prolongation_of_burgers_flux(self):
        out = prolong("2*u0*u1", 2)
        assert out[1] == JetPolynomial.parse("2*u1^2 + 2*u0*u2")
        assert out[2] == JetPolynomial.parse("6*u1*u2 + 2*u0*u3")


fields = st.lists(polys, min_size=4, max_size=4).map(
    lambda comps: JetVectorField.from_components(NAMES[:4], comps)
)


class TestVectorFields:
    def test_undeclared_coordinate_rejected(self):
        with pytest.raises(DomainError):
            JetVectorField.from_components(["x", "y"], [1, "u0"])

    def test_bracket_of_translations_and_scaling(self):
        d_x = JetVectorField.from_components(["x", "y"], [1, 0])
        scale = JetVectorField.from_components(["x", "y"], ["x", "y"])
        assert lie_bracket(d_x, scale) == d_x

    @given(fields, fields)
    def test_antisymmetry(self, f, g):
        assert lie_bracket(f, g) == lie_bracket(g, f) * -1

    @given(fields, fields, fields)
    def test_jacobi_identity(self, f, g, h):
        total = lie_bracket(f, lie_bracket(g, h)) + lie_bracket(g, lie_bracket(h, f)) + lie_bracket(h, lie_bracket(f, g))
        assert total.is_zero()

    @given(fields, fields, polys)
    def test_bracket_acts_as_commutator(self, f, g, F):
        assert lie_bracket(f, g).apply(F) == f.apply(g.apply(F)) - g.apply(f.apply(F))

    def test_numeric_rhs_follows_coordinate_order(self):
        field = JetVectorField.from_components(["x", "y", "y1"], [1, "y1", "x*y"])
        assert list(field.numeric_rhs()(0.0, [2.0, 3.0, 5.0])) == [1.0, 5.0, 6.0]
