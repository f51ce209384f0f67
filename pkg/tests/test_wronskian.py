import numpy as np
import pytest
import sympy as sp

from integrability_lab.errors import ConfigurationError, DomainError, NearDegenerateKernelError
from integrability_lab.wronskian import (
    KernelSpec,
    catalog,
    compare_with_reference,
    membership_test,
    operator_from_kernel,
    wronskian_det,
)

X = sp.Symbol("x")


def sympy_monic_coefficients(exprs, xs):
    """Independent route: c_k = (-1)^(m-k) W_k / W from symbolic Wronskians."""
    m = len(exprs)
    M = sp.Matrix([[sp.diff(e, X, k) for e in exprs] for k in range(m + 1)])
    W = M[:m, :].det()
    cols = []
    for k in range(m + 1):
        minor = M.copy()
        minor.row_del(k)
        cols.append(sp.lambdify(X, sp.simplify((-1) ** (k + m) * minor.det() / W), "numpy"))
    return np.stack([np.broadcast_to(c(xs), xs.shape) for c in cols], axis=-1)


@pytest.mark.parametrize(
    "names, exprs, window",
    [
        (["x", "x^2"], [X, X**2], (0.5, 2.0)),
        (["sin", "sqrt"], [sp.sin(X), sp.sqrt(X)], (0.5, 1.4)),
        (["exp(1)", "exp(2)"], [sp.exp(X), sp.exp(2 * X)], (-1.0, 1.0)),
        (["sin", "cos", "x"], [sp.sin(X), sp.cos(X), X], (0.2, 1.0)),
    ],
)
def test_coefficients_match_symbolic_wronskians(names, exprs, window):
    op = operator_from_kernel(KernelSpec([catalog(n) for n in names], window, 32))
    want = sympy_monic_coefficients(exprs, op.x)
    np.testing.assert_allclose(op.coeffs, want, atol=1e-9, rtol=1e-9)


def test_hand_derived_two_term_kernel():
    op = operator_from_kernel(KernelSpec([catalog("x"), catalog("x^2")], (0.5, 2.0), 64))
    xs = op.x
    np.testing.assert_allclose(op.coeffs, np.stack([2 / xs**2, -2 / xs, np.ones_like(xs)], -1), atol=1e-10)


def test_affine_kernel_gives_second_derivative():
    op = operator_from_kernel(KernelSpec([catalog("1"), catalog("x")], (0.0, 1.0), 16))
    np.testing.assert_allclose(op.coeffs, np.tile([0.0, 0.0, 1.0], (16, 1)), atol=1e-14)


def test_members_are_annihilated_and_outsiders_are_not():
    basis = [catalog("sin"), catalog("sqrt")]
    op = operator_from_kernel(KernelSpec(basis, (0.5, 1.4), 64))
    assert max(membership_test(op, b) for b in basis) < 1e-8
    assert membership_test(op, catalog("cos")) > 1e-2


def test_reference_equation_disagrees():
    # the widely quoted monic form does not annihilate sin or sqrt; frozen from a run
    basis = [catalog("sin"), catalog("sqrt")]
    cmp = compare_with_reference(operator_from_kernel(KernelSpec(basis, (0.5, 1.4), 64)), basis)
    assert not cmp.agrees
    assert cmp.max_coefficient_gap > 100
    assert max(cmp.constructed_residuals.values()) < 1e-8
    assert min(cmp.reference_residuals.values()) > 1.0


def test_determinant_matches_sympy():
    val = wronskian_det([catalog("sin"), catalog("cos"), catalog("exp(1)")], 0.3)
    M = sp.wronskian([sp.sin(X), sp.cos(X), sp.exp(X)], X)
    assert val == pytest.approx(float(M.subs(X, 0.3)), rel=1e-12)


def test_dependent_kernel_is_rejected():
    with pytest.raises(NearDegenerateKernelError):
        operator_from_kernel(KernelSpec([catalog("x"), catalog("poly(0,2)")], (0.5, 1.0), 16))


def test_membership_window_outside_construction():
    op = operator_from_kernel(KernelSpec([catalog("x")], (0.5, 1.0), 16))
    with pytest.raises(DomainError):
        membership_test(op, catalog("x"), (0.0, 1.0))


@pytest.mark.parametrize("name", ["tan", "exp(", "poly()"])
def test_unknown_catalog_names(name):
    with pytest.raises(ConfigurationError):
        catalog(name)
