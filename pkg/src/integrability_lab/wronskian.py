"""Monic linear ODEs with a prescribed kernel.

Given basis functions phi_1..phi_m (with analytic derivatives), the operator

    L(psi) = W(phi_1, ..., phi_m, psi) / W(phi_1, ..., phi_m)

is monic of order m and annihilates every phi_i. Coefficients are sampled on
a window by expanding the bordered determinant along its last column.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .diffop import UPoly
from .errors import ConfigurationError, DomainError, EvaluationError, NearDegenerateKernelError
from .numerics import fd_callable

MAX_ORDER = 6


@dataclass(frozen=True)
class BasisFunction:
    """A function bundled with its derivatives: ``evaluator(x, k)`` is f^(k)(x)."""

    label: str
    evaluator: Callable[[np.ndarray, int], np.ndarray] = field(repr=False)

    def __call__(self, x, k: int = 0):
        return self.evaluator(np.asarray(x, dtype=float), k)

    def __add__(self, other: "BasisFunction") -> "BasisFunction":
        return combine([(1.0, self), (1.0, other)])

    def scaled(self, c: float) -> "BasisFunction":
        return combine([(c, self)])

    @classmethod
    def from_callable(cls, fn: Callable, label: str, h: float = 1e-2) -> "BasisFunction":
        """Finite-difference fallback (accuracy 8) for functions without closed-form derivatives."""

        def ev(x, k):
            if k == 0:
                return np.asarray(fn(x), dtype=float)
            return fd_callable(fn, x, k, 8, h)

        return cls(label, ev)


def combine(terms: Sequence[tuple[float, BasisFunction]]) -> BasisFunction:
    label = " + ".join(f"{c:g}*{b.label}" for c, b in terms)

    def ev(x, k):
        return sum(c * b(x, k) for c, b in terms)

    return BasisFunction(label, ev)


# -- catalog ---------------------------------------------------------------


def sin_basis() -> BasisFunction:
    return BasisFunction("sin", lambda x, k: np.sin(x + k * math.pi / 2))


def cos_basis() -> BasisFunction:
    return BasisFunction("cos", lambda x, k: np.cos(x + k * math.pi / 2))


def power_basis(p: float) -> BasisFunction:
    def ev(x, k):
        coef = 1.0
        for j in range(k):
            coef *= p - j
        if coef == 0.0:
            return np.zeros_like(x)
        return coef * x ** (p - k)

    return BasisFunction(f"x^{p:g}", ev)


def sqrt_basis() -> BasisFunction:
    b = power_basis(0.5)
    return BasisFunction("sqrt", b.evaluator)


def exp_basis(c: float) -> BasisFunction:
    return BasisFunction(f"exp({c:g}*x)", lambda x, k: c**k * np.exp(c * x))


def polynomial_basis(coeffs: Sequence) -> BasisFunction:
    p = UPoly(coeffs)

    def ev(x, k):
        return np.asarray(p.derivative(k)(x), dtype=float) * np.ones_like(x)

    return BasisFunction(str(p), ev)


def catalog(name: str) -> BasisFunction:
    """Resolve ``sin``, ``cos``, ``sqrt``, ``exp(c)``, ``x^p`` or ``poly(a0,a1,...)``."""
    try:
        return _catalog(name.strip().replace(" ", ""))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigurationError(f"malformed basis function {name!r}") from exc


def _catalog(name: str) -> BasisFunction:
    if name == "sin":
        return sin_basis()
    if name == "cos":
        return cos_basis()
    if name == "sqrt":
        return sqrt_basis()
    if name.startswith("exp(") and name.endswith(")"):
        inner = name[4:-1].replace("*x", "")
        return exp_basis(float(inner))
    if name == "1":
        return polynomial_basis([1])
    if name == "x":
        return polynomial_basis([0, 1])
    if name.startswith("x^"):
        p = float(name[2:])
        if p.is_integer() and p >= 0:
            return polynomial_basis([0] * int(p) + [1])
        return power_basis(p)
    if name.startswith("poly(") and name.endswith(")"):
        from fractions import Fraction

        return polynomial_basis([Fraction(v) for v in name[5:-1].split(",")])
    raise ConfigurationError(f"unknown basis function {name!r}")


# -- construction -----------------------------------------------------------


def _derivative_matrix(basis: Sequence[BasisFunction], x: float, rows: int) -> np.ndarray:
    M = np.empty((rows, len(basis)))
    for i, b in enumerate(basis):
        for k in range(rows):
            M[k, i] = float(b(x, k))
    if not np.all(np.isfinite(M)):
        raise EvaluationError("basis derivative is not finite", x=x)
    return M


def wronskian_det(basis: Sequence[BasisFunction], x: float) -> float:
    """Determinant of the m x m matrix [phi_i^(k)(x)]."""
    m = len(basis)
    if m > MAX_ORDER:
        raise ConfigurationError("kernels larger than 6 are not supported", m=m)
    return float(np.linalg.det(_derivative_matrix(basis, x, m)))


@dataclass
class KernelSpec:
    basis: Sequence[BasisFunction]
    window: tuple[float, float]
    samples: int = 64

    def __post_init__(self):
        self.basis = list(self.basis)
        if not self.basis:
            raise ConfigurationError("kernel needs at least one basis function")
        if len(self.basis) > MAX_ORDER:
            raise ConfigurationError("kernels larger than 6 are not supported", m=len(self.basis))
        if self.samples < 16:
            raise ConfigurationError("need at least 16 samples", samples=self.samples)
        lo, hi = self.window
        if not hi > lo:
            raise ConfigurationError("window must satisfy lo < hi", window=self.window)

    @property
    def order(self) -> int:
        return len(self.basis)

    def sample_points(self) -> np.ndarray:
        return np.linspace(self.window[0], self.window[1], self.samples)


@dataclass
class KernelOperator:
    """Sampled monic operator: ``coeffs[j, k]`` is c_k(x_j); ``coeffs[:, m] == 1``."""

    x: np.ndarray
    coeffs: np.ndarray
    window: tuple[float, float]
    labels: list[str]
    basis_residual: float

    @property
    def order(self) -> int:
        return self.coeffs.shape[1] - 1

    def apply(self, psi: BasisFunction, x: np.ndarray | None = None, mask=None) -> np.ndarray:
        xs = self.x if mask is None else self.x[mask]
        cs = self.coeffs if mask is None else self.coeffs[mask]
        return sum(cs[:, k] * psi(xs, k) for k in range(self.order + 1))

    def rows(self) -> list[list[float]]:
        return [[float(xv), *map(float, row)] for xv, row in zip(self.x, self.coeffs)]


def operator_from_kernel(spec: KernelSpec) -> KernelOperator:
    m = spec.order
    xs = spec.sample_points()
    coeffs = np.empty((len(xs), m + 1))
    worst = 0.0
    for j, xv in enumerate(xs):
        B = _derivative_matrix(spec.basis, xv, m + 1)
        scale = max(1.0, float(np.max(np.abs(B))))
        W = float(np.linalg.det(B[:m, :m]))
        if abs(W) < 1e-12 * scale**m:
            raise NearDegenerateKernelError(
                "Wronskian vanishes (near-degenerate kernel)", x=float(xv), wronskian=W
            )
        for k in range(m + 1):
            minor = np.delete(B, k, axis=0)
            coeffs[j, k] = (-1) ** (k + m) * np.linalg.det(minor) / W
        # residual of each basis member at this point
        res = np.abs(coeffs[j] @ B)
        worst = max(worst, float(np.max(res)) / scale)
    coeffs[:, m] = 1.0
    return KernelOperator(
        xs, coeffs, tuple(spec.window), [b.label for b in spec.basis], worst
    )


def membership_test(
    op: KernelOperator, psi: BasisFunction, window: tuple[float, float] | None = None
) -> float:
    """Max over samples of |sum_k c_k psi^(k)|."""
    lo, hi = window or op.window
    if lo < op.window[0] - 1e-12 or hi > op.window[1] + 1e-12 or hi < lo:
        raise DomainError(
            "membership window lies outside the construction window",
            window=(lo, hi),
            construction=op.window,
        )
    mask = (op.x >= lo - 1e-12) & (op.x <= hi + 1e-12)
    if not mask.any():
        raise DomainError("no samples inside the requested window", window=(lo, hi))
    return float(np.max(np.abs(op.apply(psi, mask=mask))))


# -- the classical {sin x, sqrt x} example -----------------------------------


def textbook_sin_sqrt_coefficients(x) -> np.ndarray:
    """Coefficients (c0, c1, c2) of the frequently quoted equation

        psi''(1 - tan(x)/2) + tan(x) psi' - psi/(2x) - 3 psi/(4x^2) = 0

    divided through by (1 - tan(x)/2), i.e. in monic form.
    """
    x = np.asarray(x, dtype=float)
    lead = 1 - 0.5 * np.tan(x)
    c1 = np.tan(x) / lead
    c0 = (-1 / (2 * x) - 3 / (4 * x**2)) / lead
    return np.stack([c0, c1, np.ones_like(x)], axis=-1)


@dataclass
class FormComparison:
    max_coefficient_gap: float
    constructed_residuals: dict
    reference_residuals: dict

    @property
    def agrees(self) -> bool:
        return self.max_coefficient_gap < 1e-8


def compare_with_reference(
    op: KernelOperator, basis: Sequence[BasisFunction], reference: Callable = textbook_sin_sqrt_coefficients
) -> FormComparison:
    """Compare a constructed operator with a reference monic coefficient set."""
    ref = reference(op.x)
    gap = float(np.max(np.abs(ref - op.coeffs)))
    built, quoted = {}, {}
    for b in basis:
        built[b.label] = float(np.max(np.abs(op.apply(b))))
        quoted[b.label] = float(
            np.max(np.abs(sum(ref[:, k] * b(op.x, k) for k in range(ref.shape[1]))))
        )
    return FormComparison(gap, built, quoted)
