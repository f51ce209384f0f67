"""Resonant triads and quartets, and the Jacobi elliptic functions that solve them.

The triad is  a_i' = c_i a_j a_k  ((i, j, k) cyclic).  In planetary form the
couplings are c_1 = (n_2 - n_3)/n_1 and cyclically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DegeneracyError, DomainError
from .exprjet import JetCoord, JetPolynomial, JetVectorField
from .numerics import IntegratorConfig, integrate
from .symmetry import _to_upoly, polynomial_symmetries_1d

# --------------------------------------------------------------------------
# Jacobi elliptic functions
# --------------------------------------------------------------------------


def _check_m(m: float) -> None:
    if not 0.0 <= m < 1.0:
        raise DomainError("elliptic parameter must satisfy 0 <= m < 1", m=m)


def agm(a: float, b: float) -> float:
    for _ in range(64):
        if abs(a - b) <= 4e-16 * a:
            break
        a, b = (a + b) / 2, math.sqrt(a * b)
    return (a + b) / 2


def ellipk(m: float) -> float:
    """Complete elliptic integral K(m) = pi / (2 AGM(1, sqrt(1 - m)))."""
    _check_m(m)
    return math.pi / (2 * agm(1.0, math.sqrt(1.0 - m)))


def jacobi(u, m: float):
    """(sn, cn, dn)(u | m) by the descending Landen / AGM scheme."""
    _check_m(m)
    u = np.asarray(u, dtype=float)
    a, b, c = 1.0, math.sqrt(1.0 - m), math.sqrt(m)
    ratios = []  # c_n / a_n
    while abs(c) > 1e-16 * a and len(ratios) < 40:
        a, b, c = (a + b) / 2, math.sqrt(a * b), (a - b) / 2
        ratios.append(c / a)
    phi = (2.0 ** len(ratios)) * a * u
    for r in reversed(ratios):
        phi = (phi + np.arcsin(r * np.sin(phi))) / 2
    sn, cn = np.sin(phi), np.cos(phi)
    # dn > 0 for m < 1; cn / cos(phi_1 - phi_0) degenerates to 0/0 where cn = 0
    dn = np.sqrt(1.0 - m * sn * sn)
    return sn, cn, dn


def carlson_rf(x: float, y: float, z: float) -> float:
    """Carlson's symmetric integral R_F by duplication."""
    if min(x, y, z) < 0 or (x == 0 and y == 0) or (y == 0 and z == 0) or (x == 0 and z == 0):
        raise DomainError("R_F needs non-negative arguments, at most one zero", args=(x, y, z))
    for _ in range(100):
        lam = math.sqrt(x * y) + math.sqrt(y * z) + math.sqrt(z * x)
        x, y, z = (x + lam) / 4, (y + lam) / 4, (z + lam) / 4
        mu = (x + y + z) / 3
        dx, dy, dz = 1 - x / mu, 1 - y / mu, 1 - z / mu
        if max(abs(dx), abs(dy), abs(dz)) < 1e-4:
            e2 = dx * dy - dz * dz
            e3 = dx * dy * dz
            return (1 - e2 / 10 + e3 / 14 + e2 * e2 / 24 - 3 * e2 * e3 / 44) / math.sqrt(mu)
    return 1 / math.sqrt(mu)


def ellipf(phi: float, m: float) -> float:
    """Incomplete integral F(phi | m) for any real amplitude phi."""
    _check_m(m)
    j = round(phi / math.pi)
    r = phi - j * math.pi
    s, c = math.sin(r), math.cos(r)
    base = s * carlson_rf(c * c, 1 - m * s * s, 1.0) if s else 0.0
    return base + 2 * j * ellipk(m)


# --------------------------------------------------------------------------
# triads
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TriadSystem:
    couplings: tuple[float, float, float]
    n: tuple[float, float, float] | None = None

    @classmethod
    def planetary(cls, n: Sequence[float]) -> "TriadSystem":
        n = tuple(float(v) for v in n)
        if len(n) != 3 or min(n) <= 0:
            raise ConfigurationError("planetary triad needs three positive wavenumbers", n=n)
        n1, n2, n3 = n
        c = ((n2 - n3) / n1, (n3 - n1) / n2, (n1 - n2) / n3)
        return cls(c, n)

    @classmethod
    def generic(cls, couplings: Sequence[float]) -> "TriadSystem":
        c = tuple(float(v) for v in couplings)
        if len(c) != 3 or any(v == 0 for v in c):
            raise ConfigurationError("generic triad needs three nonzero couplings", couplings=c)
        return cls(c)

    @property
    def is_planetary(self) -> bool:
        return self.n is not None


def triad_rhs(sys: TriadSystem, a) -> np.ndarray:
    a = np.asarray(a)
    c1, c2, c3 = sys.couplings
    return np.array([c1 * a[1] * a[2], c2 * a[2] * a[0], c3 * a[0] * a[1]])


def triad_invariants(sys: TriadSystem, a) -> tuple:
    """(energy, enstrophy) for planetary triads, else the two coupling-weighted differences."""
    a = np.asarray(a)
    if sys.is_planetary:
        n = np.asarray(sys.n)
        return float(np.sum(n * a**2)), float(np.sum(n**2 * a**2))
    c = sys.couplings
    return (
        float(a[0] ** 2 / c[0] - a[1] ** 2 / c[1]),
        float(a[1] ** 2 / c[1] - a[2] ** 2 / c[2]),
    )


def _amplitudes(a0, n: int) -> np.ndarray:
    a0 = np.asarray(a0, float)
    if a0.shape != (n,):
        raise ConfigurationError(f"expected {n} initial amplitudes", got=list(np.atleast_1d(a0)))
    return a0


def triad_run(sys: TriadSystem, a0, T: float, dt: float = 1e-3):
    return integrate(lambda t, y: triad_rhs(sys, y), _amplitudes(a0, 3), 0.0, T, IntegratorConfig(dt=dt))


def _exact(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


def triad_field(sys: TriadSystem) -> JetVectorField:
    """The triad as an exact polynomial vector field on (u0, u1, u2)."""
    u = [JetPolynomial.var(JetCoord("u", i)) for i in range(3)]
    c = [_exact(v) for v in (sys.n and _planetary_exact(sys.n) or sys.couplings)]
    comps = [u[1] * u[2] * c[0], u[2] * u[0] * c[1], u[0] * u[1] * c[2]]
    return JetVectorField.from_components([JetCoord("u", i) for i in range(3)], comps)


def _planetary_exact(n) -> list[Fraction]:
    n1, n2, n3 = (_exact(v) for v in n)
    return [(n2 - n3) / n1, (n3 - n1) / n2, (n1 - n2) / n3]


def triad_symbolic_invariants(sys: TriadSystem) -> list[JetPolynomial]:
    """Polynomial forms of the two quadratic invariants (exact coefficients)."""
    u = [JetPolynomial.var(JetCoord("u", i)) for i in range(3)]
    if sys.is_planetary:
        n = [_exact(v) for v in sys.n]
        return [
            sum((u[i] ** 2 * n[i] for i in range(3)), JetPolynomial.const(0)),
            sum((u[i] ** 2 * n[i] ** 2 for i in range(3)), JetPolynomial.const(0)),
        ]
    c = [_exact(v) for v in sys.couplings]
    return [u[0] ** 2 * (1 / c[0]) - u[1] ** 2 * (1 / c[1]), u[1] ** 2 * (1 / c[1]) - u[2] ** 2 * (1 / c[2])]


# -- closed form --------------------------------------------------------------

SLOTS = ("cn", "dn", "sn")


@dataclass(frozen=True)
class EllipticParams:
    """A_i(t) = b_i * f_i(t / t0 - lam | m) with f_i in ``slots``."""

    b: tuple[float, float, float]
    t0: float
    lam: float
    m: float
    slots: tuple[str, str, str]

    @property
    def period(self) -> float:
        """Common period of the three amplitudes (4K for cn and sn)."""
        return 4 * self.t0 * ellipk(self.m)

    def evaluate(self, t) -> np.ndarray:
        sn, cn, dn = jacobi(np.asarray(t, float) / self.t0 - self.lam, self.m)
        fn = {"sn": sn, "cn": cn, "dn": dn}
        return np.stack([bi * fn[s] for bi, s in zip(self.b, self.slots)])

    def to_json(self) -> dict:
        return {
            "b": list(self.b),
            "t0": self.t0,
            "lambda": self.lam,
            "m": self.m,
            "slots": list(self.slots),
            "period": self.period,
        }


def closed_form(sys: TriadSystem, a0) -> EllipticParams:
    """Elliptic solution through a0 (time variable T taken equal to t).

    The coupling whose sign differs from the other two goes to the sn slot;
    of the remaining pair, dn goes to the one keeping m < 1.
    """
    a0 = np.asarray(a0, dtype=float)
    c = np.asarray(sys.couplings, dtype=float)
    if np.any(c == 0):
        raise DegeneracyError("a vanishing coupling decouples the triad", couplings=c.tolist())
    signs = np.sign(c)
    if abs(signs.sum()) == 3:
        raise DegeneracyError(
            "all couplings share a sign: no bounded elliptic solution of cn/dn/sn type",
            couplings=c.tolist(),
        )
    i_sn = int(np.flatnonzero(signs != np.sign(signs.sum()))[0])
    i_cn, i_dn = [i for i in range(3) if i != i_sn]

    def levels(i_cn, i_dn):
        J_cn = a0[i_cn] ** 2 - c[i_cn] / c[i_sn] * a0[i_sn] ** 2
        J_dn = a0[i_dn] ** 2 - c[i_dn] / c[i_sn] * a0[i_sn] ** 2
        return J_cn, J_dn

    J_cn, J_dn = levels(i_cn, i_dn)
    scale = max(1.0, float(np.max(a0**2)))
    if min(J_cn, J_dn) < 1e-12 * scale:
        raise DegeneracyError(
            "initial data sits on an equilibrium: an invariant level J vanishes",
            J=(float(J_cn), float(J_dn)),
        )
    m = c[i_dn] * J_cn / (c[i_cn] * J_dn)
    if m > 1:
        i_cn, i_dn = i_dn, i_cn
        J_cn, J_dn = levels(i_cn, i_dn)
        m = 1 / m
    if abs(m - 1) < 1e-10:
        raise DegeneracyError("separatrix: |m - 1| < 1e-10", m=float(m))
    t0 = math.sqrt(-1.0 / (c[i_cn] * c[i_sn] * J_dn))
    b_cn = math.sqrt(J_cn)
    b_dn = math.copysign(math.sqrt(J_dn), a0[i_dn] if a0[i_dn] != 0 else 1.0)
    b_sn = t0 * c[i_sn] * b_cn * b_dn
    amp = math.atan2(a0[i_sn] / b_sn, a0[i_cn] / b_cn)
    lam = -ellipf(amp, m)
    b = [0.0, 0.0, 0.0]
    slots = ["", "", ""]
    for i, s, bv in ((i_cn, "cn", b_cn), (i_dn, "dn", b_dn), (i_sn, "sn", b_sn)):
        b[i], slots[i] = bv, s
    return EllipticParams(tuple(b), t0, lam, float(m), tuple(slots))


# --------------------------------------------------------------------------
# quartets
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class QuartetSystem:
    couplings: tuple[float, float, float, float]

    def __post_init__(self):
        if len(self.couplings) != 4 or any(v == 0 for v in self.couplings):
            raise ConfigurationError("quartet needs four nonzero couplings", couplings=self.couplings)


def quartet_rhs(sys: QuartetSystem, A) -> np.ndarray:
    A = np.asarray(A)
    c = sys.couplings
    return np.array([
        c[0] * A[1] * A[2] * A[3],
        c[1] * A[0] * A[2] * A[3],
        c[2] * A[0] * A[1] * A[3],
        c[3] * A[0] * A[1] * A[2],
    ])


def quartet_invariants(sys: QuartetSystem, A) -> tuple[float, float, float]:
    A = np.asarray(A)
    q = A**2 / np.asarray(sys.couplings)
    return float(q[0] - q[1]), float(q[1] - q[2]), float(q[2] - q[3])


def quartet_run(sys: QuartetSystem, A0, T: float, dt: float = 1e-3):
    return integrate(lambda t, y: quartet_rhs(sys, y), _amplitudes(A0, 4), 0.0, T, IntegratorConfig(dt=dt))


def quartet_rate_identity(sys: QuartetSystem) -> bool:
    """Exact check that d/dt(A_i^2 / c_i) = 2 A1 A2 A3 A4 for every i."""
    A = [JetPolynomial.var(JetCoord("u", i)) for i in range(4)]
    c = [_exact(v) for v in sys.couplings]
    rhs = [A[1] * A[2] * A[3] * c[0], A[0] * A[2] * A[3] * c[1], A[0] * A[1] * A[3] * c[2], A[0] * A[1] * A[2] * c[3]]
    target = A[0] * A[1] * A[2] * A[3] * 2
    return all(A[i] * rhs[i] * (2 / c[i]) == target for i in range(4))


# --------------------------------------------------------------------------
# one-dimensional reduction: symmetries consistent with the flow are trivial
# --------------------------------------------------------------------------


def reduced_symmetries_trivial(f, max_degree: int = 8) -> bool:
    """Every polynomial g (deg <= max_degree) commuting with y' = f(y) is c * f."""
    fp = _to_upoly(JetPolynomial.coerce(f), JetCoord("y", 0))
    for g in polynomial_symmetries_1d(f, max_degree):
        q, r = g.divmod(fp)
        if not r.is_zero() or q.degree > 0:
            return False
    return True
