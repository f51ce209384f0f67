"""Exact-solution pipelines built on changes of variables.

* quadrature reduction of y'' = f(y) to x = int dy / sqrt(2 (F(y) + E));
* the implicit hodograph solution x + 2 t u = phi(u) of u_t = 2 u u_x;
* linearisation of psi_xy + a psi_x + b psi_y + psi_x psi_y = 0 by psi = log(theta);
* the Cole-Hopf pair u = eps w_x / w between Burgers and heat equations;
* the rescaling that removes the viscosity from u_t = 2 u u_x + eps u_xx;
* v = phi(u), taking u_t = phi(u) u_x to v_t = v v_x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (
    ConfigurationError,
    DomainError,
    PeriodicityError,
    PositivityError,
    ShockFormedError,
    TurningPointError,
    UnsupportedCaseError,
)
from .numerics import (
    SampledField,
    bracketed_newton,
    fd_callable,
    quadrature,
    sign_change_brackets,
    spectral_derivative,
)

# --------------------------------------------------------------------------
# y'' = f(y) by quadrature
# --------------------------------------------------------------------------


@dataclass
class QuadratureTable:
    """x(y) sampled on ``y``; invertible because x is monotone in y."""

    y: np.ndarray
    x: np.ndarray
    integrand: Callable[[float], float]
    tol: float

    def x_at(self, yv: float) -> float:
        i = int(np.clip(np.searchsorted(self.y, yv) - 1, 0, len(self.y) - 2))
        if abs(yv - self.y[i]) > abs(yv - self.y[i + 1]):
            i += 1
        return float(self.x[i] + quadrature(self.integrand, self.y[i], yv, self.tol))

    def y_at(self, xv):
        """Invert the table: the y with x(y) = xv."""
        if np.ndim(xv):
            return np.array([self.y_at(float(v)) for v in np.ravel(xv)]).reshape(np.shape(xv))
        lo_x, hi_x = min(self.x[0], self.x[-1]), max(self.x[0], self.x[-1])
        if not lo_x - 1e-12 <= xv <= hi_x + 1e-12:
            raise DomainError("x outside the tabulated range", x=xv, range=(lo_x, hi_x))
        j = int(np.argmin(np.abs(self.x - xv)))
        lo, hi = self.y[max(j - 1, 0)], self.y[min(j + 1, len(self.y) - 1)]
        def g(yy):
            return self.x_at(yy) - xv

        glo, ghi = g(lo), g(hi)
        if glo * ghi > 0:  # xv sits on a table end up to round-off
            return float(lo if abs(glo) < abs(ghi) else hi)
        return bracketed_newton(g, self.integrand, lo, hi, xtol=1e-14)


def quadrature_reduce(
    f: Callable[[float], float],
    F: Callable[[float], float],
    y0: float,
    y1: float,
    E: float = 0.0,
    samples: int = 64,
    branch: int = 1,
    anchor: tuple[float, float] | None = None,
    tol: float = 1e-10,
) -> QuadratureTable:
    """Tabulate x(y) = branch * int_{y0}^{y} dy / sqrt(2 (F + E)).

    ``branch`` picks the sign of the square root (y' > 0 or y' < 0);
    ``anchor=(y_a, x_a)`` fixes the additive constant so that x(y_a) = x_a.
    """
    if branch not in (1, -1):
        raise ConfigurationError("branch must be +1 or -1", branch=branch)
    if not y1 > y0:
        raise ConfigurationError("need y0 < y1", y0=y0, y1=y1)
    # F' = f sanity check at an interior point
    ym = 0.5 * (y0 + y1)
    dF = float(fd_callable(np.vectorize(F), ym, 1, 8, 1e-3 * max(1.0, abs(ym))))
    if abs(dF - f(ym)) > 1e-6 * max(1.0, abs(f(ym))):
        raise ConfigurationError("F is not an antiderivative of f", at=ym, dF=dF, f=f(ym))

    def level(yv):
        return 2.0 * (F(yv) + E)

    probe = np.linspace(y0, y1, 1026)[1:-1]
    vals = np.array([level(v) for v in probe])
    if np.any(vals <= 0):
        i = int(np.argmax(vals <= 0))
        lo = probe[i - 1] if i > 0 else y0
        hi = probe[i]
        if level(lo) > 0 and level(hi) <= 0:
            root = bracketed_newton(level, None, lo, hi) if level(hi) < 0 else hi
        else:
            root = hi
        raise TurningPointError(
            "2(F(y) + E) is not positive on the interval (turning point)", root=float(root)
        )

    def integrand(yv: float) -> float:
        return branch / math.sqrt(level(yv))

    ys = np.linspace(y0, y1, samples + 1)
    xs = np.zeros_like(ys)
    per_panel = tol
    for i in range(1, len(ys)):
        xs[i] = xs[i - 1] + quadrature(integrand, ys[i - 1], ys[i], per_panel)
    table = QuadratureTable(ys, xs, integrand, per_panel)
    if anchor is not None:
        ya, xa = anchor
        shift = xa - table.x_at(ya)
        table = QuadratureTable(ys, xs + shift, integrand, per_panel)
    return table


# --------------------------------------------------------------------------
# hodograph solution of u_t = 2 u u_x
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MonotoneProfile:
    """Initial-data profile x = phi(u) on [u_lo, u_hi], strictly monotone."""

    phi: Callable
    dphi: Callable
    u_lo: float
    u_hi: float
    label: str = "phi"

    def __post_init__(self):
        if not self.u_hi > self.u_lo:
            raise ConfigurationError("profile domain must have u_lo < u_hi")
        d = np.asarray(self.dphi(self.samples()), dtype=float) * np.ones(1024)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ConfigurationError("profile derivative changes sign or vanishes", label=self.label)

    def samples(self, n: int = 1024) -> np.ndarray:
        return np.linspace(self.u_lo, self.u_hi, n)

    @property
    def increasing(self) -> bool:
        return float(self.dphi(0.5 * (self.u_lo + self.u_hi))) > 0


def linear_profile(lo=-100.0, hi=100.0) -> MonotoneProfile:
    return MonotoneProfile(lambda u: u, lambda u: np.ones_like(np.asarray(u, float)), lo, hi, "linear")


def cubic_profile(lo=-5.0, hi=5.0) -> MonotoneProfile:
    return MonotoneProfile(lambda u: u**3 + u, lambda u: 3 * np.asarray(u) ** 2 + 1, lo, hi, "cubic")


def tanh_profile(lo=-0.99, hi=0.99) -> MonotoneProfile:
    return MonotoneProfile(
        np.arctanh, lambda u: 1.0 / (1.0 - np.asarray(u) ** 2), lo, hi, "artanh"
    )


PROFILES = {"linear": linear_profile, "cubic": cubic_profile, "artanh": tanh_profile}


def breaking_time(profile: MonotoneProfile) -> float:
    """First time at which phi(u) - 2 t u stops being monotone.

    Sampled on 1024 points, then refined by a bounded scalar minimisation.
    Positive for increasing profiles, negative for decreasing ones.
    """
    us = profile.samples()
    d = np.asarray(profile.dphi(us), dtype=float) * np.ones_like(us)
    sign = 1.0 if d[0] > 0 else -1.0
    i = int(np.argmin(sign * d))
    lo, hi = us[max(i - 1, 0)], us[min(i + 1, len(us) - 1)]
    best = sign * d[i]
    if hi > lo:
        res = minimize_scalar(
            lambda v: sign * float(profile.dphi(v)), bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-12},
        )
        best = min(best, float(res.fun))
    return sign * best / 2.0


@dataclass(frozen=True)
class HodographResult:
    u: float
    residual: float
    t_break: float
    post_breaking: bool


def hodograph_solve(profile: MonotoneProfile, x: float, t: float) -> HodographResult:
    """Solve phi(u) - 2 t u - x = 0 for u."""
    tb = breaking_time(profile)

    def G(v):
        return profile.phi(v) - 2 * t * v - x

    def dG(v):
        return float(profile.dphi(v)) - 2 * t

    before = (t < tb) if tb > 0 else (t > tb)
    if before:
        glo, ghi = G(profile.u_lo), G(profile.u_hi)
        if glo * ghi > 0:
            raise DomainError(
                "x is not reachable from the profile domain at this time", x=x, t=t
            )
        root = bracketed_newton(G, dG, profile.u_lo, profile.u_hi)
        return HodographResult(float(root), abs(float(G(root))), tb, False)

    roots = []
    for lo, hi in sign_change_brackets(G, profile.u_lo, profile.u_hi, 1024):
        roots.append(float(lo if lo == hi else bracketed_newton(G, dG, lo, hi)))
    roots = sorted(set(roots))
    if len(roots) > 1:
        raise ShockFormedError(
            "multiple characteristics reach this point (shock has formed)",
            roots, x=x, t=t, t_break=tb,
        )
    if not roots:
        raise DomainError("no root of the hodograph relation in the profile domain", x=x, t=t)
    return HodographResult(roots[0], abs(float(G(roots[0]))), tb, True)


def hodograph_field(profile: MonotoneProfile, xs, t: float) -> np.ndarray:
    return np.array([hodograph_solve(profile, float(v), t).u for v in np.ravel(xs)]).reshape(
        np.shape(xs)
    )


# --------------------------------------------------------------------------
# Thomas equation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ThomasParams:
    alpha: float
    beta: float = 0.0
    k1: float = 0.0

    @property
    def k2(self) -> float:
        return -(self.k1 + self.alpha)


def thomas_linearize(psi):
    """theta = exp(psi) for arrays or callables."""
    if callable(psi):
        return lambda x, y: np.exp(psi(x, y))
    return np.exp(np.asarray(psi))


def thomas_delinearize(theta):
    """psi = log(theta); theta must be strictly positive."""
    if callable(theta):

        def psi(x, y):
            th = np.asarray(theta(x, y))
            if np.any(th <= 0):
                raise PositivityError("theta must be positive", min=float(np.min(th)))
            return np.log(th)

        return psi
    th = np.asarray(theta)
    if np.any(th <= 0):
        raise PositivityError("theta must be positive", min=float(np.min(th)))
    return np.log(th)


def _partials(fn, X, Y, h, accuracy):
    fx = fd_callable(lambda xx: fn(xx, Y), X, 1, accuracy, h)
    fy = fd_callable(lambda yy: fn(X, yy), Y, 1, accuracy, h)
    fxy = fd_callable(
        lambda xx: fd_callable(lambda yy: fn(xx, yy), Y, 1, accuracy, h), X, 1, accuracy, h
    )
    return fx, fy, fxy


def _mesh(window, n):
    (x0, x1), (y0, y1) = window
    xs = np.linspace(x0, x1, n)
    ys = np.linspace(y0, y1, n)
    return np.meshgrid(xs, ys, indexing="ij")


def thomas_residual(psi, alpha, beta, window, n=128, accuracy=8, h=None) -> float:
    """max |psi_xy + alpha psi_x + beta psi_y + psi_x psi_y| on an n x n grid."""
    X, Y = _mesh(window, n)
    h = h or (window[0][1] - window[0][0]) / (n - 1)
    px, py, pxy = _partials(psi, X, Y, h, accuracy)
    return float(np.max(np.abs(pxy + alpha * px + beta * py + px * py)))


def linear_thomas_residual(theta, alpha, beta, window, n=128, accuracy=8, h=None) -> float:
    """max |theta_xy + alpha theta_x + beta theta_y|."""
    X, Y = _mesh(window, n)
    h = h or (window[0][1] - window[0][0]) / (n - 1)
    tx, ty, txy = _partials(theta, X, Y, h, accuracy)
    return float(np.max(np.abs(txy + alpha * tx + beta * ty)))


@dataclass
class ThomasSolution:
    params: ThomasParams
    f_hat: Callable
    h: Callable

    def phi(self, x, y):
        k2 = self.params.k2
        return self.f_hat(y) + np.exp(k2 * y) * self.h(x)

    def theta(self, x, y):
        return self.phi(x, y) * np.exp(self.params.k1 * y)

    def psi(self, x, y):
        return thomas_delinearize(self.theta)(x, y)

    def phi_residual(self, window, n=128, accuracy=8, h=None) -> float:
        """max |phi_xy + (k1 + alpha) phi_x|."""
        X, Y = _mesh(window, n)
        h = h or (window[0][1] - window[0][0]) / (n - 1)
        px, _, pxy = _partials(self.phi, X, Y, h, accuracy)
        return float(np.max(np.abs(pxy + (self.params.k1 + self.params.alpha) * px)))


def thomas_general_solution(params: ThomasParams, f_hat: Callable, h: Callable) -> ThomasSolution:
    """phi = f_hat(y) + exp(k2 y) h(x); theta = phi exp(k1 y) solves the linear equation."""
    if params.beta != 0:
        raise UnsupportedCaseError("general solution is only derived for beta = 0", beta=params.beta)
    return ThomasSolution(params, f_hat, h)


# --------------------------------------------------------------------------
# Cole-Hopf
# --------------------------------------------------------------------------


def cole_hopf(w: SampledField, eps: float = 1.0) -> SampledField:
    """u = eps * w_x / w (spectral derivative)."""
    vals = np.asarray(w.values)
    if np.iscomplexobj(vals):
        if np.max(np.abs(vals.imag)) > 1e-12 * np.max(np.abs(vals)):
            raise PositivityError("w must be real and positive")
        vals = vals.real
    if np.min(vals) <= 0:
        raise PositivityError("w must be positive everywhere", min=float(np.min(vals)))
    wx = spectral_derivative(w.with_values(vals)).values
    return w.with_values(eps * wx / vals)


def inverse_cole_hopf(u: SampledField, eps: float = 1.0, mean_tol: float = 1e-10) -> SampledField:
    """w = exp(int u dx / eps), normalised so that w = 1 at the left grid point.

    u must have zero mean, otherwise w is not periodic.
    """
    vals = np.asarray(u.values, dtype=float)
    mean = float(np.mean(vals))
    if abs(mean) > mean_tol * max(1.0, float(np.max(np.abs(vals)))):
        raise PeriodicityError("u has nonzero mean; w would not be periodic", mean=mean)
    n = u.grid.n
    k = u.grid.wavenumbers()
    uh = np.fft.fft(vals - mean)
    vh = np.zeros_like(uh)
    nz = k != 0
    vh[nz] = uh[nz] / (1j * k[nz])
    vh[n // 2] = 0.0
    v = np.fft.ifft(vh).real
    v = v - v[0]
    return u.with_values(np.exp(v / eps))


# --------------------------------------------------------------------------
# Burgers rescaling
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BurgersScaling:
    """Map (x, t, u) -> (eps x, eps^3 t, u / eps^2).

    Takes solutions of u_t = 2 u u_x + eps u_xx to solutions of the
    unit-viscosity equation.
    """

    eps: float

    def __post_init__(self):
        if self.eps == 0:
            raise ConfigurationError("degenerate scaling eps = 0")

    def forward(self, x, t, u):
        e = self.eps
        return e * np.asarray(x), e**3 * np.asarray(t), np.asarray(u) / e**2

    def backward(self, x, t, u):
        e = self.eps
        return np.asarray(x) / e, np.asarray(t) / e**3, e**2 * np.asarray(u)

    def inverse(self) -> "BurgersScaling":
        return BurgersScaling(1.0 / self.eps)

    def transform_solution(self, u_fn: Callable) -> Callable:
        """u_fn(x, t) solving the eps-equation -> callable solving the unit equation."""
        e = self.eps

        def tilde(xt, tt):
            return u_fn(np.asarray(xt) / e, np.asarray(tt) / e**3) / e**2

        return tilde


def scale_burgers(eps: float, direction: str = "to_unit") -> BurgersScaling:
    if direction == "to_unit":
        return BurgersScaling(eps)
    if direction == "from_unit":
        return BurgersScaling(eps).inverse()
    raise ConfigurationError("direction must be 'to_unit' or 'from_unit'", direction=direction)


def burgers_residual(u_fn: Callable, xs, ts, eps: float = 1.0, h: float = 1e-3, accuracy: int = 8) -> float:
    """max |u_t - 2 u u_x - eps u_xx| of a callable u(x, t) on a point set."""
    X, Tt = np.meshgrid(np.asarray(xs, float), np.asarray(ts, float), indexing="ij")
    u = u_fn(X, Tt)
    ut = fd_callable(lambda tt: u_fn(X, tt), Tt, 1, accuracy, h)
    ux = fd_callable(lambda xx: u_fn(xx, Tt), X, 1, accuracy, h)
    uxx = fd_callable(lambda xx: u_fn(xx, Tt), X, 2, accuracy, h)
    return float(np.max(np.abs(ut - 2 * u * ux - eps * uxx)))


# --------------------------------------------------------------------------
# u_t = phi(u) u_x  ->  v_t = v v_x
# --------------------------------------------------------------------------


@dataclass
class InviscidReduction:
    phi: Callable
    dphi: Callable

    def transform(self, u):
        return self.phi(np.asarray(u, dtype=float))

    def residuals(self, u_fn: Callable, xs, ts, h: float = 1e-3, accuracy: int = 8) -> tuple[float, float]:
        """(max |u_t - phi(u) u_x|, max |v_t - v v_x|) for v = phi(u)."""
        X, Tt = np.meshgrid(np.asarray(xs, float), np.asarray(ts, float), indexing="ij")

        def v_fn(x, t):
            return self.transform(u_fn(x, t))

        u = u_fn(X, Tt)
        ut = fd_callable(lambda tt: u_fn(X, tt), Tt, 1, accuracy, h)
        ux = fd_callable(lambda xx: u_fn(xx, Tt), X, 1, accuracy, h)
        v = v_fn(X, Tt)
        vt = fd_callable(lambda tt: v_fn(X, tt), Tt, 1, accuracy, h)
        vx = fd_callable(lambda xx: v_fn(xx, Tt), X, 1, accuracy, h)
        r_u = float(np.max(np.abs(ut - self.phi(u) * ux)))
        r_v = float(np.max(np.abs(vt - v * vx)))
        return r_u, r_v


def reduce_to_inviscid(phi: Callable, dphi: Callable) -> InviscidReduction:
    return InviscidReduction(phi, dphi)
