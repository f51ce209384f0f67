"""Spectral tools: periodic heat and Burgers solvers, dispersion relations,
residual checks of closed-form PDE solutions, and the Jost Volterra equation.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import trapezoid

from .errors import (
    ConfigurationError,
    DivergenceError,
    DomainError,
    EvaluationError,
)
from .exprjet import JetCoord, JetPolynomial
from .numerics import (
    Grid1D,
    IntegratorConfig,
    SampledField,
    central_stencil,
    integrate,
    spectral_derivative,
)
from .transforms import cole_hopf, inverse_cole_hopf

# --------------------------------------------------------------------------
# heat and Burgers
# --------------------------------------------------------------------------


def heat_solve(u0: SampledField, t: float, diffusivity: float = 1.0) -> SampledField:
    """w_t = nu w_xx on the periodic grid: w_hat(k) -> exp(-nu k^2 t) w_hat(k)."""
    if t < 0:
        raise DomainError("backward heat flow is ill-posed", t=t)
    if diffusivity < 0:
        raise DomainError("diffusivity must be non-negative", diffusivity=diffusivity)
    if t == 0:
        return u0.with_values(np.array(u0.values, copy=True))
    k = u0.grid.wavenumbers()
    out = np.fft.ifft(np.exp(-diffusivity * k**2 * t) * np.fft.fft(u0.values))
    return u0.with_values(out if np.iscomplexobj(u0.values) else out.real)


def burgers_solve(u0: SampledField, t: float, eps: float = 1.0) -> SampledField:
    """u_t = 2 u u_x + eps u_xx by Cole-Hopf: invert, diffuse, transform back."""
    if t < 0:
        raise DomainError("negative time", t=t)
    w0 = inverse_cole_hopf(u0, eps)
    return cole_hopf(heat_solve(w0, t, diffusivity=eps), eps)


def burgers_direct(
    u0: SampledField, t: float, eps: float = 1.0, dt: float = 1e-3
) -> SampledField:
    """Independent oracle: integrating-factor RK4 on the Fourier modes.

    u_hat' = -eps k^2 u_hat + i k FFT(u^2), with the Nyquist mode held at zero.
    """
    if t < 0:
        raise DomainError("negative time", t=t)
    n = u0.grid.n
    k = u0.grid.wavenumbers()
    ik = 1j * k
    ik[n // 2] = 0.0
    lin = -eps * k**2

    def N(vh):
        u = np.fft.ifft(vh).real
        return ik * np.fft.fft(u * u)

    steps = max(1, math.ceil(t / dt - 1e-9))
    h = t / steps if steps else 0.0
    E = np.exp(lin * h / 2)
    E2 = E * E
    vh = np.fft.fft(np.asarray(u0.values, dtype=float))
    vh[n // 2] = 0.0
    for _ in range(steps if t > 0 else 0):
        a = h * N(vh)
        b = h * N(E * (vh + a / 2))
        c = h * N(E * vh + b / 2)
        d = h * N(E2 * vh + E * c)
        vh = E2 * vh + (E2 * a + 2 * E * (b + c) + d) / 6
    return u0.with_values(np.fft.ifft(vh).real)


def burgers_residual(u0: SampledField, t: float, eps: float = 1.0, dt: float = 1e-3) -> float:
    """max |u_t - 2 u u_x - eps u_xx| for the Cole-Hopf solution at time t.

    Time derivative by a fourth-order central difference, space derivatives spectral.
    """
    offsets, w = central_stencil(1, 4)
    if t + offsets[0] * dt < 0:
        raise DomainError("time too close to zero for a central difference", t=t, dt=dt)
    ut = sum(wk * burgers_solve(u0, t + off * dt, eps).values for off, wk in zip(offsets, w)) / dt
    u = burgers_solve(u0, t, eps)
    ux = spectral_derivative(u).values
    uxx = spectral_derivative(u, 2).values
    return float(np.max(np.abs(ut - 2 * u.values * ux - eps * uxx)))


INITIAL_DATA = {
    "sin": lambda x: np.sin(x),
    "half-sin": lambda x: 0.5 * np.sin(x),
    "two-mode": lambda x: np.sin(x) + 0.5 * np.sin(3 * x),
    "cos": lambda x: np.cos(x),
    "bump": lambda x: np.exp(np.cos(x)),
}


def initial_field(name: str, n: int) -> SampledField:
    if name not in INITIAL_DATA:
        raise ConfigurationError(f"unknown initial profile {name!r}", known=sorted(INITIAL_DATA))
    return SampledField.from_function(Grid1D(n), INITIAL_DATA[name])


# --------------------------------------------------------------------------
# dispersion relations
# --------------------------------------------------------------------------


class BranchCrossingWarning(UserWarning):
    """Two dispersion branches come too close for reliable tracking."""


@dataclass(frozen=True)
class DispersionSpec:
    """Linear constant-coefficient PDE sum p[a, b...] d_t^a d_x^b... u = 0.

    Keys are exponent tuples (a, b1, b2, ...) with ``a`` the time order.
    """

    terms: dict

    def __post_init__(self):
        if not self.terms:
            raise ConfigurationError("empty dispersion polynomial")
        dims = {len(k) for k in self.terms}
        if len(dims) != 1 or dims.pop() < 2:
            raise ConfigurationError("exponent tuples must share a length >= 2")
        if self.omega_degree < 1:
            raise ConfigurationError("no time derivative: dispersion relation is empty")

    @property
    def space_dims(self) -> int:
        return len(next(iter(self.terms))) - 1

    @property
    def omega_degree(self) -> int:
        return max((k[0] for k, v in self.terms.items() if v != 0), default=0)

    def omega_coefficients(self, k) -> np.ndarray:
        """Coefficients of P(-i w, i k) in w, highest degree first."""
        k = np.atleast_1d(np.asarray(k, dtype=float))
        if k.size != self.space_dims:
            raise ConfigurationError("wavevector dimension mismatch", k=k.tolist())
        deg = self.omega_degree
        c = np.zeros(deg + 1, dtype=complex)
        for (a, *bs), p in self.terms.items():
            mono = complex(p) * (-1j) ** a
            for b, kk in zip(bs, k):
                mono *= (1j * kk) ** b
            c[deg - a] += mono
        return c

    def roots(self, k) -> np.ndarray:
        c = self.omega_coefficients(k)
        nz = np.flatnonzero(np.abs(c) > 1e-14 * max(1.0, float(np.max(np.abs(c)))))
        return np.roots(c[nz[0]:]) if nz.size else np.array([], dtype=complex)


_TERM = re.compile(r"^([0-9.]*)\*?u([txyz]*)$")


def parse_dispersion(text: str) -> DispersionSpec:
    """Parse e.g. ``"ut - uxxx"``, ``"utt = uxx"`` or ``"ut + 2*ux"``."""
    if "=" in text:
        lhs, rhs = text.split("=", 1)
        if not lhs.strip() or not rhs.strip():
            raise ConfigurationError("both sides of '=' must be non-empty", text=text)
        text = f"{lhs} - ({rhs})"
    text = text.replace(" ", "")
    # expand a single level of parentheses with a leading sign
    text = re.sub(r"-\(([^()]*)\)", lambda m: "-" + m.group(1).replace("+", "#").replace("-", "+").replace("#", "-"), text)
    text = text.replace("+(", "+").replace("(", "").replace(")", "").replace("--", "+").replace("+-", "-")
    pieces = re.findall(r"[+-]?[^+-]+", text)
    if "".join(pieces) != text:
        raise ConfigurationError("dangling sign in dispersion polynomial", text=text)
    if not pieces:
        raise ConfigurationError("empty dispersion polynomial", text=text)
    parsed = []
    letters = set()
    for piece in pieces:
        sign = -1.0 if piece.startswith("-") else 1.0
        body = piece.lstrip("+-")
        m = _TERM.match(body)
        if not m:
            raise ConfigurationError(f"cannot parse term {piece!r}")
        coef = float(m.group(1)) if m.group(1) else 1.0
        parsed.append((sign * coef, m.group(2)))
        letters |= set(m.group(2)) - {"t"}
    space = sorted(letters, key="xyz".index) or ["x"]
    terms: dict = {}
    for coef, ders in parsed:
        key = (ders.count("t"), *(ders.count(v) for v in space))
        terms[key] = terms.get(key, 0.0) + coef
    return DispersionSpec({k: v for k, v in terms.items() if v != 0})


@dataclass
class DispersionResult:
    k: np.ndarray
    omega: np.ndarray  # shape (len(k), degree)
    omega_dd: np.ndarray
    dispersive: bool
    root_counts: list
    crossings: list = field(default_factory=list)

    def branch_max_dd(self) -> list[float]:
        return [float(np.max(np.abs(self.omega_dd[:, j].real))) for j in range(self.omega.shape[1])]

    def to_json(self) -> dict:
        return {
            "verdict": "dispersive" if self.dispersive else "non-dispersive",
            "branches": self.omega.shape[1],
            "max_abs_omega_dd": self.branch_max_dd(),
            "crossings": [float(v) for v in self.crossings],
        }


def _match(prev: np.ndarray, roots: np.ndarray) -> np.ndarray:
    """Reorder ``roots`` so that entry j is the root nearest prev[j]."""
    out = np.empty_like(prev)
    left = list(roots)
    for j, p in enumerate(prev):
        i = int(np.argmin([abs(r - p) for r in left]))
        out[j] = left.pop(i)
    return out


def dispersion_relation(
    spec: DispersionSpec, ks: Sequence[float], tol: float = 1e-8, h: float = 1e-2
) -> DispersionResult:
    """Branches w_j(k) and w_j''(k) of P(-i w, i k) = 0 in one space dimension."""
    if spec.space_dims != 1:
        raise ConfigurationError("use dispersion_hessian for several space variables")
    ks = np.asarray(ks, dtype=float)
    deg = spec.omega_degree
    offsets, wts = central_stencil(2, 4)
    omega = np.empty((len(ks), deg), dtype=complex)
    dd = np.empty_like(omega)
    counts, crossings = [], []
    prev = None
    for i, kv in enumerate(ks):
        r = spec.roots(kv)
        counts.append(len(r))
        if len(r) != deg:
            raise DomainError("leading coefficient vanishes at this k", k=float(kv))
        r = np.sort_complex(r) if prev is None else _match(prev, r)
        scale = max(1.0, float(np.max(np.abs(r))))
        if deg > 1:
            gaps = np.abs(r[:, None] - r[None, :])
            np.fill_diagonal(gaps, np.inf)
            if np.min(gaps) < 1e-6 * scale:
                crossings.append(float(kv))
        omega[i] = r
        hk = h * max(1.0, abs(kv))
        acc = np.zeros(deg, dtype=complex)
        for off, wk in zip(offsets, wts):
            acc += wk * (r if off == 0 else _match(r, spec.roots(kv + off * hk)))
        dd[i] = acc / hk**2
        prev = r
    if crossings:
        warnings.warn(
            f"branches cross near k = {crossings[:3]}; per-sample verdict still reported",
            BranchCrossingWarning,
            stacklevel=2,
        )
    flags = np.abs(dd.real) > tol
    # dispersive: some branch has |Re w''| > tol on two consecutive samples
    dispersive = bool(np.any(flags[1:] & flags[:-1])) if len(ks) > 1 else bool(np.any(flags))
    return DispersionResult(ks, omega, dd, dispersive, counts, crossings)


def dispersion_hessian(spec: DispersionSpec, k, branch: int = 0, h: float = 1e-3) -> tuple[np.ndarray, complex]:
    """Hessian matrix of w(k) for several space variables and its determinant."""
    k = np.asarray(k, dtype=float)
    d = spec.space_dims
    base = np.sort_complex(spec.roots(k))

    def w(kk):
        return _match(base, spec.roots(kk))[branch]

    H = np.empty((d, d), dtype=complex)
    e = np.eye(d) * h
    w0 = w(k)
    for i in range(d):
        for j in range(i, d):
            if i == j:
                v = (-w(k + 2 * e[i]) + 16 * w(k + e[i]) - 30 * w0 + 16 * w(k - e[i]) - w(k - 2 * e[i])) / (12 * h * h)
            else:
                v = (w(k + e[i] + e[j]) - w(k + e[i] - e[j]) - w(k - e[i] + e[j]) + w(k - e[i] - e[j])) / (4 * h * h)
            H[i, j] = H[j, i] = v
    return H, complex(np.linalg.det(H))


# --------------------------------------------------------------------------
# residual harness for closed-form solutions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PDESpec:
    """Evolution equation ``time_factor * u_t = rhs(derivs, x)``.

    ``derivs[j]`` is the j-th x-derivative of u, up to ``order``.
    """

    name: str
    order: int
    rhs: Callable[[list, np.ndarray], np.ndarray]
    time_factor: complex = 1.0

    @classmethod
    def from_polynomial(cls, text: str, name: str | None = None, time_factor=1.0) -> "PDESpec":
        """u_t = K(u0, u1, ...) for a jet polynomial K."""
        K = JetPolynomial.coerce(text)
        bad = [c.name for c in K.coords() if c.kind != "u"]
        if bad:
            raise DomainError("right-hand side may only use u0, u1, ...", coords=bad)
        order = max(K.max_order("u"), 0)

        def rhs(derivs, x):
            return K.evaluate({JetCoord("u", j): derivs[j] for j in range(order + 1)})

        return cls(name or str(K), order, rhs, time_factor)


def kdv_spec() -> PDESpec:
    return PDESpec.from_polynomial("6*u0*u1 + u3", "kdv")


def nls_spec(sign: int = 1) -> PDESpec:
    """i u_t = u_xx + sign |u|^2 u."""
    if sign not in (1, -1):
        raise ConfigurationError("sign must be +1 or -1")
    return PDESpec(
        "nls+" if sign > 0 else "nls-", 2, lambda d, x: d[2] + sign * np.abs(d[0]) ** 2 * d[0], 1j
    )


def kdv_soliton(kappa: float = 1.0) -> Callable:
    return lambda x, t: 2 * kappa**2 / np.cosh(kappa * (x + 4 * kappa**2 * t)) ** 2


def nls_soliton(eta: float = 1.0) -> Callable:
    return lambda x, t: math.sqrt(2) * eta / np.cosh(eta * x) * np.exp(-1j * eta**2 * t)


@dataclass
class ResidualReport:
    steps: list[float]
    residuals: list[float]

    @property
    def max_residual(self) -> float:
        return self.residuals[-1]

    @property
    def ratios(self) -> list[float]:
        return [a / b if b > 0 else math.inf for a, b in zip(self.residuals, self.residuals[1:])]

    def to_json(self) -> dict:
        return {"h": self.steps, "residual": self.residuals, "ratios": self.ratios}


def _fd(fn, x, order, accuracy, h):
    offsets, w = central_stencil(order, accuracy)
    return sum(wk * fn(x + off * h) for off, wk in zip(offsets, w) if wk != 0) / h**order


def pde_residual(
    spec: PDESpec,
    candidate: Callable,
    window=((-4.0, 4.0), (0.0, 1.0)),
    points: int = 17,
    accuracy: int = 4,
    h: float = 0.05,
    levels: int = 3,
) -> ResidualReport:
    """max |time_factor u_t - rhs| on a points x points grid, for h, h/2, ...

    All derivatives are finite differences of ``candidate(x, t)``.
    """
    (x0, x1), (t0, t1) = window
    X, T = np.meshgrid(np.linspace(x0, x1, points), np.linspace(t0, t1, points), indexing="ij")
    with np.errstate(all="ignore"):
        base = np.asarray(candidate(X, T))
    if not np.all(np.isfinite(base)):
        raise EvaluationError("candidate is not finite on the window")
    steps, res = [], []
    for lev in range(levels):
        hh = h / 2**lev
        derivs = [base] + [
            _fd(lambda xx: candidate(xx, T), X, j, accuracy, hh) for j in range(1, spec.order + 1)
        ]
        ut = _fd(lambda tt: candidate(X, tt), T, 1, accuracy, hh)
        r = spec.time_factor * ut - spec.rhs(derivs, X)
        if not np.all(np.isfinite(r)):
            raise EvaluationError("residual is not finite", h=hh)
        steps.append(hh)
        res.append(float(np.max(np.abs(r))))
    return ResidualReport(steps, res)


# --------------------------------------------------------------------------
# Jost functions
# --------------------------------------------------------------------------


def square_well(amplitude: float, lo: float = -1.0, hi: float = 1.0) -> Callable:
    """amplitude on [lo, hi], zero elsewhere; the average at the two edges."""

    def u(x):
        x = np.asarray(x, dtype=float)
        v = np.where((x > lo) & (x < hi), amplitude, 0.0)
        return np.where((x == lo) | (x == hi), amplitude / 2, v)

    return u


@dataclass(frozen=True)
class JostProblem:
    """phi(x) = 1 + int_x^inf K(x, s) u(s) phi(s) ds for potential u supported on ``support``.

    ``convention='exponential'`` uses K = (1 - exp(2k(x - s))) / (2k), equivalent to
    psi'' - k^2 psi = u psi for psi = phi exp(-kx);
    ``'oscillatory'`` replaces k by ik, giving psi'' + k^2 psi = u psi.
    """

    u: Callable
    support: tuple[float, float]
    k: float
    pad: float = 1.0
    density: int = 128
    convention: str = "exponential"

    def __post_init__(self):
        if self.k == 0:
            raise ConfigurationError("spectral parameter k must be nonzero")
        if self.convention not in ("exponential", "oscillatory"):
            raise ConfigurationError("convention must be 'exponential' or 'oscillatory'")
        lo, hi = self.support
        if not hi > lo or self.pad < 0:
            raise ConfigurationError("bad support or padding", support=self.support)
        probe = np.concatenate(
            [np.linspace(lo - self.pad, lo, 64, endpoint=False)[:-1],
             np.linspace(hi, hi + self.pad, 64)[1:]]
        )
        if probe.size and np.max(np.abs(self.u(probe))) > 1e-14:
            raise DomainError("potential does not vanish outside its support")

    @property
    def kappa(self) -> complex:
        return self.k if self.convention == "exponential" else 1j * self.k

    def grid(self, refine: int = 1) -> np.ndarray:
        lo, hi = self.support
        x0, x1 = lo - self.pad, hi + self.pad
        # nodes land on both support ends
        per = max(1, math.ceil(self.density * (hi - lo))) * refine
        hstep = (hi - lo) / per
        nl = math.ceil(self.pad / hstep - 1e-9) if self.pad else 0
        return lo + hstep * np.arange(-nl, per + nl + 1)

    def kernel(self, x, s):
        z = self.kappa * (np.asarray(x) - np.asarray(s))
        small = np.abs(z) < 1e-4
        with np.errstate(all="ignore"):
            direct = (1 - np.exp(2 * z)) / (2 * self.kappa)
        # series for the removable singularity: -(x - s)(1 + z + 2 z^2 / 3)
        series = -(np.asarray(x) - np.asarray(s)) * (1 + z + 2 * z * z / 3)
        return np.where(small, series, direct)

    def contraction_bound(self) -> float:
        xs = self.grid()
        l1 = float(trapezoid(np.abs(self.u(xs)), xs))
        X, S = np.meshgrid(xs, xs, indexing="ij")
        K = np.where(S >= X, np.abs(self.kernel(X, S)), 0.0)
        return l1 * float(np.max(K))


@dataclass
class JostResult:
    x: np.ndarray
    phi: np.ndarray
    sweeps: int
    gaps: list[float]
    contraction_bound: float
    richardson_correction: float

    def to_json(self) -> dict:
        return {
            "sweeps": self.sweeps,
            "final_gap": self.gaps[-1] if self.gaps else 0.0,
            "contraction_bound": self.contraction_bound,
            "richardson_correction": self.richardson_correction,
        }


def _volterra_matrix(prob: JostProblem, xs: np.ndarray) -> np.ndarray:
    h = xs[1] - xs[0]
    X, S = np.meshgrid(xs, xs, indexing="ij")
    w = np.full(len(xs), h)
    w[-1] = h / 2
    A = np.where(S > X, prob.kernel(X, S), 0.0) * (prob.u(xs) * w)[None, :]
    # trapezoid: the diagonal node carries weight h/2, but K(x, x) = 0 anyway
    return A


def _neumann(A: np.ndarray, tol: float, max_sweeps: int) -> tuple[np.ndarray, list[float]]:
    phi = np.ones(A.shape[0], dtype=A.dtype)
    gaps = []
    for _ in range(max_sweeps):
        nxt = 1 + A @ phi
        gaps.append(float(np.max(np.abs(nxt - phi))))
        phi = nxt
        if gaps[-1] < tol:
            break
    return phi, gaps


def jost_solve(prob: JostProblem, tol: float = 1e-12, max_sweeps: int = 60) -> JostResult:
    """Nystrom trapezoid + Neumann iteration, with one Richardson step (h, h/2)."""
    bound = prob.contraction_bound()
    if bound >= 1:
        raise DivergenceError(
            "Neumann iteration is not a contraction; use a smaller potential "
            "(analytic continuation is out of scope)",
            contraction_bound=bound,
        )
    xs = prob.grid()
    if not np.any(prob.u(xs)):
        return JostResult(xs, np.ones(len(xs), dtype=complex if prob.convention != "exponential" else float), 0, [0.0], bound, 0.0)
    coarse, gaps = _neumann(_volterra_matrix(prob, xs), tol, max_sweeps)
    if gaps[-1] >= tol:
        raise DivergenceError("Neumann iteration did not reach the tolerance", gap=gaps[-1])
    fine_x = prob.grid(2)
    fine, _ = _neumann(_volterra_matrix(prob, fine_x), tol, max_sweeps)
    fine = fine[::2]
    phi = fine + (fine - coarse) / 3
    return JostResult(xs, phi, len(gaps), gaps, bound, float(np.max(np.abs(phi - fine))))


def jost_ode_oracle(prob: JostProblem, xs: Sequence[float], tol: float = 1e-13) -> np.ndarray:
    """Integrate phi'' = 2 kappa phi' + u phi leftwards from the right support end.

    Breakpoints at the support ends keep the piecewise-smooth potential out of
    the interior of any integration segment.
    """
    kap = prob.kappa
    lo, hi = prob.support
    xs = np.asarray(xs, dtype=float)
    out = np.ones(len(xs), dtype=complex)
    order = np.argsort(-xs)
    state = np.array([1.0, 0.0, 0.0, 0.0])  # Re phi, Im phi, Re phi', Im phi'
    pos = hi
    cfg = IntegratorConfig(dt=1e-2, method="rkf45-adaptive", abs_tol=tol, rel_tol=tol)

    def make_rhs(a, b):
        # sample u strictly inside the segment so edge values never leak in
        nudge = 1e-12 * max(1.0, abs(a), abs(b))

        def rhs(t, y):
            uval = float(prob.u(min(max(t, a + nudge), b - nudge)))
            p = y[0] + 1j * y[1]
            dp = y[2] + 1j * y[3]
            ddp = 2 * kap * dp + uval * p
            return np.array([y[2], y[3], ddp.real, ddp.imag])

        return rhs

    for idx in order:
        target = xs[idx]
        if target >= hi:
            continue
        stops = [b for b in (lo,) if target < b < pos] + [target]
        for stop in stops:
            if stop < pos:
                state = integrate(make_rhs(stop, pos), state, pos, stop, cfg, store=False).final
                pos = stop
        out[idx] = state[0] + 1j * state[1]
    return out if prob.convention != "exponential" else out.real
