"""Shared numerical kernels: grids, DFT, finite differences, Runge-Kutta
integration, adaptive Simpson quadrature and bracketed root finding.

Everything here is a pure function of its inputs and works in double
precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import AccuracyError, ConfigurationError, SingularityError

Array = np.ndarray
RHS = Callable[[float, Array], Array]


# --------------------------------------------------------------------------
# grids and sampled fields
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic grid on ``[a, b)`` with ``n`` points."""

    n: int
    a: float = 0.0
    b: float = 2 * math.pi

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 8:
            raise ConfigurationError("grid needs n >= 8 points", n=self.n)
        if not self.b > self.a:
            raise ConfigurationError("grid needs b > a", a=self.a, b=self.b)

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.n

    @property
    def x(self) -> Array:
        return self.a + self.h * np.arange(self.n)

    def wavenumbers(self) -> Array:
        """Angular wavenumbers in FFT order (not shifted)."""
        return 2 * math.pi / self.length * np.fft.fftfreq(self.n, d=1.0 / self.n)


@dataclass(frozen=True)
class SampledField:
    grid: Grid1D
    values: Array = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.shape != (self.grid.n,):
            raise ConfigurationError(
                "field length does not match grid", length=vals.shape, n=self.grid.n
            )
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: Grid1D, fn: Callable[[Array], Array]) -> "SampledField":
        return cls(grid, np.asarray(fn(grid.x)))

    @property
    def x(self) -> Array:
        return self.grid.x

    def with_values(self, values: Array) -> "SampledField":
        return SampledField(self.grid, values)

    def integral(self) -> float:
        """Periodic trapezoid (spectrally accurate for smooth fields)."""
        s = self.grid.h * np.sum(self.values)
        return complex(s) if np.iscomplexobj(self.values) else float(s)


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 1e-3
    method: str = "rk4-fixed"
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_steps: int = 10_000_000

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError("dt must be positive", dt=self.dt)
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ConfigurationError(
                "tolerances must be positive", abs_tol=self.abs_tol, rel_tol=self.rel_tol
            )
        if self.method not in ("rk4-fixed", "rkf45-adaptive"):
            raise ConfigurationError("unknown integration method", method=self.method)


# --------------------------------------------------------------------------
# discrete Fourier transform
# --------------------------------------------------------------------------


def _require_even(n: int) -> None:
    if n % 2:
        raise ConfigurationError("spectral routines need an even point count", n=n)


def dft(f: SampledField) -> tuple[Array, Array]:
    """Coefficients w_hat(k) = (1/n) sum_j w(x_j) exp(-i k 2 pi (x_j - a)/L).

    Returns ``(k, coeffs)`` with integer ``k`` running over ``-n/2 .. n/2-1``.
    """
    n = f.grid.n
    _require_even(n)
    coeffs = np.fft.fftshift(np.fft.fft(f.values)) / n
    k = np.arange(-n // 2, n // 2)
    return k, coeffs


def idft(coeffs: Array, grid: Grid1D) -> SampledField:
    """Inverse of :func:`dft`; keeps complex values."""
    _require_even(grid.n)
    coeffs = np.asarray(coeffs)
    if coeffs.shape != (grid.n,):
        raise ConfigurationError("coefficient count does not match grid", n=grid.n)
    return SampledField(grid, np.fft.ifft(np.fft.ifftshift(coeffs)) * grid.n)


def _realify(values: Array, like: Array) -> Array:
    return values.real if not np.iscomplexobj(like) else values


def spectral_derivative(f: SampledField, order: int = 1) -> SampledField:
    """Fourier derivative with the Nyquist mode zeroed."""
    n = f.grid.n
    _require_even(n)
    k = f.grid.wavenumbers()
    mult = (1j * k) ** order
    mult[n // 2] = 0.0
    out = np.fft.ifft(mult * np.fft.fft(f.values))
    return f.with_values(_realify(out, f.values))


# --------------------------------------------------------------------------
# finite differences
# --------------------------------------------------------------------------


def fornberg_weights(order: int, offsets: Sequence[float]) -> Array:
    """Finite-difference weights for the ``order``-th derivative at 0."""
    z = np.asarray(offsets, dtype=float)
    n = len(z)
    c = np.zeros((n, order + 1))
    c1, c4 = 1.0, z[0]
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2, c5, c4 = 1.0, c4, z[i]
        for j in range(i):
            c3 = z[i] - z[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


def central_stencil(order: int, accuracy: int) -> tuple[Array, Array]:
    """Integer offsets and weights (unit spacing) of the central stencil."""
    if order < 1:
        raise ConfigurationError("derivative order must be >= 1", order=order)
    if accuracy < 2 or accuracy % 2:
        raise ConfigurationError("accuracy must be a positive even integer", accuracy=accuracy)
    npts = 2 * ((order + 1) // 2) - 1 + accuracy
    r = (npts - 1) // 2
    offsets = np.arange(-r, r + 1)
    w = fornberg_weights(order, offsets)
    # symmetric stencils have exactly (anti)symmetric weights; clean round-off
    w = 0.5 * (w + (-1) ** order * w[::-1])
    return offsets, w


def fd_derivative(f: SampledField, order: int = 1, accuracy: int = 8) -> SampledField:
    """Central finite-difference derivative on the periodic grid."""
    offsets, w = central_stencil(order, accuracy)
    if len(offsets) > f.grid.n:
        raise ConfigurationError(
            "stencil wider than grid", stencil=len(offsets), n=f.grid.n
        )
    out = np.zeros_like(f.values, dtype=np.result_type(f.values, float))
    for off, wk in zip(offsets, w):
        if wk != 0.0:
            out = out + wk * np.roll(f.values, -off)
    return f.with_values(out / f.grid.h**order)


def fd_callable(
    fn: Callable[[Array], Array], x, order: int, accuracy: int, h: float
) -> Array:
    """Central difference of a vectorised callable at points ``x``."""
    offsets, w = central_stencil(order, accuracy)
    x = np.asarray(x, dtype=float)
    acc = 0.0
    for off, wk in zip(offsets, w):
        if wk != 0.0:
            acc = acc + wk * np.asarray(fn(x + off * h))
    return acc / h**order


# --------------------------------------------------------------------------
# Runge-Kutta integration
# --------------------------------------------------------------------------


def _eval(rhs: RHS, t: float, y: Array) -> Array:
    try:
        k = np.asarray(rhs(t, y))
    except SingularityError as exc:
        if exc.time is None:
            exc.time = t
            exc.details["time"] = t
        raise
    except (ZeroDivisionError, OverflowError) as exc:
        raise SingularityError(f"right-hand side failed: {exc}", time=t) from exc
    if not np.all(np.isfinite(k)):
        raise SingularityError("non-finite right-hand side", time=t)
    return k


def rk4_step(rhs: RHS, state: Array, dt: float, t: float = 0.0) -> Array:
    """One classical fourth-order Runge-Kutta step."""
    y = np.asarray(state)
    k1 = _eval(rhs, t, y)
    k2 = _eval(rhs, t + dt / 2, y + dt / 2 * k1)
    k3 = _eval(rhs, t + dt / 2, y + dt / 2 * k2)
    k4 = _eval(rhs, t + dt, y + dt * k3)
    return y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


# Fehlberg 4(5) tableau
_A = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8.0, 3680 / 513, -845 / 4104),
    (-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40),
)
_C = (0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2)
_B5 = (16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55)
_B4 = (25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0)


def rkf45_step(rhs: RHS, state: Array, dt: float, t: float = 0.0) -> tuple[Array, Array]:
    """One Fehlberg step; returns the fifth-order update and the error estimate."""
    y = np.asarray(state)
    ks = []
    for i in range(6):
        yi = y
        for a, k in zip(_A[i], ks):
            yi = yi + dt * a * k
        ks.append(_eval(rhs, t + _C[i] * dt, yi))
    y5 = y + dt * sum(b * k for b, k in zip(_B5, ks) if b)
    y4 = y + dt * sum(b * k for b, k in zip(_B4, ks) if b)
    return y5, y5 - y4


@dataclass
class Trajectory:
    t: Array
    y: Array

    def __len__(self) -> int:
        return len(self.t)

    @property
    def final(self) -> Array:
        return self.y[-1]


def integrate(
    rhs: RHS,
    y0,
    t0: float,
    t1: float,
    config: IntegratorConfig | None = None,
    store: bool = True,
) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` from ``t0`` to ``t1`` (either direction).

    ``rk4-fixed`` takes equal steps of at most ``config.dt``;
    ``rkf45-adaptive`` uses PI step-size control and propagates the
    fifth-order solution.
    """
    config = config or IntegratorConfig()
    y = np.array(y0, dtype=np.result_type(np.asarray(y0), float))
    span = t1 - t0
    ts = [t0]
    ys = [y.copy()]
    if span == 0:
        return Trajectory(np.array(ts), np.array(ys))
    direction = 1.0 if span > 0 else -1.0

    if config.method == "rk4-fixed":
        nsteps = max(1, math.ceil(abs(span) / config.dt - 1e-9))
        if nsteps > config.max_steps:
            raise ConfigurationError("step budget exceeded", steps=nsteps)
        h = span / nsteps
        for i in range(nsteps):
            t = t0 + i * h
            y = rk4_step(rhs, y, h, t)
            if store:
                ts.append(t0 + (i + 1) * h)
                ys.append(y)
        if not store:
            ts.append(t1)
            ys.append(y)
        return Trajectory(np.array(ts), np.array(ys))

    t = t0
    h = direction * min(config.dt, abs(span))
    err_prev = 1.0
    steps = 0
    safety, alpha, beta = 0.9, 0.7 / 5, 0.4 / 5
    while direction * (t1 - t) > 1e-14 * max(1.0, abs(t1)):
        if steps >= config.max_steps:
            raise AccuracyError("adaptive integrator exceeded max_steps", time=t)
        if direction * (t + h - t1) > 0:
            h = t1 - t
        y_new, err_vec = rkf45_step(rhs, y, h, t)
        scale = config.abs_tol + config.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean((np.abs(err_vec) / scale) ** 2)))
        steps += 1
        if err <= 1.0:
            t = t + h
            y = y_new
            if store:
                ts.append(t)
                ys.append(y)
            if err == 0.0:
                factor = 5.0
            else:
                factor = safety * err ** (-alpha) * err_prev**beta
            factor = min(5.0, max(0.2, factor))
            err_prev = max(err, 1e-4)
        else:
            factor = max(0.1, safety * err ** (-1 / 5))
        h = h * factor
        if abs(h) < 1e-14 * max(1.0, abs(t)):
            raise SingularityError("step size underflow", time=t)
    if not store:
        ts.append(t)
        ys.append(y)
    return Trajectory(np.array(ts), np.array(ys))


# --------------------------------------------------------------------------
# quadrature
# --------------------------------------------------------------------------


def _safe(f: Callable[[float], float], x: float) -> float:
    try:
        with np.errstate(all="ignore"):
            v = float(f(x))
    except (ZeroDivisionError, ValueError, OverflowError):
        return math.nan
    return v


def quadrature(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-10,
    max_depth: int = 60,
    max_evals: int = 2_000_000,
) -> float:
    """Adaptive Simpson quadrature of ``f`` over ``[a, b]``.

    An endpoint where ``f`` is not finite (integrable 1/sqrt-type
    singularity) triggers the substitution x = a + (b-a)(3s^2 - 2s^3), which
    turns such singularities into smooth integrands.
    """
    if a == b:
        return 0.0
    if b < a:
        return -quadrature(f, b, a, tol, max_depth, max_evals)
    fa, fb = _safe(f, a), _safe(f, b)
    if math.isfinite(fa) and math.isfinite(fb):
        return _adaptive_simpson(lambda x: _safe(f, x), a, b, tol, max_depth, max_evals)

    width = b - a

    def g(s: float) -> float:
        # measure from the nearer end so x keeps full precision there
        x = a + width * s * s * (3 - 2 * s) if s <= 0.5 else b - width * (1 - s) ** 2 * (1 + 2 * s)
        return _safe(f, x) * 6 * width * s * (1 - s)

    # next to a singular end the integrand is mostly rounding noise, so it is
    # replaced by the quadratic through three points a distance d, 2d, 3d inside
    d = 1e-4
    sing_lo, sing_hi = not math.isfinite(fa), not math.isfinite(fb)

    def inner_quadratic(s: float, from_hi: bool) -> float:
        r = ((1 - s) if from_hi else s) / d
        g1, g2, g3 = (g(1 - j * d) if from_hi else g(j * d) for j in (1, 2, 3))
        return g1 * (r - 2) * (r - 3) / 2 - g2 * (r - 1) * (r - 3) + g3 * (r - 1) * (r - 2) / 2

    def g_closed(s: float) -> float:
        if sing_lo and s < d:
            return inner_quadratic(s, False)
        if sing_hi and s > 1 - d:
            return inner_quadratic(s, True)
        v = g(s)
        if math.isfinite(v):
            return v
        return inner_quadratic(s, s > 0.5)

    return _adaptive_simpson(g_closed, 0.0, 1.0, tol, max_depth, max_evals)


def _adaptive_simpson(g, a, b, tol, max_depth, max_evals) -> float:
    fa, fm, fb = g(a), g((a + b) / 2), g(b)
    if not all(map(math.isfinite, (fa, fm, fb))):
        raise AccuracyError("integrand not finite on the interval", a=a, b=b)
    whole = (b - a) / 6 * (fa + 4 * fm + fb)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    total = 0.0
    evals = 3
    while stack:
        lo, hi, flo, fmid, fhi, s, eps, depth = stack.pop()
        mid = (lo + hi) / 2
        fl, fr = g((lo + mid) / 2), g((mid + hi) / 2)
        evals += 2
        if not (math.isfinite(fl) and math.isfinite(fr)):
            raise AccuracyError("integrand not finite inside the interval", near=mid)
        left = (mid - lo) / 6 * (flo + 4 * fl + fmid)
        right = (hi - mid) / 6 * (fmid + 4 * fr + fhi)
        delta = left + right - s
        # panels below 1e-7 of the interval only resolve rounding noise
        if abs(delta) <= 15 * eps or (depth >= 6 and hi - lo <= 1e-7 * (b - a)):
            total += left + right + delta / 15
            continue
        if depth >= max_depth or evals > max_evals:
            raise AccuracyError(
                "adaptive Simpson did not converge within the subdivision budget",
                near=mid,
                depth=depth,
            )
        stack.append((lo, mid, flo, fl, fmid, left, eps / 2, depth + 1))
        stack.append((mid, hi, fmid, fr, fhi, right, eps / 2, depth + 1))
    return total


# --------------------------------------------------------------------------
# root finding
# --------------------------------------------------------------------------


def bracketed_newton(
    g: Callable[[float], float],
    dg: Callable[[float], float] | None,
    lo: float,
    hi: float,
    xtol: float = 1e-15,
    maxiter: int = 200,
) -> float:
    """Safeguarded Newton iteration inside a sign-changing bracket."""
    glo, ghi = g(lo), g(hi)
    if glo == 0:
        return lo
    if ghi == 0:
        return hi
    if glo * ghi > 0:
        raise ConfigurationError("interval does not bracket a root", lo=lo, hi=hi)
    x = 0.5 * (lo + hi)
    for _ in range(maxiter):
        gx = g(x)
        if gx == 0:
            return x
        if (gx < 0) == (glo < 0):
            lo, glo = x, gx
        else:
            hi = x
        step_ok = False
        if dg is not None:
            d = dg(x)
            if d != 0 and math.isfinite(d):
                xn = x - gx / d
                if lo < xn < hi:
                    step_ok = True
        if not step_ok:
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= xtol * max(1.0, abs(x)):
            return xn
        x = xn
    return x


def sign_change_brackets(
    g: Callable[[Array], Array], lo: float, hi: float, n: int = 1024
) -> list[tuple[float, float]]:
    """Subintervals of an ``n``-point scan on which ``g`` changes sign."""
    xs = np.linspace(lo, hi, n + 1)
    vals = np.asarray(g(xs), dtype=float)
    out = []
    for i in range(n):
        if vals[i] == 0:
            out.append((xs[i], xs[i]))
        elif vals[i] * vals[i + 1] < 0:
            out.append((xs[i], xs[i + 1]))
    if vals[-1] == 0:
        out.append((xs[-1], xs[-1]))
    return out
