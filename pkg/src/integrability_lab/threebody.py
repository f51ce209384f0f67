"""Planar equal-mass three-body problem with pairwise central forces.

Positions and velocities are complex numbers.  The equations of motion are

    z_j'' = sum_{k != j} (z_j - z_k) f(|z_j - z_k|^2)

so f < 0 attracts and f > 0 repels.  States are flat complex arrays
(z1, z2, z3, v1, v2, v3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    ConfigurationError,
    ContractError,
    DomainError,
    SingularityError,
)
from .numerics import IntegratorConfig, Trajectory, fd_callable, integrate

PAIRS = ((0, 1), (0, 2), (1, 2))
COLLISION = 1e-8
DEFAULT_CONFIG = IntegratorConfig(dt=1e-2, method="rkf45-adaptive", abs_tol=1e-10, rel_tol=1e-10)


@dataclass(frozen=True)
class ForceLaw:
    """Force density f(s) of the squared distance s, with F' = f."""

    f: Callable[[float], float]
    F: Callable[[float], float]
    label: str = "custom"

    def check_antiderivative(self, samples: Sequence[float] = (0.5, 1.0, 1.7, 3.0)) -> float:
        worst = 0.0
        for s in samples:
            d = float(fd_callable(np.vectorize(self.F), s, 1, 8, 1e-3 * s))
            worst = max(worst, abs(d - self.f(s)) / max(1.0, abs(self.f(s))))
        if worst > 1e-8:
            raise ConfigurationError("F' does not match f", mismatch=worst, label=self.label)
        return worst

    def scaled(self, c: float) -> "ForceLaw":
        return ForceLaw(lambda s: c * self.f(s), lambda s: c * self.F(s), f"{c:g}*{self.label}")


def poincare_law(sigma: float) -> ForceLaw:
    """f(s) = sigma / s^2, i.e. 1/|z|^4 scaled by sigma."""
    return ForceLaw(lambda s: sigma / s**2, lambda s: -sigma / s, f"poincare({sigma:g})")


def power_law(c: float, p: float) -> ForceLaw:
    """f(s) = c * s^p (p != -1)."""
    if p == -1:
        return ForceLaw(lambda s: c / s, lambda s: c * np.log(s), f"log({c:g})")
    return ForceLaw(lambda s: c * s**p, lambda s: c * s ** (p + 1) / (p + 1), f"power({c:g},{p:g})")


def newton_like() -> ForceLaw:
    """f(s) = -s^(-3/2): inverse-square attraction in the squared-distance argument."""
    return power_law(-1.0, -1.5)


LAWS = {"newton": lambda sigma: newton_like(), "poincare": poincare_law}


# --------------------------------------------------------------------------
# state and dynamics
# --------------------------------------------------------------------------


def make_state(z: Sequence[complex], v: Sequence[complex], com_gauge: bool = True) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if z.shape != (3,) or v.shape != (3,):
        raise ConfigurationError("need three positions and three velocities")
    if com_gauge:
        z = z - z.mean()
        v = v - v.mean()
    return np.concatenate([z, v])


def split(state) -> tuple[np.ndarray, np.ndarray]:
    state = np.asarray(state)
    return state[:3], state[3:]


def accelerations(z: np.ndarray, law: ForceLaw, t: float | None = None) -> np.ndarray:
    acc = np.zeros(3, dtype=complex)
    for j, k in PAIRS:
        d = z[j] - z[k]
        s = float((d * d.conjugate()).real)
        if s < COLLISION**2:
            raise SingularityError("collision", time=t, pair=(j + 1, k + 1), distance=math.sqrt(s))
        fd = d * law.f(s)
        acc[j] += fd
        acc[k] -= fd
    return acc


def rhs(law: ForceLaw) -> Callable:
    def field(t, state):
        z, v = split(state)
        return np.concatenate([v, accelerations(z, law, t)])

    return field


def simulate(state0, law: ForceLaw, T: float, config: IntegratorConfig | None = None) -> Trajectory:
    return integrate(rhs(law), np.asarray(state0, complex), 0.0, T, config or DEFAULT_CONFIG)


# --------------------------------------------------------------------------
# monitors
# --------------------------------------------------------------------------


def inertia(z) -> float:
    """Z = |z12|^2 + |z13|^2 + |z23|^2."""
    return float(sum(abs(z[j] - z[k]) ** 2 for j, k in PAIRS))


def energy(state, law: ForceLaw) -> float:
    z, v = split(state)
    return float(np.sum(np.abs(v) ** 2) - sum(law.F(abs(z[j] - z[k]) ** 2) for j, k in PAIRS))


def angular_momentum(state) -> float:
    z, v = split(state)
    return float(np.sum(v * z.conjugate()).imag)


def potential(law: ForceLaw) -> Callable[[np.ndarray], float]:
    """U(x1, y1, x2, y2, x3, y3) = sum F(|z_jk|^2)."""

    def U(q):
        z = q[0::2] + 1j * q[1::2]
        return sum(law.F(abs(z[j] - z[k]) ** 2) for j, k in PAIRS)

    return U


def lagrange_jacobi_residual(z, law: ForceLaw, h: float = 1e-3) -> float:
    """|sum_j (x_j dU/dx_j + y_j dU/dy_j) - 2 sum f_jk |z_jk|^2|, gradient by FD."""
    z = np.asarray(z, dtype=complex)[:3]  # a full state works too
    q = np.empty(6)
    q[0::2], q[1::2] = z.real, z.imag
    U = potential(law)
    lhs = 0.0
    for i in range(6):
        e = np.zeros(6)
        e[i] = 1.0
        grad = fd_callable(lambda s: U(q + s * e), 0.0, 1, 8, h)
        lhs += q[i] * float(grad)
    rhs_val = 2 * sum(law.f(abs(z[j] - z[k]) ** 2) * abs(z[j] - z[k]) ** 2 for j, k in PAIRS)
    scale = max(1.0, abs(rhs_val))
    return abs(lhs - rhs_val) / scale


@dataclass(frozen=True)
class MonitorReport:
    com_velocity: complex
    energy: float
    angular_momentum: float
    inertia_momentum: float
    lagrange_jacobi_residual: float

    def to_json(self) -> dict:
        return {
            "com_velocity": [self.com_velocity.real, self.com_velocity.imag],
            "energy": self.energy,
            "angular_momentum": self.angular_momentum,
            "inertia_momentum": self.inertia_momentum,
            "lagrange_jacobi_residual": self.lagrange_jacobi_residual,
        }


def monitors(state, law: ForceLaw) -> MonitorReport:
    z, v = split(state)
    return MonitorReport(
        complex(v.sum()),
        energy(state, law),
        angular_momentum(state),
        inertia(z),
        lagrange_jacobi_residual(z, law),
    )


@dataclass
class DriftReport:
    com_velocity: float
    energy: float
    angular_momentum: float

    def to_json(self) -> dict:
        return {"com_velocity": self.com_velocity, "energy": self.energy, "angular_momentum": self.angular_momentum}


def drift(traj: Trajectory, law: ForceLaw) -> DriftReport:
    E = np.array([energy(y, law) for y in traj.y])
    L = np.array([angular_momentum(y) for y in traj.y])
    P = np.array([abs(split(y)[1].sum()) for y in traj.y])
    return DriftReport(float(P.max()), float(np.max(np.abs(E - E[0]))), float(np.max(np.abs(L - L[0]))))


# --------------------------------------------------------------------------
# convexity of the inertia momentum for repulsive forces
# --------------------------------------------------------------------------


def half_inertia_acceleration(state, law: ForceLaw) -> float:
    """Exact (1/2) d^2Z/dt^2 along the flow, from the equations of motion."""
    z, v = split(state)
    a = accelerations(z, law)
    return float(sum(abs(v[j] - v[k]) ** 2 + ((z[j] - z[k]).conjugate() * (a[j] - a[k])).real for j, k in PAIRS))


def convexity_lower_bound(state, law: ForceLaw) -> float:
    """sum |z_jk'|^2 + sum f_jk |z_jk|^2, which bounds (1/2)Z'' from below when f > 0."""
    z, v = split(state)
    return float(
        sum(abs(v[j] - v[k]) ** 2 + law.f(abs(z[j] - z[k]) ** 2) * abs(z[j] - z[k]) ** 2 for j, k in PAIRS)
    )


@dataclass
class ConvexityAudit:
    lower_bound_min: float
    exact_min: float
    exact_vs_formula_gap: float
    steps: int

    @property
    def positive(self) -> bool:
        return self.lower_bound_min > 0 and self.exact_min > 0

    def to_json(self) -> dict:
        return {
            "lower_bound_min": self.lower_bound_min,
            "exact_min": self.exact_min,
            "exact_vs_formula_gap": self.exact_vs_formula_gap,
            "steps": self.steps,
            "positive": self.positive,
        }


def convexity_audit(traj: Trajectory, law: ForceLaw) -> ConvexityAudit:
    """Evaluate the convexity lower bound and the exact (1/2)Z'' at every step.

    The exact value equals sum |z_jk'|^2 + 3 sum f_jk |z_jk|^2;
    ``exact_vs_formula_gap`` confirms that closed form.
    """
    bound, exact, gap = [], [], 0.0
    for y in traj.y:
        z, _ = split(y)
        fs = [law.f(abs(z[j] - z[k]) ** 2) for j, k in PAIRS]
        if min(fs) <= 0:
            raise ContractError("convexity audit needs a repulsive law (f > 0)", f_min=min(fs))
        d = convexity_lower_bound(y, law)
        e = half_inertia_acceleration(y, law)
        closed = d + 2 * sum(f * abs(z[j] - z[k]) ** 2 for f, (j, k) in zip(fs, PAIRS))
        gap = max(gap, abs(e - closed) / max(1.0, abs(e)))
        bound.append(d)
        exact.append(e)
    return ConvexityAudit(min(bound), min(exact), gap, len(traj))


# --------------------------------------------------------------------------
# special solutions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LagrangeOrbit:
    state: np.ndarray
    omega: float
    period: float
    side: float


def lagrange_orbit(law: ForceLaw, side: float = 1.0, omega: float | None = None) -> LagrangeOrbit:
    """Equilateral configuration rotating rigidly: omega^2 = -3 f(side^2)."""
    if omega is not None and omega == 0:
        raise ConfigurationError("omega = 0: no static balance for a nonzero force")
    fv = law.f(side**2)
    if fv >= 0:
        raise DomainError("no circular equidistant orbit for a repulsive or null force", f=fv)
    w = math.sqrt(-3 * fv)
    if omega is not None and not math.isclose(abs(omega), w, rel_tol=1e-12):
        raise ConfigurationError("requested omega violates the force balance", omega=omega, required=w)
    R = side / math.sqrt(3)
    z = R * np.exp(2j * np.pi * np.arange(3) / 3)
    return LagrangeOrbit(make_state(z, 1j * w * z), w, 2 * math.pi / w, side)


def distance_spread(traj: Trajectory, side: float) -> float:
    """max over the run of |d_jk - side|."""
    worst = 0.0
    for y in traj.y:
        z, _ = split(y)
        worst = max(worst, max(abs(abs(z[j] - z[k]) - side) for j, k in PAIRS))
    return worst


def zero_energy_state(z: Sequence[complex], v: Sequence[complex], sigma: float) -> np.ndarray:
    """COM state with radial velocity removed (Z' = 0) and speed rescaled so E = 0.

    Needs sigma < 0: with f = sigma/s^2 the potential part of E is sigma * sum 1/s.
    """
    if sigma >= 0:
        raise DomainError("zero energy needs an attractive Poincare law (sigma < 0)", sigma=sigma)
    state = make_state(z, v)
    zz, vv = split(state)
    vv = vv - (np.vdot(zz, vv).real / np.vdot(zz, zz).real) * zz
    kinetic = float(np.sum(np.abs(vv) ** 2))
    pot = -sigma * sum(1 / abs(zz[j] - zz[k]) ** 2 for j, k in PAIRS)
    if kinetic == 0:
        raise DomainError("velocity is purely radial; cannot reach zero energy")
    return np.concatenate([zz, vv * math.sqrt(pot / kinetic)])


@dataclass
class InertiaStudy:
    energy: float
    z_drift: float
    z_start: float
    quadratic_coefficient: float
    t: np.ndarray
    Z: np.ndarray

    def to_json(self) -> dict:
        return {
            "energy": self.energy,
            "Z_drift": self.z_drift,
            "Z0": self.z_start,
            "fitted_t2_coefficient": self.quadratic_coefficient,
            "predicted_t2_coefficient": 3 * self.energy,
        }


def poincare_inertia_study(state0, sigma: float, T: float = 5.0, config: IntegratorConfig | None = None) -> InertiaStudy:
    """Integrate with f = sigma/s^2 and report how Z = sum |z_jk|^2 evolves.

    (1/2) Z'' = 3E for this law, so Z is conserved exactly when E = 0 and Z'(0) = 0.
    """
    law = poincare_law(sigma)
    traj = simulate(state0, law, T, config)
    Z = np.array([inertia(split(y)[0]) for y in traj.y])
    coef = float(np.polyfit(traj.t, Z, 2)[0]) if len(traj) > 2 else 0.0
    return InertiaStudy(energy(state0, law), float(np.max(np.abs(Z - Z[0]))), float(Z[0]), coef, traj.t, Z)


def two_body_reduce(state0, law: ForceLaw, T: float, config: IntegratorConfig | None = None):
    """Symmetric data z1 = v1 = 0, z2 = -z3, v2 = -v3 reduces to z'' = z (f(|z|^2) + 2 f(4|z|^2)).

    Returns (reduced trajectory of z2, full trajectory).
    """
    z, v = split(state0)
    if abs(z[0]) > 1e-14 or abs(v[0]) > 1e-14 or abs(z[1] + z[2]) > 1e-14 or abs(v[1] + v[2]) > 1e-14:
        raise ContractError("data are not symmetric (z1 = v1 = 0, z2 = -z3, v2 = -v3)")

    def reduced(t, y):
        s = float(abs(y[0]) ** 2)
        if s < COLLISION**2:
            raise SingularityError("collision", time=t, pair=(2, 3))
        return np.array([y[1], y[0] * (law.f(s) + 2 * law.f(4 * s))])

    cfg = config or DEFAULT_CONFIG
    red = integrate(reduced, np.array([z[1], v[1]], complex), 0.0, T, cfg)
    full = simulate(state0, law, T, cfg)
    return red, full


# --------------------------------------------------------------------------
# Calogero system on a line
# --------------------------------------------------------------------------


def calogero_potential(x) -> float:
    x = np.asarray(x, dtype=float)
    d = x[:, None] - x[None, :]
    iu = np.triu_indices(len(x), 1)
    return float(np.sum(1.0 / d[iu] ** 2))


def calogero_rhs(x, t: float | None = None) -> np.ndarray:
    """x_j'' = -dU/dx_j = sum_{i != j} 2 / (x_j - x_i)^3 for U = sum 1/(x_i - x_j)^2."""
    x = np.asarray(x, dtype=float)
    if np.any(np.diff(x) <= COLLISION):
        i = int(np.argmin(np.diff(x)))
        raise SingularityError("ordering violated (collision)", time=t, pair=(i + 1, i + 2))
    d = x[:, None] - x[None, :]
    np.fill_diagonal(d, np.inf)
    return np.sum(2.0 / d**3, axis=1)


def calogero_energy(y) -> float:
    n = len(y) // 2
    return float(0.5 * np.sum(y[n:] ** 2) + calogero_potential(y[:n]))


@dataclass
class CalogeroRun:
    t: np.ndarray
    y: np.ndarray
    energy_drift: float
    momentum_drift: float
    ordered: bool

    @property
    def final_velocities(self) -> np.ndarray:
        return self.y[-1, self.y.shape[1] // 2:]


def calogero_run(x0, v0, T: float, config: IntegratorConfig | None = None) -> CalogeroRun:
    """Integrate from t = 0 to T (T may be negative)."""
    x0 = np.asarray(x0, float)
    v0 = np.asarray(v0, float)
    if x0.shape != v0.shape or len(x0) < 2:
        raise ConfigurationError("x0 and v0 must have the same length >= 2")
    if np.any(np.diff(x0) <= 0):
        raise ConfigurationError("initial positions must be strictly increasing")
    n = len(x0)

    def field(t, y):
        return np.concatenate([y[n:], calogero_rhs(y[:n], t)])

    cfg = config or IntegratorConfig(dt=1e-2, method="rkf45-adaptive", abs_tol=1e-12, rel_tol=1e-12)
    traj = integrate(field, np.concatenate([x0, v0]), 0.0, T, cfg)
    E = np.array([calogero_energy(y) for y in traj.y])
    P = traj.y[:, n:].sum(axis=1)
    ordered = bool(np.all(np.diff(traj.y[:, :n], axis=1) > 0))
    return CalogeroRun(traj.t, traj.y, float(np.max(np.abs(E - E[0]))), float(np.max(np.abs(P - P[0]))), ordered)


def calogero_scattering(x0, v0, T: float = 1000.0) -> tuple[np.ndarray, np.ndarray, float]:
    """Velocities at -T and +T; their sorted sets agree for the integrable system.

    Returns (incoming, outgoing, max gap between the sorted sets).
    """
    fwd = calogero_run(x0, v0, T)
    bwd = calogero_run(x0, v0, -T)
    vin, vout = np.sort(bwd.final_velocities), np.sort(fwd.final_velocities)
    return vin, vout, float(np.max(np.abs(vin - vout)))
