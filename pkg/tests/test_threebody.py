import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from integrability_lab.errors import ConfigurationError, ContractError, DomainError, SingularityError
from integrability_lab.numerics import IntegratorConfig
from integrability_lab.threebody import (
    ForceLaw,
    accelerations,
    angular_momentum,
    calogero_energy,
    calogero_run,
    calogero_scattering,
    convexity_audit,
    distance_spread,
    drift,
    energy,
    half_inertia_acceleration,
    inertia,
    lagrange_jacobi_residual,
    lagrange_orbit,
    make_state,
    monitors,
    newton_like,
    poincare_inertia_study,
    poincare_law,
    power_law,
    simulate,
    split,
    two_body_reduce,
    zero_energy_state,
)

TRIANGLE = [1.0, -0.5 + 0.8j, -0.4 - 0.9j]
SPIN = [0.1j, 0.3 - 0.1j, -0.2 + 0.05j]

def spread_out(z):
    return min(abs(z[j] - z[k]) for j, k in ((0, 1), (0, 2), (1, 2))) > 0.3


points = st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False), min_size=3, max_size=3)


# --- force laws ----------------------------------------------------------


@pytest.mark.parametrize(
    "law", [poincare_law(1.0), poincare_law(-2.0), newton_like(), power_law(0.7, 2.0), power_law(1.0, -1)]
)
def test_antiderivative_matches(law):
    assert law.check_antiderivative() < 1e-8


def test_mismatched_antiderivative_rejected():
    bad = ForceLaw(lambda s: 1 / s**2, lambda s: 1 / s, "bad")
    with pytest.raises(ConfigurationError):
        bad.check_antiderivative()


def test_scaled_law():
    law = poincare_law(1.0).scaled(3.0)
    assert law.f(2.0) == pytest.approx(0.75)
    assert law.F(2.0) == pytest.approx(-1.5)


# --- state and forces ----------------------------------------------------


def test_make_state_removes_centre_of_mass():
    z, v = split(make_state(TRIANGLE, SPIN))
    assert abs(z.sum()) < 1e-15 and abs(v.sum()) < 1e-15


def test_make_state_shape_checked():
    with pytest.raises(ConfigurationError):
        make_state([0, 1], [0, 0])


@given(points)
def test_forces_sum_to_zero(z):
    z = np.asarray(z, complex)
    if not spread_out(z):
        return
    a = accelerations(z, poincare_law(1.0))
    assert abs(a.sum()) < 1e-10 * max(1.0, np.abs(a).max())


def test_collision_raises():
    with pytest.raises(SingularityError):
        accelerations(np.array([0, 0, 1], complex), newton_like())


def test_repulsion_pushes_apart():
    a = accelerations(np.array([-1, 1, 10], complex), poincare_law(1.0))
    assert a[0].real < 0 < a[1].real


# --- conservation --------------------------------------------------------


def test_repulsive_run_conserves_invariants():
    law = poincare_law(1.0)
    traj = simulate(make_state(TRIANGLE, SPIN), law, 10.0)
    d = drift(traj, law)
    assert d.energy < 1e-8
    assert d.angular_momentum < 1e-8
    assert d.com_velocity < 1e-12


@given(points)
def test_lagrange_jacobi_identity(z):
    z = np.asarray(z, complex)
    if not spread_out(z):
        return
    for law in (poincare_law(1.0), newton_like(), power_law(0.5, 1.5)):
        assert lagrange_jacobi_residual(z, law) < 1e-7


def test_monitor_report_fields():
    law = poincare_law(1.0)
    state = make_state(TRIANGLE, SPIN)
    rep = monitors(state, law).to_json()
    assert rep["energy"] == pytest.approx(energy(state, law))
    assert rep["angular_momentum"] == pytest.approx(angular_momentum(state))
    assert rep["inertia_momentum"] == pytest.approx(inertia(split(state)[0]))
    assert rep["com_velocity"] == pytest.approx([0.0, 0.0], abs=1e-15)


def test_half_inertia_acceleration_matches_finite_difference():
    law = poincare_law(1.0)
    state = make_state(TRIANGLE, SPIN)
    cfg = IntegratorConfig(dt=1e-3, method="rk4-fixed")
    traj = simulate(state, law, 2e-3, cfg)
    Z = [inertia(split(y)[0]) for y in traj.y]
    # central difference around t = dt via a backward step
    back = simulate(state, law, -1e-3, cfg)
    Zm = inertia(split(back.y[-1])[0])
    fd = (Z[1] - 2 * Z[0] + Zm) / 1e-6 if len(Z) > 1 else None
    assert fd is not None
    assert 0.5 * fd == pytest.approx(half_inertia_acceleration(state, law), rel=1e-5)


# --- convexity -----------------------------------------------------------


def test_convexity_audit_repulsive():
    law = poincare_law(1.0)
    audit = convexity_audit(simulate(make_state(TRIANGLE, SPIN), law, 5.0), law)
    assert audit.positive
    assert audit.exact_vs_formula_gap < 1e-10
    assert audit.exact_min >= audit.lower_bound_min


def test_convexity_audit_rejects_attraction():
    law = newton_like()
    orbit = lagrange_orbit(law)
    with pytest.raises(ContractError):
        convexity_audit(simulate(orbit.state, law, 0.1), law)


# --- special solutions ---------------------------------------------------


def test_lagrange_orbit_rotation_rate():
    orbit = lagrange_orbit(newton_like(), side=1.0)
    assert orbit.omega == pytest.approx(math.sqrt(3))
    assert orbit.period == pytest.approx(2 * math.pi / math.sqrt(3))


def test_lagrange_orbit_stays_equilateral():
    law = newton_like()
    orbit = lagrange_orbit(law, side=1.3)
    traj = simulate(orbit.state, law, orbit.period)
    assert distance_spread(traj, 1.3) < 1e-7
    z_end, _ = split(traj.y[-1])
    assert np.abs(z_end - split(orbit.state)[0]).max() < 1e-6


def test_lagrange_orbit_negative_control():
    law = newton_like()
    orbit = lagrange_orbit(law)
    traj = simulate(orbit.state, law.scaled(1.1), orbit.period)
    assert distance_spread(traj, 1.0) > 1e-2


def test_lagrange_orbit_domain_errors():
    with pytest.raises(DomainError):
        lagrange_orbit(poincare_law(1.0))
    with pytest.raises(ConfigurationError):
        lagrange_orbit(newton_like(), omega=1.0)
    with pytest.raises(ConfigurationError):
        lagrange_orbit(newton_like(), omega=0.0)


def test_zero_energy_state_properties():
    state = zero_energy_state(TRIANGLE, SPIN, -1.0)
    z, v = split(state)
    assert abs(energy(state, poincare_law(-1.0))) < 1e-12
    assert abs(np.vdot(z, v).real) < 1e-12


def test_zero_energy_state_needs_attraction():
    with pytest.raises(DomainError):
        zero_energy_state(TRIANGLE, SPIN, 1.0)


def test_poincare_lagrange_orbit_keeps_inertia():
    law = poincare_law(-1.0)
    orbit = lagrange_orbit(law)
    assert abs(energy(orbit.state, law)) < 1e-12
    tight = IntegratorConfig(dt=1e-2, method="rkf45-adaptive", abs_tol=1e-13, rel_tol=1e-13)
    study = poincare_inertia_study(orbit.state, -1.0, T=5.0, config=tight)
    assert study.z_drift < 1e-9


def test_positive_energy_inertia_grows_quadratically():
    law = poincare_law(-1.0)
    orbit = lagrange_orbit(law)
    z, v = split(orbit.state)
    hot = make_state(z, 1.2 * v)
    study = poincare_inertia_study(hot, -1.0, T=2.0)
    assert study.energy > 0
    assert study.quadratic_coefficient == pytest.approx(3 * study.energy, rel=1e-6)
    js = study.to_json()
    assert js["predicted_t2_coefficient"] == pytest.approx(3 * study.energy)


def test_two_body_reduction_agrees_with_full_system():
    law = poincare_law(1.0)
    state = np.array([0, 1 + 0.2j, -1 - 0.2j, 0, 0.3j, -0.3j], complex)
    cfg = IntegratorConfig(dt=1e-2, method="rk4-fixed")
    red, full = two_body_reduce(state, law, 3.0, cfg)
    gap = np.abs(red.y[:, 0] - full.y[:, 1]).max()
    assert gap < 1e-10
    assert np.abs(full.y[:, 0]).max() < 1e-12


def test_two_body_reduction_requires_symmetry():
    with pytest.raises(ContractError):
        two_body_reduce(make_state(TRIANGLE, SPIN), poincare_law(1.0), 1.0)


# --- Calogero ------------------------------------------------------------


def test_calogero_conserves_and_stays_ordered():
    run = calogero_run([-1.0, 0.0, 1.5], [0.5, 0.0, -0.4], 20.0)
    assert run.ordered
    assert run.energy_drift < 1e-9
    assert run.momentum_drift < 1e-9


def test_calogero_energy_formula():
    y = np.array([0.0, 1.0, 3.0, 1.0, 0.0, -1.0])
    assert calogero_energy(y) == pytest.approx(1.0 + 1 + 1 / 9 + 1 / 4)


def test_calogero_scattering_permutes_velocities():
    vin, vout, gap = calogero_scattering([-1.0, 0.0, 1.0], [1.0, 0.0, -1.0], T=300.0)
    assert gap < 1e-3
    assert vin.sum() == pytest.approx(vout.sum(), abs=1e-9)


def test_calogero_backward_run():
    run = calogero_run([-1.0, 0.0, 1.0], [0.2, 0.0, -0.2], -5.0)
    assert run.t[-1] == pytest.approx(-5.0)
    assert run.ordered


@pytest.mark.parametrize(
    "x0,v0", [([0.0, 0.0, 1.0], [0, 0, 0]), ([1.0, 0.0], [0, 0]), ([0.0, 1.0], [0.0, 1.0, 2.0]), ([0.0], [0.0])]
)
def test_calogero_bad_input(x0, v0):
    with pytest.raises(ConfigurationError):
        calogero_run(x0, v0, 1.0)
