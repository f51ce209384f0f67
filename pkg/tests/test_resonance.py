import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy import special

from integrability_lab import resonance as rs
from integrability_lab.errors import ConfigurationError, DegeneracyError, DomainError
from integrability_lab.symmetry import DynamicalSystem, is_conservation_law


class TestEllipticFunctions:
    @given(st.floats(-20, 20), st.floats(0, 0.999))
    def test_jacobi_matches_scipy(self, u, m):
        ref = special.ellipj(u, m)[:3]
        np.testing.assert_allclose(rs.jacobi(u, m), ref, atol=1e-13)

    @given(st.floats(-20, 20), st.floats(0, 0.999))
    def test_identities(self, u, m):
        sn, cn, dn = rs.jacobi(u, m)
        assert abs(sn * sn + cn * cn - 1) < 1e-12
        assert abs(dn * dn + m * sn * sn - 1) < 1e-12

    def test_vectorised(self):
        u = np.linspace(-3, 3, 11)
        sn, cn, dn = rs.jacobi(u, 0.4)
        assert sn.shape == u.shape

    def test_special_values(self):
        K = rs.ellipk(0.5)
        assert K == pytest.approx(1.8540746773013719, abs=1e-15)
        sn, cn, dn = rs.jacobi(K, 0.5)
        assert (sn, dn) == (pytest.approx(1.0, abs=1e-14), pytest.approx(math.sqrt(0.5), abs=1e-14))
        assert abs(cn) < 1e-14
        np.testing.assert_allclose(rs.jacobi(0.7, 0.0), (math.sin(0.7), math.cos(0.7), 1.0), atol=1e-15)

    @given(st.floats(0, 0.9999))
    def test_complete_integral(self, m):
        assert rs.ellipk(m) == pytest.approx(special.ellipk(m), rel=1e-14)

    @given(st.floats(-10, 10), st.floats(0, 0.99))
    def test_incomplete_integral(self, phi, m):
        assert rs.ellipf(phi, m) == pytest.approx(special.ellipkinc(phi, m), rel=1e-12, abs=1e-14)

    @given(st.floats(0.01, 5), st.floats(0.01, 5), st.floats(0.01, 5))
    def test_carlson(self, x, y, z):
        assert rs.carlson_rf(x, y, z) == pytest.approx(special.elliprf(x, y, z), rel=1e-13)

    def test_agm(self):
        assert rs.agm(1.0, math.sqrt(2)) == pytest.approx(1.1981402347355922, abs=1e-15)

    @pytest.mark.parametrize("m", [-0.1, 1.0, 2.0])
    def test_modulus_domain(self, m):
        with pytest.raises(DomainError):
            rs.ellipk(m)


PLANETARY = rs.TriadSystem.planetary((1, 2, 3))


class TestTriad:
    def test_energy_and_enstrophy(self):
        assert rs.triad_invariants(PLANETARY, (1, 1, 1)) == (6.0, 14.0)

    def test_couplings(self):
        np.testing.assert_allclose(PLANETARY.couplings, (-1.0, 1.0, -1 / 3))
        np.testing.assert_allclose(rs.triad_rhs(PLANETARY, (1, 1, 1)), (-1.0, 1.0, -1 / 3))

    def test_invariants_are_exact_conservation_laws(self):
        for system in (PLANETARY, rs.TriadSystem.generic((1, 2, -3))):
            flow = DynamicalSystem(rs.triad_field(system))
            assert all(is_conservation_law(flow, F).conserved for F in rs.triad_symbolic_invariants(system))

    def test_rk4_drift(self):
        traj = rs.triad_run(PLANETARY, (1.0, 1.0, 1.0), 20.0)
        inv = np.array([rs.triad_invariants(PLANETARY, y) for y in traj.y])
        assert np.max(np.abs(inv - inv[0])) < 1e-9

    def test_generic_closed_form_values(self):
        p = rs.closed_form(rs.TriadSystem.generic((1, 1, -1)), (0.6, 0.8, 0.0))
        assert p.m == pytest.approx(0.5625)
        assert p.t0 == pytest.approx(1.25)
        assert p.lam == pytest.approx(0.0, abs=1e-15)
        np.testing.assert_allclose(p.b, (0.6, 0.8, -0.6))

    @given(
        st.lists(st.floats(-1, 1), min_size=3, max_size=3),
        st.lists(st.floats(0.3, 3), min_size=3, max_size=3),
        st.integers(0, 2),
    )
    def test_closed_form_matches_integration(self, a0, mags, flip):
        c = np.array(mags)
        c[flip] *= -1
        system = rs.TriadSystem.generic(c)
        try:
            p = rs.closed_form(system, a0)
        except DegeneracyError:
            assume(False)
        assume(p.m < 0.999 and p.period < 60)
        np.testing.assert_allclose(p.evaluate(0.0), a0, atol=1e-12)
        traj = rs.triad_run(system, a0, p.period, dt=2e-3)
        assert np.max(np.abs(p.evaluate(traj.t) - traj.y.T)) < 1e-6

    def test_closed_form_is_periodic(self):
        p = rs.closed_form(PLANETARY, (0.3, -0.5, 0.9))
        np.testing.assert_allclose(p.evaluate(p.period), p.evaluate(0.0), atol=1e-12)

    def test_same_sign_couplings(self):
        with pytest.raises(DegeneracyError):
            rs.closed_form(rs.TriadSystem.generic((1, 2, 3)), (1, 1, 1))

    def test_equilibrium(self):
        with pytest.raises(DegeneracyError):
            rs.closed_form(rs.TriadSystem.generic((1, 1, -1)), (1.0, 0.0, 0.0))

    @pytest.mark.parametrize("bad", [(1, 2), (0, 1, 2)])
    def test_invalid_planetary(self, bad):
        with pytest.raises(ConfigurationError):
            rs.TriadSystem.planetary(bad)


class TestQuartet:
    def test_invariants_drift(self):
        q = rs.QuartetSystem((1.0, -0.5, 2.0, 1.5))
        traj = rs.quartet_run(q, (0.7, -0.4, 0.5, 0.9), 5.0)
        inv = np.array([rs.quartet_invariants(q, y) for y in traj.y])
        assert np.max(np.abs(inv - inv[0])) < 1e-9

    @given(st.lists(st.fractions(-3, 3, max_denominator=4).filter(bool), min_size=4, max_size=4))
    def test_rate_identity(self, c):
        assert rs.quartet_rate_identity(rs.QuartetSystem(tuple(c)))

    def test_zero_coupling(self):
        with pytest.raises(ConfigurationError):
            rs.QuartetSystem((1.0, 0.0, 1.0, 1.0))


@pytest.mark.parametrize("f", ["y^3 - y", "y^2", "2*y + 1", "y^4 - 3*y"])
def test_one_dimensional_symmetries_are_trivial(f):
    assert rs.reduced_symmetries_trivial(f)
