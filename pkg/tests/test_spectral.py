import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from integrability_lab import spectral as spc
from integrability_lab.errors import ConfigurationError, DivergenceError, DomainError
from integrability_lab.numerics import Grid1D, SampledField


def exact_burgers(x, t, eps=1.0):
    """Cole-Hopf image of the heat solution w = 1 + e^{-eps t} cos(x) / 2."""
    w = 1 + 0.5 * np.exp(-eps * t) * np.cos(x)
    return -0.5 * eps * np.exp(-eps * t) * np.sin(x) / w


class TestHeat:
    @pytest.mark.parametrize("k", [1, 3, 7])
    def test_single_mode_decay(self, k):
        g = Grid1D(64)
        u = spc.heat_solve(SampledField.from_function(g, lambda x: np.cos(k * x)), 0.3, 0.5)
        np.testing.assert_allclose(u.values, np.exp(-0.5 * k * k * 0.3) * np.cos(k * g.x), atol=1e-14)

    @given(st.floats(0, 1), st.floats(0, 1))
    def test_semigroup(self, s, t):
        u0 = spc.initial_field("bump", 64)
        a = spc.heat_solve(spc.heat_solve(u0, s), t)
        b = spc.heat_solve(u0, s + t)
        np.testing.assert_allclose(a.values, b.values, atol=1e-12)

    def test_negative_time(self):
        with pytest.raises(DomainError):
            spc.heat_solve(spc.initial_field("sin", 16), -0.1)


class TestBurgers:
    @pytest.mark.parametrize("eps", [1.0, 0.5])
    def test_matches_closed_form(self, eps):
        g = Grid1D(128)
        u0 = SampledField.from_function(g, lambda x: exact_burgers(x, 0.0, eps))
        u = spc.burgers_solve(u0, 0.7, eps)
        np.testing.assert_allclose(u.values, exact_burgers(g.x, 0.7, eps), atol=1e-12)

    def test_pipeline_agrees_with_direct_integration(self):
        u0 = spc.initial_field("half-sin", 256)
        gap = np.max(np.abs(spc.burgers_solve(u0, 0.5).values - spc.burgers_direct(u0, 0.5).values))
        assert gap < 1e-5

    @given(st.floats(0.05, 0.8), st.floats(0.1, 2.0))
    def test_mass_is_conserved(self, amp, t):
        g = Grid1D(64)
        u0 = SampledField.from_function(g, lambda x: amp * (np.sin(x) + 0.4 * np.cos(2 * x)))
        assert abs(spc.burgers_solve(u0, t).integral() - u0.integral()) < 1e-10

    def test_residual_is_small(self):
        assert spc.burgers_residual(spc.initial_field("half-sin", 128), 0.5) < 1e-6

    def test_unknown_initial_profile(self):
        with pytest.raises(ConfigurationError):
            spc.initial_field("square", 32)


class TestDispersion:
    def test_parse(self):
        spec = spc.parse_dispersion("ut - uxxx")
        assert spec.terms == {(1, 0): 1.0, (0, 3): -1.0}

    @pytest.mark.parametrize("bad", ["", "uxx", "u_q + ut", "ut = ", "ut -"])
    def test_parse_errors(self, bad):
        with pytest.raises(ConfigurationError):
            spc.parse_dispersion(bad)

    def test_airy(self):
        ks = np.linspace(0.5, 2.0, 7)
        res = spc.dispersion_relation(spc.parse_dispersion("ut - uxxx"), ks)
        np.testing.assert_allclose(res.omega[:, 0].real, ks**3, atol=1e-12)
        np.testing.assert_allclose(res.omega_dd[:, 0].real, 6 * ks, atol=1e-6)
        assert res.dispersive

    @pytest.mark.parametrize("eq, slopes", [("ut + 2*ux", [2.0]), ("ut - 1.5*ux", [-1.5]), ("utt = uxx", [-1.0, 1.0])])
    def test_non_dispersive(self, eq, slopes):
        ks = np.linspace(0.5, 2.0, 7)
        res = spc.dispersion_relation(spc.parse_dispersion(eq), ks)
        assert not res.dispersive
        got = sorted(float(np.mean(res.omega[:, j].real / ks)) for j in range(res.omega.shape[1]))
        np.testing.assert_allclose(got, slopes, atol=1e-10)
        assert np.max(np.abs(res.omega_dd)) < 1e-6

    def test_diffusion_is_not_dispersive(self):
        res = spc.dispersion_relation(spc.parse_dispersion("ut - uxx"), np.linspace(0.5, 2, 5))
        np.testing.assert_allclose(res.omega[:, 0], -1j * np.linspace(0.5, 2, 5) ** 2, atol=1e-12)
        assert not res.dispersive

    def test_branch_crossing_warns(self):
        with pytest.warns(spc.BranchCrossingWarning):
            spc.dispersion_relation(spc.parse_dispersion("utt = uxx"), np.linspace(-1, 1, 5))

    def test_two_dimensional_hessian(self):
        H, det = spc.dispersion_hessian(spc.parse_dispersion("ut - uxxx - uyyy"), [1.0, 2.0])
        np.testing.assert_allclose(H.real, [[6.0, 0.0], [0.0, 12.0]], atol=1e-6)
        assert det.real == pytest.approx(72.0, rel=1e-6)

    def test_json(self):
        res = spc.dispersion_relation(spc.parse_dispersion("ut - uxxx"), [1.0, 2.0])
        assert res.to_json()["verdict"] == "dispersive"


class TestResidualHarness:
    def test_kdv_soliton_converges_at_fourth_order(self):
        rep = spc.pde_residual(spc.kdv_spec(), spc.kdv_soliton(1.0))
        assert min(rep.ratios) >= 12

    @pytest.mark.parametrize("eta", [0.8, 1.0, 1.3])
    def test_nls_soliton(self, eta):
        rep = spc.pde_residual(spc.nls_spec(1), spc.nls_soliton(eta))
        assert min(rep.ratios) >= 12

    def test_wrong_speed_does_not_converge(self):
        wrong = lambda x, t: 2 / np.cosh(x + 3 * t) ** 2  # noqa: E731
        rep = spc.pde_residual(spc.kdv_spec(), wrong)
        assert rep.max_residual > 0.1 and max(rep.ratios) < 2

    def test_other_sign_rejects_the_soliton(self):
        assert spc.pde_residual(spc.nls_spec(-1), spc.nls_soliton(1.0)).max_residual > 1

    def test_polynomial_spec(self):
        spec = spc.PDESpec.from_polynomial("u2")
        heat = lambda x, t: np.exp(-t) * np.sin(x)  # noqa: E731
        assert spc.pde_residual(spec, heat).max_residual < 1e-6

    def test_polynomial_spec_rejects_x(self):
        with pytest.raises(DomainError):
            spc.PDESpec.from_polynomial("x*u1")


class TestJost:
    def test_zero_potential(self):
        prob = spc.JostProblem(lambda x: np.zeros_like(np.asarray(x, float)), (-1.0, 1.0), 1.0)
        assert np.all(spc.jost_solve(prob).phi == 1.0)

    @pytest.mark.parametrize("convention", ["exponential", "oscillatory"])
    @pytest.mark.parametrize("amp, k", [(-0.1, 1.0), (0.2, 0.7), (0.05, 2.0)])
    def test_square_well_matches_shooting(self, convention, amp, k):
        prob = spc.JostProblem(spc.square_well(amp), (-1.0, 1.0), k, convention=convention)
        sol = spc.jost_solve(prob)
        assert np.max(np.abs(sol.phi - spc.jost_ode_oracle(prob, sol.x))) < 1e-8

    def test_sweeps_contract_geometrically(self):
        prob = spc.JostProblem(spc.square_well(-0.1), (-1.0, 1.0), 1.0)
        sol = spc.jost_solve(prob)
        g = [v for v in sol.gaps if v > 1e-14]
        assert all(b <= sol.contraction_bound * a for a, b in zip(g, g[1:]))

    def test_outside_support(self):
        assert spc.jost_solve(spc.JostProblem(spc.square_well(0.1), (-1.0, 1.0), 1.0)).phi[-1] == pytest.approx(1.0)

    def test_large_potential_diverges(self):
        with pytest.raises(DivergenceError):
            spc.jost_solve(spc.JostProblem(spc.square_well(-5.0), (-1.0, 1.0), 0.5))

    def test_potential_must_vanish_outside(self):
        with pytest.raises(DomainError):
            spc.JostProblem(lambda x: np.ones_like(np.asarray(x, float)), (-1.0, 1.0), 1.0)

    @pytest.mark.parametrize("kwargs", [{"k": 0.0}, {"convention": "other"}])
    def test_bad_parameters(self, kwargs):
        args = {"u": spc.square_well(0.1), "support": (-1.0, 1.0), "k": 1.0, **kwargs}
        with pytest.raises(ConfigurationError):
            spc.JostProblem(**args)
