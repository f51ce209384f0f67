import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate as sp_integrate

from integrability_lab.errors import ConfigurationError, ConfigError
from integrability_lab.numerics import (
    Grid1D,
    IntegratorConfig,
    SampledField,
    bracketed_newton,
    central_stencil,
    dft,
    fd_callable,
    fd_derivative,
    fornberg_weights,
    idft,
    integrate,
    quadrature,
    rk4_step,
    rkf45_step,
    sign_change_brackets,
    spectral_derivative,
)


class TestGridAndConfig:
    def test_grid_spacing_and_points(self):
        g = Grid1D(16)
        assert g.h == pytest.approx(2 * math.pi / 16)
        assert g.x[0] == 0.0 and len(g.x) == 16

    @pytest.mark.parametrize("n", [4, 7.5])
    def test_grid_rejects_small_or_fractional(self, n):
        with pytest.raises(ConfigurationError):
            Grid1D(n)

    def test_grid_rejects_empty_interval(self):
        with pytest.raises(ConfigurationError):
            Grid1D(16, 1.0, 1.0)

    @pytest.mark.parametrize(
        "kwargs", [{"dt": 0}, {"abs_tol": 0}, {"rel_tol": -1}, {"method": "euler"}]
    )
    def test_config_validation(self, kwargs):
        with pytest.raises(ConfigError):
            IntegratorConfig(**kwargs)

    def test_wavenumbers_are_integers_on_two_pi(self):
        k = Grid1D(8).wavenumbers()
        np.testing.assert_array_equal(k, [0, 1, 2, 3, -4, -3, -2, -1])


class TestFourier:
    @given(st.lists(st.floats(-10, 10), min_size=16, max_size=16))
    def test_dft_round_trip(self, values):
        f = SampledField(Grid1D(16), np.array(values))
        _, c = dft(f)
        back = idft(c, f.grid)
        np.testing.assert_allclose(back.values.real, values, atol=1e-12)

    def test_dft_of_single_mode(self):
        g = Grid1D(32)
        k, c = dft(SampledField.from_function(g, lambda x: np.exp(3j * x)))
        assert c[list(k).index(3)] == pytest.approx(1.0)
        assert np.sum(np.abs(c)) == pytest.approx(1.0)

    def test_odd_grid_is_rejected(self):
        with pytest.raises(ConfigurationError):
            dft(SampledField(Grid1D(9), np.zeros(9)))

    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_spectral_derivative_of_trig(self, order):
        g = Grid1D(64)
        f = SampledField.from_function(g, lambda x: np.sin(3 * x))
        want = [3 * np.cos(3 * g.x), -9 * np.sin(3 * g.x), -27 * np.cos(3 * g.x)][order - 1]
        np.testing.assert_allclose(spectral_derivative(f, order).values, want, atol=1e-11)

    def test_nyquist_mode_is_dropped(self):
        g = Grid1D(16)
        f = SampledField.from_function(g, lambda x: np.cos(8 * x))
        np.testing.assert_allclose(spectral_derivative(f).values, 0.0, atol=1e-14)

    def test_real_input_stays_real(self):
        f = SampledField.from_function(Grid1D(16), np.sin)
        assert not np.iscomplexobj(spectral_derivative(f).values)


class TestFiniteDifferences:
    def test_three_point_second_derivative(self):
        np.testing.assert_allclose(fornberg_weights(2, [-1, 0, 1]), [1, -2, 1])

    def test_five_point_first_derivative(self):
        np.testing.assert_allclose(
            fornberg_weights(1, [-2, -1, 0, 1, 2]), [1 / 12, -2 / 3, 0, 2 / 3, -1 / 12], atol=1e-15
        )

    @given(st.integers(1, 4), st.sampled_from([2, 4, 6, 8]))
    def test_weights_annihilate_constants_and_reproduce_monomial(self, order, acc):
        offsets, w = central_stencil(order, acc)
        assert abs(np.sum(w)) < 1e-10
        # exact on x^order: sum w_j j^order = order!
        assert np.dot(w, offsets.astype(float) ** order) == pytest.approx(math.factorial(order))

    @pytest.mark.parametrize("acc", [2, 4, 6])
    def test_convergence_order_on_periodic_grid(self, acc):
        errs = []
        for n in (32, 64):
            g = Grid1D(n)
            f = SampledField.from_function(g, np.sin)
            errs.append(np.max(np.abs(fd_derivative(f, 1, acc).values - np.cos(g.x))))
        assert math.log2(errs[0] / errs[1]) == pytest.approx(acc, abs=0.3)

    def test_callable_difference(self):
        x = np.linspace(0, 1, 5)
        np.testing.assert_allclose(fd_callable(np.exp, x, 2, 8, 1e-2), np.exp(x), rtol=1e-10)

    @pytest.mark.parametrize("order, acc", [(0, 2), (1, 3), (1, 0)])
    def test_bad_stencil_requests(self, order, acc):
        with pytest.raises(ConfigurationError):
            central_stencil(order, acc)


class TestRungeKutta:
    def test_rk4_fourth_order(self):
        def err(dt):
            y = np.array([1.0])
            for i in range(int(round(1 / dt))):
                y = rk4_step(lambda t, v: v, y, dt, i * dt)
            return abs(y[0] - math.e)

        assert err(0.1) / err(0.05) == pytest.approx(16, rel=0.1)

    def test_rkf45_step_error_estimate_is_small_for_small_steps(self):
        y, e = rkf45_step(lambda t, v: -v, np.array([1.0]), 1e-2)
        assert abs(y[0] - math.exp(-1e-2)) < 1e-12
        assert np.max(np.abs(e)) < 1e-10

    @pytest.mark.parametrize("method", ["rk4-fixed", "rkf45-adaptive"])
    def test_harmonic_oscillator(self, method):
        cfg = IntegratorConfig(dt=1e-2, method=method, abs_tol=1e-12, rel_tol=1e-12)
        tr = integrate(lambda t, y: np.array([y[1], -y[0]]), [1.0, 0.0], 0.0, 2 * math.pi, cfg)
        np.testing.assert_allclose(tr.final, [1.0, 0.0], atol=1e-8)
        assert tr.t[-1] == pytest.approx(2 * math.pi)

    def test_complex_state_and_backward_time(self):
        cfg = IntegratorConfig(dt=1e-2, method="rkf45-adaptive", abs_tol=1e-12, rel_tol=1e-12)
        tr = integrate(lambda t, y: 1j * y, np.array([1 + 0j]), 0.0, -1.0, cfg)
        assert abs(tr.final[0] - np.exp(-1j)) < 1e-10

    def test_against_scipy(self):
        rhs = lambda t, y: np.array([y[1], -math.sin(y[0])])  # noqa: E731
        cfg = IntegratorConfig(dt=1e-2, method="rkf45-adaptive", abs_tol=1e-11, rel_tol=1e-11)
        ours = integrate(rhs, [1.0, 0.0], 0.0, 5.0, cfg).final
        ref = sp_integrate.solve_ivp(rhs, (0, 5), [1.0, 0.0], rtol=1e-12, atol=1e-12, method="DOP853").y[:, -1]
        np.testing.assert_allclose(ours, ref, atol=1e-8)


class TestQuadratureAndRoots:
    @pytest.mark.parametrize(
        "f, a, b, want",
        [
            (math.sin, 0.0, math.pi, 2.0),
            (lambda x: 1 / math.sqrt(x), 0.0, 1.0, 2.0),
            (lambda x: 1 / math.sqrt(1 - x * x), 0.0, 1.0, math.pi / 2),
            (math.exp, 1.0, 0.0, 1 - math.e),
        ],
    )
    def test_known_integrals(self, f, a, b, want):
        assert quadrature(f, a, b, tol=1e-11) == pytest.approx(want, abs=1e-8)

    @given(st.lists(st.floats(-3, 3), min_size=1, max_size=6), st.floats(-2, 2), st.floats(0.1, 3))
    def test_matches_scipy_on_polynomials(self, coeffs, a, width):
        p = np.polynomial.Polynomial(coeffs)
        ref = sp_integrate.quad(p, a, a + width)[0]
        assert quadrature(p, a, a + width, tol=1e-12) == pytest.approx(ref, abs=1e-9)

    def test_newton_square_root(self):
        r = bracketed_newton(lambda x: x * x - 2, lambda x: 2 * x, 0.0, 2.0)
        assert r == pytest.approx(math.sqrt(2), abs=1e-15)

    def test_newton_without_derivative(self):
        assert bracketed_newton(math.cos, None, 0.0, 3.0) == pytest.approx(math.pi / 2, abs=1e-14)

    def test_unbracketed_interval(self):
        with pytest.raises(ConfigurationError):
            bracketed_newton(lambda x: x * x + 1, None, -1.0, 1.0)

    def test_sign_change_scan(self):
        br = sign_change_brackets(np.sin, 0.5, 10.0, 100)
        assert len(br) == 3
        for lo, hi in br:
            assert np.sin(lo) * np.sin(hi) <= 0
