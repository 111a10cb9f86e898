import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torusrd import pde
from torusrd.errors import DivergentTail, StepUnderflow


def sq(u):
    return u * u


def zero(u):
    return np.zeros_like(u)


class TestRhs:
    def test_single_spike(self):
        assert np.array_equal(pde.rhs(np.array([1.0, 0, 0, 0]), 4, zero),
                              [-32.0, 16.0, 0.0, 16.0])

    def test_constant_state(self):
        u = np.full(8, 3.0)
        assert np.allclose(pde.rhs(u, 8, sq), 9.0, rtol=0, atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-10, 10), min_size=2, max_size=32))
    def test_laplacian_telescopes(self, vals):
        u = np.array(vals)
        assert pde.rhs(u, len(u), zero).sum() == pytest.approx(0.0, abs=1e-7 * len(u))

    def test_matches_roll_formula(self):
        u = np.random.default_rng(1).random(13)
        ref = 169.0 * (np.roll(u, -1) + np.roll(u, 1) - 2 * u) + sq(u)
        assert np.array_equal(pde.rhs(u, 13, sq), ref)


class TestIntegrate:
    def test_constant_data_matches_scalar_ode(self):
        # u' = u^2 with u(0)=1 has u(t) = 1/(1-t)
        _, traj, bu = pde.integrate(np.ones(8), sq, 0.5, sample_times=[0.25, 0.5])
        assert bu is None
        assert np.allclose(traj[0], 1.0 / 0.75, rtol=1e-6, atol=0)
        assert np.allclose(traj[1], 2.0, rtol=1e-6, atol=0)

    def test_heat_mode_decay_rate(self):
        # slowest Fourier mode decays at lambda_N = 4 N^2 sin^2(pi/N)
        n = 64
        u0 = 1.0 + np.sin(2 * np.pi * np.arange(n) / n)
        lam = 4.0 * n * n * math.sin(math.pi / n) ** 2
        t1 = 0.02
        _, traj, _ = pde.integrate(u0, zero, t1, sample_times=[t1])
        amp = 0.5 * (traj[-1].max() - traj[-1].min())
        fitted = -math.log(amp) / t1
        assert abs(fitted - lam) <= 0.01 * lam

    def test_positivity_preserved(self):
        n = 16
        u0 = np.abs(np.sin(2 * np.pi * np.arange(n) / n))
        _, traj, _ = pde.integrate(u0, sq, 0.02, sample_times=[0.02])
        assert traj[-1].min() >= 0.0

    def test_cap_stop_reports_blowup(self):
        _, _, bu = pde.integrate(np.ones(8), sq, 10.0, u_cap=1e3)
        assert bu is not None
        assert bu.t_est >= bu.t_stop
        assert abs(bu.t_est - 1.0) <= 1e-3

    def test_step_underflow_on_impossible_tolerance(self):
        # a spike makes the half-step discrepancy genuinely nonzero, so an
        # unreachable tolerance must halve dt through the floor
        u0 = np.array([1.0, 0.0, 0.0, 0.0])
        with pytest.raises(StepUnderflow):
            pde.integrate(u0, sq, 0.5, rel_tol=1e-30, dt_floor=1e-3)

    def test_sample_time_validation(self):
        with pytest.raises(ValueError):
            pde.integrate(np.ones(4), zero, 1.0, sample_times=[2.0])


class TestTailIntegral:
    def test_inverse_square(self):
        assert pde.tail_integral(sq, 1.0) == pytest.approx(1.0, rel=1e-9)

    def test_inverse_cube(self):
        assert pde.tail_integral(lambda s: s ** 3, 2.0) == pytest.approx(0.125, rel=1e-9)

    def test_linear_divergence(self):
        with pytest.raises(DivergentTail):
            pde.tail_integral(lambda s: s, 1.0)

    def test_nonpositive_lower_limit_rejected(self):
        with pytest.raises(ValueError):
            pde.tail_integral(sq, 0.0)


class TestBlowupUpperBound:
    def test_unit_mass(self):
        assert pde.blowup_upper_bound(lambda x: np.ones_like(x), sq) == \
            pytest.approx(1.0, rel=1e-9)

    def test_double_mass(self):
        assert pde.blowup_upper_bound(lambda x: 2.0 * np.ones_like(x), sq) == \
            pytest.approx(0.5, rel=1e-9)

    def test_sine_squared_profile(self):
        phi = lambda x: 1.0 + np.sin(np.pi * np.asarray(x)) ** 2  # L1 mass 3/2
        assert pde.blowup_upper_bound(phi, sq) == pytest.approx(2.0 / 3.0, rel=1e-8)


class TestBlowupTime:
    def test_constant_data(self):
        est = pde.blowup_time(np.ones(16), sq)
        assert abs(est.t_est - 1.0) <= 1e-3


def error_system(n, c_star):
    """f for the comparison system w' = N^2 Lap w + C*(|w| + N^-2)."""
    return lambda w, c=c_star, n2=n * n: c * (np.abs(w) + 1.0 / n2)


class TestSupersolution:
    def test_exponential_supersolution_certified(self):
        for c_star in (1.0, 5.0):
            n = 16
            times = np.arange(0.0, 0.02, 1e-4)
            z = np.exp(2.0 * c_star * times)[:, None] / n ** 2 * np.ones(n)
            report = pde.check_supersolution(z, times, c_star, n)
            assert report.min_residual >= -1e-6
            assert report.is_supersolution(1e-6)

    def test_zero_is_not_a_supersolution(self):
        n = 8
        times = np.arange(0.0, 0.01, 1e-4)
        z = np.zeros((len(times), n))
        report = pde.check_supersolution(z, times, 2.0, n)
        assert report.min_residual == pytest.approx(-2.0 / n ** 2)
        assert not report.is_supersolution(1e-9)

    def test_true_solution_has_near_zero_residual(self):
        n, c_star = 8, 1.0
        times = np.linspace(0.0, 0.05, 51)
        w0 = np.zeros(n)
        _, traj, _ = pde.integrate(w0, error_system(n, c_star), 0.05,
                                   sample_times=times)
        report = pde.check_supersolution(traj, times, c_star, n)
        assert abs(report.min_residual) <= 1e-4

    def test_nonuniform_grid_rejected(self):
        with pytest.raises(ValueError):
            pde.check_supersolution(np.zeros((3, 4)), np.array([0.0, 0.1, 0.3]), 1.0, 4)


class TestComparisonOrdering:
    @pytest.mark.parametrize("n", [8, 16, 32])
    @pytest.mark.parametrize("c_star", [1.0, 5.0])
    def test_error_system_below_exponential_supersolution(self, n, c_star):
        viol = []

        def on_step(t, w):
            z = math.exp(2.0 * c_star * t) / n ** 2
            if float(w.max()) > z:
                viol.append(t)

        pde.integrate(np.zeros(n), error_system(n, c_star), 0.5, on_step=on_step)
        assert not viol


class TestConvergenceOrder:
    def test_second_order_against_refined_reference(self):
        f = lambda u: u * (1.0 - u)
        errs = []
        ns = [8, 16, 32]
        for n in ns:
            phi = lambda x: 1.0 + 0.5 * np.sin(np.pi * np.asarray(x)) ** 2
            _, traj, _ = pde.integrate(phi(np.arange(n) / n), f, 0.5)
            _, ref, _ = pde.integrate(phi(np.arange(4 * n) / (4 * n)), f, 0.5)
            errs.append(float(np.abs(traj[-1] - ref[-1][::4]).max()))
        slope = np.polyfit(np.log(ns), np.log(errs), 1)[0]
        assert -2.3 <= slope <= -1.7

    def test_constant_data_is_grid_independent(self):
        for n in (8, 32):
            _, traj, _ = pde.integrate(np.ones(n), sq, 0.5)
            assert np.allclose(traj[-1], 2.0, rtol=1e-6, atol=0)
