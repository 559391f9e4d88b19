"""Adaptive integrator: accuracy, dense output, variational runs, guards."""

import math

import numpy as np
import pytest

from floquet_allee import (DEFAULT_SETTINGS, IntegrationError,
                           IntegratorSettings, MaxStepsExceeded, Solution,
                           StepUnderflow, integrate, integrate_pred_axis,
                           integrate_prey_axis, integrate_variational,
                           invariant_box, quadrature_along, solve,
                           write_trajectory_csv)


def _exp_sin_rhs(t, y):
    # y' = y cos t, solution y(t) = y0 exp(sin t): smooth and nonlinear in t.
    return y * math.cos(t)


class TestSolve:

    def test_scalar_accuracy(self):
        sol = solve(_exp_sin_rhs, 0.0, [1.0], 10.0, DEFAULT_SETTINGS)
        want = math.exp(math.sin(10.0))
        assert sol.y_end[0] == pytest.approx(want, rel=1e-9)

    def test_order_five_convergence(self):
        # Fixed-step global error of the fifth-order pair scales like h^5.
        errors, steps = [], [0.2, 0.1, 0.05, 0.025]
        for h in steps:
            s = IntegratorSettings(fixed_step=h)
            sol = solve(_exp_sin_rhs, 0.0, [1.0], 8.0, s)
            errors.append(abs(sol.y_end[0] - math.exp(math.sin(8.0))))
        slope = np.polyfit(np.log(steps), np.log(errors), 1)[0]
        assert slope == pytest.approx(5.0, abs=0.3)

    def test_backward_returns_to_start(self):
        def rhs(t, y):
            return np.array([y[1], -y[0] + 0.1 * math.sin(t)])

        x0 = np.array([1.0, -0.5])
        fwd = solve(rhs, 0.0, x0, 12.0, DEFAULT_SETTINGS)
        back = solve(rhs, 12.0, fwd.y_end, 0.0, DEFAULT_SETTINGS)
        assert np.allclose(back.y_end, x0, rtol=0.0, atol=1e-8)

    def test_zero_span_single_row(self):
        sol = solve(_exp_sin_rhs, 3.0, [2.0], 3.0, DEFAULT_SETTINGS)
        assert sol.t.shape == (1,)
        assert sol.y_end[0] == 2.0

    def test_dense_output_matches_direct(self):
        sol = solve(_exp_sin_rhs, 0.0, [1.0], 10.0, DEFAULT_SETTINGS,
                    dense=True)
        for t in (0.1, 2.7, 5.5, 9.9):
            direct = solve(_exp_sin_rhs, 0.0, [1.0], t, DEFAULT_SETTINGS)
            assert sol.at(t)[0] == pytest.approx(direct.y_end[0], rel=1e-8)

    def test_dense_requires_flag(self):
        sol = solve(_exp_sin_rhs, 0.0, [1.0], 1.0, DEFAULT_SETTINGS)
        with pytest.raises(ValueError, match="dense"):
            sol.at(0.5)

    def test_t_eval_sampling(self):
        marks = np.linspace(0.0, 10.0, 21)
        sol = solve(_exp_sin_rhs, 0.0, [1.0], 10.0, DEFAULT_SETTINGS,
                    t_eval=marks)
        assert np.array_equal(sol.t_eval, marks)
        want = np.exp(np.sin(marks))
        assert np.allclose(sol.y_eval[:, 0], want, rtol=1e-8)

    def test_t_eval_must_follow_direction(self):
        with pytest.raises(ValueError):
            solve(_exp_sin_rhs, 0.0, [1.0], 10.0, DEFAULT_SETTINGS,
                  t_eval=[5.0, 1.0])
        with pytest.raises(ValueError):
            solve(_exp_sin_rhs, 0.0, [1.0], 10.0, DEFAULT_SETTINGS,
                  t_eval=[1.0, 20.0])

    def test_nonneg_clamps_component(self):
        # y' = -3 with a nonnegativity clamp parks the state at zero.
        sol = solve(lambda t, y: np.array([-3.0]), 0.0, [1.0], 5.0,
                    DEFAULT_SETTINGS, nonneg=(0,))
        assert sol.y_end[0] == 0.0
        assert np.all(sol.y[:, 0] >= 0.0)

    def test_step_underflow_at_singularity(self):
        with pytest.raises(StepUnderflow):
            solve(lambda t, y: y / (1.0 - t), 0.0, [1.0], 2.0,
                  DEFAULT_SETTINGS)

    def test_non_finite_rhs_rejected(self):
        def rhs(t, y):
            return np.array([math.nan if t > 0.5 else 1.0])

        with pytest.raises(IntegrationError):
            solve(rhs, 0.0, [1.0], 1.0, DEFAULT_SETTINGS)

    def test_max_steps_budget(self):
        s = IntegratorSettings(max_steps=10)
        with pytest.raises(MaxStepsExceeded):
            solve(_exp_sin_rhs, 0.0, [1.0], 100.0, s)

    def test_settings_validation(self):
        with pytest.raises(ValueError):
            IntegratorSettings(rel_tol=0.0)
        with pytest.raises(ValueError):
            IntegratorSettings(fixed_step=-1.0)


class TestModelIntegration:

    def test_populations_stay_nonnegative(self, small_model):
        sol = integrate(small_model, (0.05, 2.5), 0.0, 40.0,
                        DEFAULT_SETTINGS)
        assert np.all(sol.y >= 0.0)

    def test_seasonality_resolved_by_max_step(self, small_model):
        sol = integrate(small_model, (0.6, 0.2), 0.0, small_model.period,
                        DEFAULT_SETTINGS)
        # max_step defaults to period/50: at least 50 accepted steps.
        assert sol.n_accepted >= 50

    def test_prey_axis_matches_planar(self, table1):
        run = integrate_prey_axis(table1, 0.5, 0.0, 200.0, DEFAULT_SETTINGS)
        sol = integrate(table1, (0.5, 0.0), 0.0, 200.0, DEFAULT_SETTINGS)
        assert run.value == pytest.approx(sol.y_end[0], rel=1e-9)
        assert sol.y_end[1] == 0.0

    def test_prey_axis_derivative_is_flow_derivative(self, table1):
        h = 1e-6
        up = integrate_prey_axis(table1, 0.5 + h, 0.0, 150.0, DEFAULT_SETTINGS)
        dn = integrate_prey_axis(table1, 0.5 - h, 0.0, 150.0, DEFAULT_SETTINGS)
        mid = integrate_prey_axis(table1, 0.5, 0.0, 150.0, DEFAULT_SETTINGS)
        fd = (up.value - dn.value) / (2.0 * h)
        assert mid.derivative == pytest.approx(fd, rel=1e-5)

    def test_pred_axis_negative_start_rejected(self, table2):
        with pytest.raises(IntegrationError, match="nonnegative"):
            integrate_pred_axis(table2, -0.1, 0.0, 10.0, DEFAULT_SETTINGS)

    def test_variational_liouville(self, table1):
        rng = np.random.default_rng(23)
        box = invariant_box(table1)
        for _ in range(5):
            x0 = rng.uniform((1e-3, 1e-3), box)
            tau = rng.uniform(5.0, 40.0)
            run = integrate_variational(table1, x0, 0.0, tau,
                                        DEFAULT_SETTINGS)
            det = float(np.linalg.det(run.matrix))
            want = math.exp(run.trace_integral)
            assert det == pytest.approx(want, rel=1e-7)

    def test_variational_matrix_is_flow_derivative(self, small_model):
        x0 = np.array([0.6, 0.3])
        run = integrate_variational(small_model, x0, 0.0,
                                    small_model.period, DEFAULT_SETTINGS)
        for j in range(2):
            h = 1e-6
            xp, xm = x0.copy(), x0.copy()
            xp[j] += h
            xm[j] -= h
            up = integrate(small_model, xp, 0.0, small_model.period,
                           DEFAULT_SETTINGS)
            dn = integrate(small_model, xm, 0.0, small_model.period,
                           DEFAULT_SETTINGS)
            fd = (up.y_end - dn.y_end) / (2.0 * h)
            assert np.allclose(run.matrix[:, j], fd, rtol=1e-4, atol=1e-8)

    def test_quadrature_along(self):
        sol = solve(_exp_sin_rhs, 0.0, [1.0], 6.0, DEFAULT_SETTINGS,
                    dense=True)
        # integral of y(t) dt with y = exp(sin t), reference by quadrature
        # of the closed form on a fine grid.
        from scipy.integrate import quad

        want = quad(lambda t: math.exp(math.sin(t)), 0.0, 6.0,
                    epsabs=1e-12, epsrel=1e-12)[0]
        got = quadrature_along(sol.dense, lambda t, y: y[0])
        assert got == pytest.approx(want, rel=1e-9)


class TestTrajectoryCsv:

    def test_round_trip(self, tmp_path, small_model):
        marks = np.linspace(0.0, 4.0, 9)
        sol = integrate(small_model, (0.5, 0.4), 0.0, 4.0, DEFAULT_SETTINGS,
                        t_eval=marks)
        path = tmp_path / "traj.csv"
        write_trajectory_csv(path, sol.t_eval, sol.y_eval)
        data = np.genfromtxt(path, delimiter=",", names=True)
        assert list(data.dtype.names) == ["t", "N", "P"]
        assert np.array_equal(data["t"], marks)
        assert np.array_equal(data["N"], sol.y_eval[:, 0])
        assert np.array_equal(data["P"], sol.y_eval[:, 1])
