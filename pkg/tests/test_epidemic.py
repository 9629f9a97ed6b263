import numpy as np
import pytest
import scipy.integrate

from graphonctl.epidemic import (
    EpidemicModel,
    RegulatorParams,
    closed_loop_cost,
    linear_feedback,
    optimal_control_finite,
    optimal_control_graphon,
    project_trajectories,
    simulate_linearized,
    simulate_nonlinear,
    solve_riccati_finite,
    solve_riccati_graphon,
    stability_threshold,
)
from graphonctl.errors import NumericsError
from graphonctl.functions import PiecewiseConstantFunction
from graphonctl.graphons import StepGraphon

import oracles
from conftest import random_probability_graphon

BASELINE_REGULATOR = dict(alpha=0.5, beta0=1.0, state_weight=2.0,
                          terminal_weight=4.0, horizon=1.0)


def random_model(rng, max_blocks=6, **overrides):
    contact = random_probability_graphon(rng, max_blocks)
    kwargs = dict(BASELINE_REGULATOR, eta=1.5 / contact.num_blocks)
    kwargs.update(overrides)
    return EpidemicModel(contact, **kwargs)


class TestRegulatorParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            RegulatorParams(0.0, 1.0, 1.0, terminal_weight=-1.0)
        with pytest.raises(ValueError):
            RegulatorParams(0.0, 1.0, 1.0, state_weight=-2.0)
        with pytest.raises(ValueError):
            RegulatorParams(0.0, 1.0, 1.0, horizon=0.0)

    def test_callable_state_weight(self):
        params = RegulatorParams(0.0, 1.0, 1.0, state_weight=lambda t: 2.0 + t)
        assert params.state_weight_at(0.5) == pytest.approx(2.5)
        assert RegulatorParams(0.0, 1.0, 1.0).state_weight_at(0.5) == 2.0


class TestEpidemicModel:
    def test_eta_resolution(self):
        contact = StepGraphon(np.full((3, 3), 0.5))
        by_pair = EpidemicModel(contact, alpha=1.0, eta=0.5)
        assert by_pair.eta_total == pytest.approx(1.5)
        by_total = EpidemicModel(contact, alpha=1.0, eta_total=1.5)
        assert by_total.eta == pytest.approx(0.5)
        consistent = EpidemicModel(contact, alpha=1.0, eta=0.5, eta_total=1.5)
        assert consistent.eta == 0.5
        with pytest.raises(ValueError, match="inconsistent"):
            EpidemicModel(contact, alpha=1.0, eta=0.5, eta_total=2.0)
        with pytest.raises(ValueError, match="eta"):
            EpidemicModel(contact, alpha=1.0)

    def test_contact_must_be_nonnegative(self):
        with pytest.raises(ValueError, match="nonnegative"):
            EpidemicModel(StepGraphon([[-0.5]]), alpha=1.0, eta=1.0)

    def test_eigenvector_matrix_is_orthonormal(self, rng):
        model = random_model(rng)
        basis = model.eigenvector_matrix
        np.testing.assert_allclose(basis.T @ basis, np.eye(basis.shape[1]),
                                   atol=1e-10)


class TestStabilityThreshold:
    def test_two_cycle_threshold_at_one(self):
        contact = StepGraphon([[0.0, 1.0], [1.0, 0.0]])
        lam_max, stable = stability_threshold(
            EpidemicModel(contact, alpha=1.1, eta=1.0))
        assert lam_max == pytest.approx(1.0)
        assert stable
        _, unstable_flag = stability_threshold(
            EpidemicModel(contact, alpha=0.9, eta=1.0))
        assert not unstable_flag

    def test_matches_adjacency_eigenvalue(self, rng):
        model = random_model(rng)
        lam_max, _ = stability_threshold(model)
        assert lam_max == pytest.approx(
            np.linalg.eigvalsh(model.adjacency).max(), abs=1e-10)

    def test_zero_kernel(self):
        model = EpidemicModel(StepGraphon([[0.0]]), alpha=0.0, eta=1.0)
        lam_max, stable = stability_threshold(model)
        assert lam_max == 0.0
        assert stable


class TestRiccati:
    def test_single_node_matches_closed_form(self):
        contact = StepGraphon([[0.8]])
        model = EpidemicModel(contact, eta=1.5, **BASELINE_REGULATOR)
        sol = solve_riccati_finite(model, num_steps=4000)
        lam = 0.8
        for column, lam_val in ((sol.auxiliary, 0.0), (sol.modes[:, 0], lam)):
            linear = 2.0 * (model.alpha - model.eta_total * lam_val)
            quadratic = model.beta0 ** 2 / (lam_val ** 2 - 2.0 * lam_val + 2.0)
            exact = oracles.scalar_riccati_closed_form(
                linear, quadratic, 2.0, 4.0, 1.0)
            for idx in (0, len(sol.times) // 2, -1):
                assert column[idx] == pytest.approx(exact(sol.times[idx]),
                                                    rel=1e-9)

    def test_time_varying_weight_against_generic_integrator(self):
        contact = StepGraphon([[0.6]])
        model = EpidemicModel(contact, alpha=0.5, eta=1.0,
                              state_weight=lambda t: 2.0 + t, horizon=1.0)
        sol = solve_riccati_finite(model, num_steps=4000)
        lam = 0.6
        linear = 2.0 * (model.alpha - model.eta_total * lam)
        quadratic = model.beta0 ** 2 / (lam ** 2 - 2.0 * lam + 2.0)
        result = scipy.integrate.solve_ivp(
            lambda t, y: linear * y + quadratic * y * y - (2.0 + t),
            (1.0, 0.0), [4.0], rtol=1e-11, atol=1e-12)
        assert sol.modes[0, 0] == pytest.approx(result.y[0, -1], rel=1e-8)

    def test_finite_and_graphon_solvers_share_floats(self, rng):
        model = random_model(rng)
        finite = solve_riccati_finite(model, num_steps=2000)
        limit = solve_riccati_graphon(model.contact, model.regulator_params(),
                                      num_steps=2000)
        np.testing.assert_array_equal(finite.auxiliary, limit.auxiliary)
        np.testing.assert_array_equal(finite.modes, limit.modes)

    def test_value_at_interpolates_grid(self, rng):
        model = random_model(rng)
        sol = solve_riccati_finite(model, num_steps=500)
        aux, pis = sol.value_at(float(sol.times[123]))
        assert aux == pytest.approx(sol.auxiliary[123], rel=1e-14)
        np.testing.assert_allclose(pis, sol.modes[123], rtol=1e-14)
        np.testing.assert_allclose(sol.quadratic_denominators,
                                   sol.eigenvalues**2 - 2 * sol.eigenvalues + 2)

    def test_negative_running_weight_blows_up_with_named_direction(self):
        contact = StepGraphon(np.full((2, 2), 0.5))
        model = EpidemicModel(contact, alpha=0.0, eta=1.0,
                              state_weight=lambda t: -80.0, horizon=4.0)
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(NumericsError, match="auxiliary direction"):
                solve_riccati_finite(model, num_steps=2000)

    def test_unconverged_integration_is_detected(self):
        # smooth solution, but 3 RK4 steps leave a step-halving drift far
        # above the 1e-7 gate without ever going non-finite
        contact = StepGraphon(np.full((2, 2), 0.5))
        model = EpidemicModel(contact, alpha=0.5, eta=1.0, horizon=1.0)
        with pytest.raises(NumericsError, match="not converged"):
            solve_riccati_finite(model, num_steps=3)


class TestFeedbackAgainstMatrixOracle:
    def test_control_matches_full_matrix_regulator(self, rng):
        for _ in range(3):
            model = random_model(rng, max_blocks=5)
            sol = solve_riccati_finite(model, num_steps=4000)
            _, _, oracle_feedback = oracles.epidemic_lqr_oracle(
                model.adjacency, model.alpha, model.eta, model.beta0,
                2.0, 4.0, 1.0, num_steps=4000)
            for t in (0.0, 0.37, 0.92):
                state = rng.normal(size=model.num_nodes)
                mine = optimal_control_finite(model, sol, state, t)
                ref = oracle_feedback(t, state)
                np.testing.assert_allclose(mine, ref, atol=2e-6)

    def test_graphon_feedback_reproduces_finite(self, rng):
        model = random_model(rng)
        sol = solve_riccati_finite(model, num_steps=1000)
        state = rng.normal(size=model.num_nodes)
        finite = optimal_control_finite(model, sol, state, 0.3)
        graphon_u = optimal_control_graphon(
            model.contact, sol, PiecewiseConstantFunction(state), 0.3,
            model.beta0, modes=model.modes)
        np.testing.assert_allclose(graphon_u.values, finite, atol=1e-12)


class TestSimulation:
    def test_uncontrolled_linear_flow_matches_expm(self, rng):
        import scipy.linalg

        model = random_model(rng)
        p0 = rng.uniform(0.0, 0.2, size=model.num_nodes)
        trajectory = simulate_linearized(model, p0, None, num_steps=2000)
        drift = -model.alpha * np.eye(model.num_nodes) + model.eta * model.adjacency
        expected = scipy.linalg.expm(drift * model.horizon) @ p0
        np.testing.assert_allclose(trajectory.states[-1], expected, atol=1e-9)

    def test_closed_loop_records_controls(self, rng):
        model = random_model(rng)
        sol = solve_riccati_finite(model, num_steps=1000)
        law = linear_feedback(model, sol)
        trajectory = simulate_linearized(model, np.full(model.num_nodes, 0.1),
                                         law, num_steps=200)
        assert trajectory.controls.shape == trajectory.states.shape
        np.testing.assert_allclose(
            trajectory.controls[0],
            optimal_control_finite(model, sol, trajectory.states[0], 0.0))

    def test_nonlinear_requires_fractions(self, rng):
        model = random_model(rng)
        with pytest.raises(ValueError, match=r"\[0, 1\]"):
            simulate_nonlinear(model, np.full(model.num_nodes, 1.2))

    def test_nonlinear_stays_in_box_uncontrolled(self, rng):
        model = random_model(rng)
        p0 = rng.uniform(0.0, 1.0, size=model.num_nodes)
        trajectory = simulate_nonlinear(model, p0, None, num_steps=500)
        assert not trajectory.range_warning
        assert trajectory.states.min() >= -1e-9
        assert trajectory.states.max() <= 1.0 + 1e-9

    def test_forced_escape_sets_range_warning(self, rng):
        model = random_model(rng)

        def push(t, p):
            return np.full(model.num_nodes, 5.0)

        with pytest.warns(RuntimeWarning, match="unreliable"):
            trajectory = simulate_nonlinear(model, np.full(model.num_nodes, 0.9),
                                            push, num_steps=200)
        assert trajectory.range_warning


class TestCostAndProjections:
    def test_cost_formula_recomputed(self, rng):
        model = random_model(rng)
        sol = solve_riccati_finite(model, num_steps=1000)
        law = linear_feedback(model, sol)
        trajectory = simulate_linearized(model, np.full(model.num_nodes, 0.1),
                                         law, num_steps=300)
        cost = closed_loop_cost(model, trajectory)
        averaging = np.eye(model.num_nodes) - model.adjacency / model.num_nodes
        integrand = []
        for p, u in zip(trajectory.states, trajectory.controls):
            integrand.append(2.0 * p @ p + u @ u + (averaging @ u) @ (averaging @ u))
        trapz = getattr(np, "trapezoid", np.trapz)
        expected = trapz(integrand, trajectory.times)
        expected += 4.0 * trajectory.states[-1] @ trajectory.states[-1]
        assert cost == pytest.approx(expected, rel=1e-12)

    def test_feedback_beats_zero_control(self, rng):
        model = random_model(rng)
        sol = solve_riccati_finite(model, num_steps=2000)
        law = linear_feedback(model, sol)
        p0 = np.full(model.num_nodes, 0.15)
        controlled = simulate_linearized(model, p0, law, num_steps=500)
        idle = simulate_linearized(model, p0, None, num_steps=500)
        assert closed_loop_cost(model, controlled) < closed_loop_cost(model, idle)

    def test_projection_reconstructs_trajectory(self, rng):
        model = random_model(rng)
        sol = solve_riccati_finite(model, num_steps=500)
        law = linear_feedback(model, sol)
        trajectory = simulate_linearized(model, np.full(model.num_nodes, 0.1),
                                         law, num_steps=100)
        report = project_trajectories(trajectory, model.modes)
        basis = model.eigenvector_matrix
        assert report.reconstruction_error(trajectory.states, basis) < 1e-10
        # the auxiliary part is orthogonal to every eigendirection
        np.testing.assert_allclose(report.auxiliary_states @ basis, 0.0,
                                   atol=1e-10)
        rebuilt = report.control_coefficients @ basis.T + report.auxiliary_controls
        np.testing.assert_allclose(rebuilt, trajectory.controls, atol=1e-10)

    def test_projection_partition_mismatch(self, rng):
        model = random_model(rng, max_blocks=4)
        other = random_model(rng, max_blocks=4)
        while other.num_nodes == model.num_nodes:
            other = random_model(rng, max_blocks=6)
        sol = solve_riccati_finite(model, num_steps=200)
        trajectory = simulate_linearized(model, np.full(model.num_nodes, 0.1),
                                         linear_feedback(model, sol), num_steps=50)
        with pytest.raises(ValueError, match="partition"):
            project_trajectories(trajectory, other.modes)
