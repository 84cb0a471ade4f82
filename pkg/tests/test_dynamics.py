"""
Unit tests for trajectory generation and derivative access.

This module tests the fixed-step RK4 integrator, exact map iteration, the
spin-up helper, the per-step propagators and the central-difference check of
analytic derivatives.
"""

import sys
from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import solve_ivp

# Add the parent directory to sys.path to import the shadowlab modules
sys.path.insert(0, str(Path(__file__).parent.parent))

from shadowlab.dynamics import (
    MapSpec,
    SystemSpec,
    Trajectory,
    check_derivatives,
    integrate,
    iterate,
    spinup,
    trapezoid_weights,
)
from shadowlab.error_handler import DivergenceError, InputError
from shadowlab.systems import catmap, linear_saddle, lorenz63


def decay_system() -> SystemSpec:
    return SystemSpec(
        name="decay",
        dim=1,
        drift=lambda u, s: -u,
        objective=lambda u, s: np.asarray(u)[..., 0],
        drift_jac_u=lambda u, s: np.full(np.shape(u) + (1,), -1.0),
        drift_jac_s=lambda u, s: np.zeros(np.shape(u)),
    )


def blowup_system() -> SystemSpec:
    return SystemSpec(name="blowup", dim=1, drift=lambda u, s: u ** 2,
                      objective=lambda u, s: np.asarray(u)[..., 0])


def halving_map() -> MapSpec:
    return MapSpec(
        name="halving",
        dim=1,
        step_map=lambda u, s: 0.5 * u + 1.0,
        objective=lambda u, s: np.asarray(u)[..., 0],
        map_jac_u=lambda u, s: np.full(np.shape(u) + (1,), 0.5),
        map_jac_s=lambda u, s: np.ones(np.shape(u)),
    )


class TestIntegrate:
    """Test suite for the RK4 integrator."""

    def setup_method(self):
        """Set up test environment before each test."""
        self.decay = decay_system()

    def test_exponential_decay_matches_closed_form(self):
        """du/dt = -u from u0 = 1 over t = 1 reproduces e^-1."""
        traj = integrate(self.decay, [1.0], 0.0, 0.01, 100)

        assert traj.n_steps == 100
        assert traj.states[0, 0] == 1.0
        assert abs(traj.states[-1, 0] - np.exp(-1.0)) <= 1e-9

    def test_times_follow_step(self):
        """The time grid is step * index."""
        traj = integrate(self.decay, [1.0], 0.0, 0.01, 10)

        np.testing.assert_allclose(traj.times, 0.01 * np.arange(11))

    def test_states_are_read_only(self):
        """Trajectory states cannot be modified in place."""
        traj = integrate(self.decay, [1.0], 0.0, 0.01, 5)

        with pytest.raises(ValueError):
            traj.states[0, 0] = 2.0

    def test_invalid_step_rejected(self):
        """A non-positive step or zero steps raise InputError."""
        with pytest.raises(InputError):
            integrate(self.decay, [1.0], 0.0, 0.0, 10)
        with pytest.raises(InputError):
            integrate(self.decay, [1.0], 0.0, 0.01, 0)

    def test_wrong_state_shape_rejected(self):
        """An initial state of the wrong dimension raises InputError."""
        with pytest.raises(InputError):
            integrate(self.decay, [1.0, 2.0], 0.0, 0.01, 10)

    def test_integrate_rejects_map(self):
        """integrate only accepts flows."""
        with pytest.raises(InputError):
            integrate(catmap(), [0.1, 0.2], 0.0, 0.01, 10)

    def test_divergence_reports_step(self):
        """A finite-time blow-up raises DivergenceError with the failing step."""
        with pytest.raises(DivergenceError) as info:
            integrate(blowup_system(), [1.0], 0.0, 0.5, 50)

        assert info.value.step is not None
        assert 1 <= info.value.step <= 50

    def test_trajectory_direction_is_tangent_solution(self):
        """Propagating f(u_0) with the step propagators follows f(u_i)."""
        spec = lorenz63()
        traj = integrate(spec, [1.0, 1.0, 20.0], 28.0, 0.005, 200)
        w = traj.drifts[0]
        for i in range(traj.n_steps):
            w = traj.propagators[i] @ w
        error = np.linalg.norm(w - traj.drifts[-1]) / np.linalg.norm(traj.drifts[-1])

        assert error <= 1e-3

    def test_rk4_agrees_with_adaptive_reference(self):
        """Over one time unit RK4 with h=1e-3 matches a tight adaptive solution."""
        spec = lorenz63()
        traj = integrate(spec, [1.0, 1.0, 1.0], 28.0, 1e-3, 1000)
        reference = solve_ivp(lambda t, u: spec.rhs(u, 28.0), (0.0, 1.0), [1.0, 1.0, 1.0],
                              method="DOP853", rtol=1e-12, atol=1e-12)

        np.testing.assert_allclose(traj.states[-1], reference.y[:, -1], rtol=1e-6, atol=1e-6)


class TestIterate:
    """Test suite for map iteration and spin-up."""

    def test_iterate_applies_map_exactly(self):
        """Each state is the map applied to its predecessor."""
        spec = catmap()
        traj = iterate(spec, [0.1, 0.3], 0.05, 20)

        expected = spec.rhs(traj.states[:-1], 0.05)
        np.testing.assert_allclose(traj.states[1:], expected, rtol=0, atol=1e-12)
        assert traj.step == 1.0

    def test_iterate_rejects_flow(self):
        """iterate only accepts maps."""
        with pytest.raises(InputError):
            iterate(lorenz63(), [1.0, 1.0, 1.0], 28.0, 10)

    def test_map_propagators_are_jacobians(self):
        """For maps the step propagator is f_u(u_i)."""
        traj = iterate(halving_map(), [0.0], 0.0, 5)

        np.testing.assert_array_equal(traj.propagators, np.full((5, 1, 1), 0.5))

    def test_map_objective_mean_skips_last_state(self):
        """The map average runs over states 0..N-1."""
        traj = iterate(halving_map(), [0.0], 0.0, 3)

        assert traj.objective_mean == pytest.approx(np.mean(traj.states[:-1, 0]))

    def test_spinup_zero_duration_returns_start(self):
        """A zero spin-up returns the initial state unchanged."""
        u = spinup(linear_saddle(), [0.5, 0.5], 0.0, 0.0)

        np.testing.assert_array_equal(u, [0.5, 0.5])

    def test_spinup_negative_duration_rejected(self):
        """A negative spin-up raises InputError."""
        with pytest.raises(InputError):
            spinup(lorenz63(), [1.0, 1.0, 1.0], 28.0, -1.0)

    def test_spinup_accepts_batches(self):
        """Spin-up advances a batch of initial states at once."""
        spec = catmap()
        batch = np.array([[0.1, 0.2], [0.3, 0.4], [0.5, 0.6]])
        out = spinup(spec, batch, 0.0, 5)

        assert out.shape == (3, 2)


class TestTrajectory:
    """Test suite for the Trajectory value type."""

    def test_too_short_trajectory_rejected(self):
        """A trajectory needs at least two states."""
        with pytest.raises(InputError):
            Trajectory(decay_system(), np.zeros((1, 1)), 0.01, 0.0)

    def test_drifts_only_for_flows(self):
        """Vector field values are undefined for maps."""
        traj = iterate(catmap(), [0.1, 0.2], 0.0, 3)

        with pytest.raises(InputError):
            _ = traj.drifts

    def test_direction_forcing(self):
        """Extra parameter directions provide f_p and a zero J_p by default."""
        traj = integrate(lorenz63(), [1.0, 2.0, 3.0], 28.0, 0.01, 3)
        forcing, objective = traj.direction_forcing("sigma")

        np.testing.assert_allclose(forcing[:, 0], traj.states[:, 1] - traj.states[:, 0])
        np.testing.assert_array_equal(forcing[:, 1:], 0.0)
        np.testing.assert_array_equal(objective, 0.0)

    def test_unknown_direction_rejected(self):
        """An unknown parameter direction raises InputError."""
        traj = integrate(lorenz63(), [1.0, 2.0, 3.0], 28.0, 0.01, 3)

        with pytest.raises(InputError):
            traj.direction_forcing("gamma")

    def test_trapezoid_weights(self):
        """Trapezoid weights halve the end points and sum to the horizon."""
        weights = trapezoid_weights(5, 0.1)

        np.testing.assert_allclose(weights, [0.05, 0.1, 0.1, 0.1, 0.05])
        assert weights.sum() == pytest.approx(0.4)


class TestCheckDerivatives:
    """Test suite for the derivative check."""

    def test_lorenz_at_reference_point(self):
        """All Lorenz derivatives agree with central differences at (1, 1, 1)."""
        report = check_derivatives(lorenz63(), [1.0, 1.0, 1.0], 28.0, eps=1e-5)

        assert report.worst() <= 1e-5
        assert report.fallback == ()

    def test_lorenz_on_attractor_points(self):
        """Lorenz derivatives agree at 100 points on the attractor."""
        spec = lorenz63()
        rng = np.random.default_rng(3)
        points = spinup(spec, spec.sample_initial(rng, 100), 28.0, 5.0)
        report = check_derivatives(spec, points, 28.0, eps=1e-5)

        assert report.worst() <= 1e-5

    def test_catmap_parameter_derivative(self):
        """The cat map f_s agrees with central differences across the torus seam."""
        spec = catmap()
        rng = np.random.default_rng(0)
        report = check_derivatives(spec, rng.random((100, 2)), 0.0, eps=1e-5)

        assert report.f_s <= 1e-6
        assert report.worst() <= 1e-5

    def test_fallback_derivatives_listed(self):
        """Missing analytic derivatives are listed and replaced by differences."""
        spec = blowup_system()
        report = check_derivatives(spec, [0.5], 0.0)

        assert set(report.fallback) == {"f_u", "f_s", "J_u", "J_s"}
        assert spec.jac_u(np.array([0.5]), 0.0)[0, 0] == pytest.approx(1.0, rel=1e-6)

    def test_invalid_eps_rejected(self):
        """A non-positive difference step raises InputError."""
        with pytest.raises(InputError):
            check_derivatives(lorenz63(), [1.0, 1.0, 1.0], 28.0, eps=0.0)
