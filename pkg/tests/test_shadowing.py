"""
Unit tests for tangent and adjoint shadowing directions of maps and flows,
the truncation buffer and the property verification.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add the parent directory to sys.path to import the shadowlab modules
sys.path.insert(0, str(Path(__file__).parent.parent))

from shadowlab.adjoint import adjoint_project, dual_basis
from shadowlab.dynamics import integrate, iterate, spinup
from shadowlab.error_handler import InputError, TruncationError
from shadowlab.shadowing import (
    adjoint_shadowing_flow,
    adjoint_shadowing_map,
    adjoint_shadowing_map_direct,
    default_buffer,
    inject_unstable_fault,
    tangent_shadowing_flow,
    tangent_shadowing_map,
    tangent_shadowing_map_direct,
    verify_properties,
)
from shadowlab.systems import catmap, linear_saddle, lorenz63
from shadowlab.tangent import compute_clvs, project


def catmap_setup(s: float, n: int):
    spec = catmap()
    start = spinup(spec, spec.sample_initial(np.random.default_rng(0), 1)[0], s, 100)
    traj = iterate(spec, start, s, n)
    clv = compute_clvs(traj)
    return traj, clv, dual_basis(clv, traj)


class TestBuffer:
    """Test suite for the default buffer and the truncation checks."""

    def test_catmap_default_buffer(self):
        """Exponent gap ≈ 0.9624 gives 20 steps for a tolerance of 1e-8."""
        _, clv, _ = catmap_setup(0.0, 200)

        assert default_buffer(clv) == 20

    def test_saddle_default_buffer(self):
        """Gap 1 with h = 0.01 gives 1843 steps."""
        traj = integrate(linear_saddle(), [0.0, 0.0], 0.0, 0.01, 10000)

        assert default_buffer(compute_clvs(traj)) == 1843

    def test_small_buffer_rejected(self):
        """A buffer with estimated truncation error above 1e-6 raises TruncationError."""
        traj, clv, _ = catmap_setup(0.05, 200)

        with pytest.raises(TruncationError):
            tangent_shadowing_map(traj, clv, buffer=5)

    def test_degenerate_window_rejected(self):
        """2 · buffer >= span length raises TruncationError."""
        traj, clv, _ = catmap_setup(0.05, 200)
        span = (clv.start, clv.start + 60)

        with pytest.raises(TruncationError):
            tangent_shadowing_map(traj, clv, buffer=40, span=span)

    def test_negative_buffer_rejected(self):
        traj, clv, _ = catmap_setup(0.05, 200)

        with pytest.raises(InputError):
            tangent_shadowing_map(traj, clv, buffer=-1)

    def test_span_outside_window_rejected(self):
        """A span reaching outside the CLV window raises InputError."""
        traj, clv, _ = catmap_setup(0.05, 200)

        with pytest.raises(InputError):
            tangent_shadowing_map(traj, clv, buffer=0, span=(0, clv.start + 10))


class TestMapShadowing:
    """Test suite for shadowing sequences of the perturbed cat map."""

    @classmethod
    def setup_class(cls):
        """Build the trajectory, CLVs and dual basis once for all tests."""
        cls.traj, cls.clv, cls.adj = catmap_setup(0.05, 400)
        cls.tangent = tangent_shadowing_map(cls.traj, cls.clv, buffer=20)
        cls.adjoint = adjoint_shadowing_map(cls.traj, cls.clv, cls.adj, buffer=20)

    def test_window_and_buffer(self):
        """The trusted window leaves the buffer at each end."""
        n = self.clv.stop - self.clv.start

        assert self.tangent.window == (20, n - 20)
        assert self.tangent.n_steps == n
        assert self.adjoint.start == self.clv.start

    def test_tangent_recurrence(self):
        """v_{i+1} = f_u(u_i) v_i + f_s(u_i) at every step."""
        v = self.tangent.v
        idx = self.tangent.start + np.arange(self.tangent.n_steps)
        predicted = np.einsum("kij,kj->ki", self.traj.jacobians[idx], v[:-1]) + self.traj.param_forcing[idx]

        np.testing.assert_allclose(v[1:], predicted, rtol=0, atol=1e-9)

    def test_adjoint_recurrence(self):
        """v̄_l = f_u(u_l)^T v̄_{l+1} + J_u(u_l) at every step."""
        v_bar = self.adjoint.v_bar
        idx = self.adjoint.start + np.arange(self.adjoint.n_steps)
        predicted = (np.einsum("kji,kj->ki", self.traj.jacobians[idx], v_bar[1:])
                     + self.traj.objective_gradients[idx])

        np.testing.assert_allclose(v_bar[:-1], predicted, rtol=0, atol=1e-9)

    def test_no_unstable_adjoint_component_at_start(self):
        """v̄_0 has no component in the unstable adjoint subspace."""
        v0 = self.adjoint.v_bar[0]
        unstable = adjoint_project(self.adj, self.clv, self.clv.start, "plus", v0)

        assert np.linalg.norm(unstable) <= 1e-8 * np.linalg.norm(v0)

    def test_no_unstable_component_at_end(self):
        """The tangent sequence has no unstable component at the last step."""
        vn = self.tangent.v[-1]
        unstable = project(self.clv, self.clv.stop, "plus", vn)

        assert np.linalg.norm(unstable) <= 1e-8 * np.linalg.norm(vn)

    def test_sequences_stay_bounded(self):
        """Both sequences stay bounded over the trusted window."""
        lo, hi = self.tangent.window

        assert np.max(np.linalg.norm(self.tangent.v[lo:hi + 1], axis=-1)) < 100.0
        assert np.max(np.linalg.norm(self.adjoint.v_bar[lo:hi + 1], axis=-1)) < 100.0

    def test_tangent_matches_direct_sum(self):
        """The recursive tangent sequence equals explicit propagation on a short span."""
        span = (self.clv.start + 100, self.clv.start + 112)
        recursive = tangent_shadowing_map(self.traj, self.clv, buffer=0, span=span).v
        direct = tangent_shadowing_map_direct(self.traj, self.clv, span=span)

        np.testing.assert_allclose(recursive, direct, rtol=0, atol=1e-9)

    def test_adjoint_matches_direct_sum(self):
        """The recursive adjoint sequence equals explicit propagation on a short span."""
        span = (self.clv.start + 50, self.clv.start + 62)
        recursive = adjoint_shadowing_map(self.traj, self.clv, self.adj, buffer=0, span=span).v_bar
        direct = adjoint_shadowing_map_direct(self.traj, self.clv, self.adj, span=span)

        np.testing.assert_allclose(recursive, direct, rtol=0, atol=1e-9)

    def test_verify_properties_passes(self):
        """The adjoint shadowing sequence satisfies all defining properties."""
        report = verify_properties(self.adjoint, self.traj, self.clv, self.adj)

        assert report.passed, report.failures()
        assert report.f_inner_product_avg is None
        assert "f_inner_product_avg" not in report.as_dict()

    def test_truncation_error_shrinks_with_buffer(self):
        """Doubling the half-width around a point shrinks the change of v̄ there by at least e^{gap·b/2}."""
        b = 10
        c = self.clv.start + 120

        def centre(width: int) -> np.ndarray:
            shadow = adjoint_shadowing_map(self.traj, self.clv, self.adj, buffer=0, span=(c - width, c + width))
            return shadow.v_bar[width]

        reference = centre(3 * b)
        short = np.linalg.norm(centre(b) - reference)
        long = np.linalg.norm(centre(2 * b) - reference)

        assert short > 0.0
        assert long <= short * np.exp(-0.5 * self.clv.spectral_gap * b * self.clv.step)

    def test_point_fault_detected(self):
        """An unstable perturbation of 1e-6 at l = 0 fails the unstable component check."""
        faulty = inject_unstable_fault(self.adjoint, self.clv, self.adj, 1e-6, mode="point")
        report = verify_properties(faulty, self.traj, self.clv, self.adj)

        assert not report.passed
        assert "unstable_component_at_0" in report.failures()
        assert report.unstable_component_at_0 == pytest.approx(1e-6, rel=1e-2)

    def test_homogeneous_fault_detected(self):
        """A homogeneous unstable perturbation also breaks the start condition."""
        faulty = inject_unstable_fault(self.adjoint, self.clv, self.adj, 1e-6)
        report = verify_properties(faulty, self.traj, self.clv, self.adj)

        assert "unstable_component_at_0" in report.failures()

    def test_unknown_fault_mode_rejected(self):
        with pytest.raises(InputError):
            inject_unstable_fault(self.adjoint, self.clv, self.adj, 1e-6, mode="random")

    def test_flow_constructor_rejects_map(self):
        """The flow constructions only accept flows."""
        with pytest.raises(InputError):
            tangent_shadowing_flow(self.traj, self.clv, buffer=0)


class TestSaddleShadowing:
    """Test suite for the linear saddle, where the shadowing directions are known."""

    @classmethod
    def setup_class(cls):
        """Build the trajectory, CLVs and dual basis once for all tests."""
        cls.traj = integrate(linear_saddle(), [0.0, 0.0], 0.0, 0.01, 10000)
        cls.clv = compute_clvs(cls.traj)
        cls.adj = dual_basis(cls.clv, cls.traj)

    def test_exponents(self):
        """The saddle rates are recovered."""
        np.testing.assert_allclose(self.clv.exponents, [1.0, -2.0], atol=1e-6)
        assert self.clv.neutral_index is None

    def test_tangent_direction_is_constant(self):
        """Inside the trusted window v^± = (0, 1/2) up to the trapezoid bias."""
        shadow = tangent_shadowing_flow(self.traj, self.clv)
        lo, hi = shadow.window

        np.testing.assert_allclose(shadow.v_pm[lo:hi + 1, 0], 0.0, atol=1e-12)
        np.testing.assert_allclose(shadow.v_pm[lo:hi + 1, 1], 0.5, atol=1e-4)
        np.testing.assert_array_equal(shadow.eta, 0.0)

    def test_adjoint_direction_is_constant(self):
        """Inside the trusted window v̄ = (0, 1/2) up to the trapezoid bias."""
        shadow = adjoint_shadowing_flow(self.traj, self.clv, self.adj)
        lo, hi = shadow.window

        assert shadow.buffer == 1843
        np.testing.assert_allclose(shadow.v_bar[lo:hi + 1, 1], 0.5, atol=1e-4)
        np.testing.assert_array_equal(shadow.v_bar_0, 0.0)

    def test_verify_properties_passes(self):
        """The saddle adjoint shadowing direction passes the property check."""
        shadow = adjoint_shadowing_flow(self.traj, self.clv, self.adj)
        report = verify_properties(shadow, self.traj, self.clv, self.adj)

        assert report.passed, report.failures()
        assert shadow.diagnostics["growth_ratio"] == pytest.approx(1.0, abs=1e-6)


class TestLorenzShadowing:
    """Test suite for the finite-form shadowing directions of Lorenz 63."""

    @classmethod
    def setup_class(cls):
        """Build a short trajectory, its CLVs and dual basis once for all tests."""
        spec = lorenz63()
        start = spinup(spec, spec.sample_initial(np.random.default_rng(0), 1)[0], 28.0, 10.0)
        cls.traj = integrate(spec, start, 28.0, 0.01, 10000)
        cls.clv = compute_clvs(cls.traj)
        cls.adj = dual_basis(cls.clv, cls.traj)
        cls.tangent = tangent_shadowing_flow(cls.traj, cls.clv, buffer=0)
        cls.adjoint = adjoint_shadowing_flow(cls.traj, cls.clv, cls.adj, buffer=0)

    def test_finite_form_uses_whole_window(self):
        """buffer = 0 trusts the whole construction range."""
        n = self.clv.stop - self.clv.start

        assert self.tangent.window == (0, n)
        assert self.adjoint.buffer == 0

    def test_tangent_direction_has_no_neutral_part(self):
        """v^± lies in the span of the non-neutral CLVs."""
        i = self.clv.start + 500
        v = self.tangent.v_pm[500]

        assert np.linalg.norm(project(self.clv, i, "zero", v)) <= 1e-8 * max(1.0, np.linalg.norm(v))

    def test_time_dilation_cancels_neutral_forcing(self):
        """η f equals minus the neutral part of f_s."""
        k = 777
        i = self.clv.start + k
        neutral = project(self.clv, i, "zero", self.traj.param_forcing[i])

        np.testing.assert_allclose(self.tangent.eta[k] * self.traj.drifts[i], -neutral, atol=1e-10)

    def test_adjoint_split(self):
        """v̄ is the sum of its hyperbolic and neutral parts."""
        np.testing.assert_allclose(self.adjoint.v_bar, self.adjoint.v_bar_pm + self.adjoint.v_bar_0)
        assert self.adjoint.objective_mean == pytest.approx(self.traj.objective_mean)

    def test_structural_properties(self):
        """Start condition and pm-orthogonality to f hold to roundoff."""
        report = verify_properties(self.adjoint, self.traj, self.clv, self.adj)

        assert report.unstable_component_at_0 <= 1e-6
        assert report.pm_f_orthogonality <= 1e-6
        assert report.f_inner_product_avg is not None
        assert report.objective_mean_source.startswith("trajectory average")
