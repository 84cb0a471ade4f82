"""
Unit tests for the sensitivity formulas, the batch-means error estimate and
the finite-difference reference.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add the parent directory to sys.path to import the shadowlab modules
sys.path.insert(0, str(Path(__file__).parent.parent))

from shadowlab.adjoint import dual_basis
from shadowlab.dynamics import integrate, iterate, spinup
from shadowlab.error_handler import InputError
from shadowlab.sensitivity import (
    SensitivityResult,
    batch_stderr,
    finite_difference_oracle,
    map_identity_sums,
    sensitivity_adjoint_directions,
    sensitivity_adjoint_flow,
    sensitivity_adjoint_map,
    sensitivity_tangent_flow,
    sensitivity_tangent_map,
)
from shadowlab.shadowing import (
    adjoint_shadowing_flow,
    adjoint_shadowing_map,
    tangent_shadowing_flow,
    tangent_shadowing_map,
)
from shadowlab.systems import catmap, linear_saddle, linear_sink, lorenz63
from shadowlab.tangent import compute_clvs


def lorenz_setup(horizon: float, buffer=None):
    spec = lorenz63()
    start = spinup(spec, spec.sample_initial(np.random.default_rng(0), 1)[0], 28.0, 10.0)
    traj = integrate(spec, start, 28.0, 0.01, int(round(horizon / 0.01)))
    clv = compute_clvs(traj)
    adj = dual_basis(clv, traj)
    return traj, clv, tangent_shadowing_flow(traj, clv, buffer), adjoint_shadowing_flow(traj, clv, adj, buffer)


def catmap_setup(s: float, n: int, buffer=0, spinup_steps: int = 100):
    spec = catmap()
    start = spinup(spec, spec.sample_initial(np.random.default_rng(0), 1)[0], s, spinup_steps)
    traj = iterate(spec, start, s, n)
    clv = compute_clvs(traj)
    adj = dual_basis(clv, traj)
    return traj, tangent_shadowing_map(traj, clv, buffer), adjoint_shadowing_map(traj, clv, adj, buffer)


class TestSensitivityResult:
    """Test suite for the result value type."""

    def test_negative_stderr_rejected(self):
        with pytest.raises(InputError):
            SensitivityResult(value=1.0, horizon=10.0, stderr=-0.1, method="tangent-flow")

    def test_non_positive_horizon_rejected(self):
        with pytest.raises(InputError):
            SensitivityResult(value=1.0, horizon=0.0, stderr=0.1, method="tangent-flow")

    def test_as_dict(self):
        """The dictionary form carries all fields."""
        result = SensitivityResult(value=1.0, horizon=10.0, stderr=0.1, method="adjoint-map",
                                   system="catmap", parameter=0.05)

        assert result.as_dict() == {"method": "adjoint-map", "value": 1.0, "stderr": 0.1, "horizon": 10.0,
                                    "system": "catmap", "parameter": 0.05, "direction": "s"}


class TestBatchStderr:
    """Test suite for the batch-means error estimate."""

    def test_constant_series_has_zero_error(self):
        assert batch_stderr(np.full(100, 3.0)) == 0.0

    def test_two_level_series(self):
        """Five segments at 0 and five at 1 give std/√10 = 1/6."""
        series = np.concatenate([np.zeros(50), np.ones(50)])

        assert batch_stderr(series) == pytest.approx(1.0 / 6.0)

    def test_single_value_has_zero_error(self):
        assert batch_stderr([1.0]) == 0.0


class TestSaddleSensitivity:
    """Test suite for the linear saddle, where d<u2>/ds = 1/2."""

    @classmethod
    def setup_class(cls):
        """Build the shadowing directions with the default buffer once."""
        cls.traj = integrate(linear_saddle(), [0.0, 0.0], 0.0, 0.01, 10000)
        clv = compute_clvs(cls.traj)
        adj = dual_basis(clv, cls.traj)
        cls.tangent = tangent_shadowing_flow(cls.traj, clv)
        cls.adjoint = adjoint_shadowing_flow(cls.traj, clv, adj)

    def test_tangent_interior(self):
        """The interior-averaged tangent sensitivity is 1/2."""
        result = sensitivity_tangent_flow(self.traj, self.tangent, averaging="interior")

        assert result.value == pytest.approx(0.5, abs=1e-4)
        assert result.method == "tangent-flow"
        assert result.system == "linear-saddle"

    def test_adjoint_interior(self):
        """The interior-averaged adjoint sensitivity is 1/2."""
        result = sensitivity_adjoint_flow(self.traj, self.adjoint, averaging="interior")

        assert result.value == pytest.approx(0.5, abs=1e-4)
        assert result.stderr == pytest.approx(0.0, abs=1e-8)

    def test_tangent_and_adjoint_agree(self):
        """Tangent and adjoint sensitivities coincide for constant CLV coordinates."""
        tangent = sensitivity_tangent_flow(self.traj, self.tangent, averaging="interior")
        adjoint = sensitivity_adjoint_flow(self.traj, self.adjoint, averaging="interior")

        assert tangent.value == pytest.approx(adjoint.value, abs=1e-10)

    def test_interior_horizon(self):
        """The interior average spans the trusted window."""
        result = sensitivity_adjoint_flow(self.traj, self.adjoint, averaging="interior")
        lo, hi = self.adjoint.window

        assert result.horizon == pytest.approx((hi - lo) * 0.01)

    def test_default_averaging_is_trusted_window(self):
        """Without an explicit mode both flow formulas average over shadow.window only."""
        lo, hi = self.adjoint.window
        tangent = sensitivity_tangent_flow(self.traj, self.tangent)
        adjoint = sensitivity_adjoint_flow(self.traj, self.adjoint)
        full = sensitivity_adjoint_flow(self.traj, self.adjoint, averaging="full")

        assert tangent.horizon == pytest.approx((hi - lo) * 0.01)
        assert adjoint.horizon == pytest.approx((hi - lo) * 0.01)
        assert full.horizon == pytest.approx(self.adjoint.n_steps * 0.01)
        assert adjoint.value == sensitivity_adjoint_flow(self.traj, self.adjoint, averaging="interior").value

    def test_unknown_averaging_rejected(self):
        with pytest.raises(InputError):
            sensitivity_adjoint_flow(self.traj, self.adjoint, averaging="middle")


class TestLorenzSensitivity:
    """Test suite for the finite-form sensitivities of a short Lorenz 63 run."""

    @classmethod
    def setup_class(cls):
        """Build finite-form shadowing directions once."""
        cls.traj, cls.clv, cls.tangent, cls.adjoint = lorenz_setup(100.0, buffer=0)

    def test_tangent_and_adjoint_agree(self):
        """Over the whole construction range the values agree up to a small boundary term."""
        tangent = sensitivity_tangent_flow(self.traj, self.tangent, averaging="full")
        adjoint = sensitivity_adjoint_flow(self.traj, self.adjoint, averaging="full")

        assert tangent.value == pytest.approx(adjoint.value, abs=1e-3)
        assert 0.3 < adjoint.value < 1.7

    def test_multiple_directions_from_one_adjoint(self):
        """One adjoint direction serves every parameter direction."""
        results = sensitivity_adjoint_directions(self.traj, self.adjoint, names=("s", "sigma", "beta"))

        assert [r.direction for r in results] == ["s", "sigma", "beta"]
        assert results[0].value == pytest.approx(sensitivity_adjoint_flow(self.traj, self.adjoint).value)
        assert all(np.isfinite(r.value) for r in results)

    def test_map_formula_rejects_flow(self):
        """Map formulas are not applicable to flow trajectories."""
        with pytest.raises(InputError):
            sensitivity_adjoint_map(self.traj, self.adjoint)

    def test_wrong_system_rejected(self):
        """A spec that does not match the trajectory raises InputError."""
        with pytest.raises(InputError):
            sensitivity_adjoint_flow(self.traj, self.adjoint, spec=linear_sink())


class TestMapSensitivity:
    """Test suite for the map formulas and the finite sum identity."""

    @classmethod
    def setup_class(cls):
        """Build finite-form shadowing sequences of the perturbed cat map once."""
        cls.traj, cls.tangent, cls.adjoint = catmap_setup(0.05, 200)

    def test_identity_holds_to_roundoff(self):
        """Σ <J_u, v> equals Σ <v̄_{l+1}, f_s> over the same index set."""
        lhs, rhs = map_identity_sums(self.traj, self.tangent, self.adjoint)

        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)

    def test_tangent_and_adjoint_values_agree(self):
        """Both map formulas give the same sensitivity."""
        tangent = sensitivity_tangent_map(self.traj, self.tangent)
        adjoint = sensitivity_adjoint_map(self.traj, self.adjoint)

        assert tangent.value == pytest.approx(adjoint.value, rel=1e-10, abs=1e-12)
        assert tangent.horizon == adjoint.horizon == self.tangent.n_steps

    def test_missing_sequence_rejected(self):
        """The tangent formula needs a tangent sequence."""
        with pytest.raises(InputError):
            sensitivity_tangent_map(self.traj, self.adjoint)

    def test_identity_requires_same_range(self):
        """Sequences over different ranges cannot be compared."""
        traj, tangent, _ = catmap_setup(0.05, 300)

        with pytest.raises(InputError):
            map_identity_sums(self.traj, tangent, self.adjoint)


class TestMapWindowAveraging:
    """Test suite for the map formulas with a truncation buffer."""

    @classmethod
    def setup_class(cls):
        """Build truncated shadowing sequences of the perturbed cat map once."""
        cls.traj, cls.tangent, cls.adjoint = catmap_setup(0.05, 400, buffer=20)

    def test_default_averages_over_trusted_window(self):
        """Both map formulas sum over the same window as the flow formulas."""
        lo, hi = self.adjoint.window
        tangent = sensitivity_tangent_map(self.traj, self.tangent)
        adjoint = sensitivity_adjoint_map(self.traj, self.adjoint)

        assert (lo, hi) == (20, self.adjoint.n_steps - 20)
        assert tangent.horizon == adjoint.horizon == hi - lo
        assert np.isfinite(tangent.value) and np.isfinite(adjoint.value)

    def test_full_averaging_restores_identity(self):
        """Over the whole construction range tangent and adjoint values coincide."""
        tangent = sensitivity_tangent_map(self.traj, self.tangent, averaging="full")
        adjoint = sensitivity_adjoint_map(self.traj, self.adjoint, averaging="full")

        assert tangent.horizon == self.tangent.n_steps
        assert tangent.value == pytest.approx(adjoint.value, rel=1e-10, abs=1e-12)


class TestFiniteDifference:
    """Test suite for the finite-difference reference."""

    def test_quadratic_objective(self):
        """For u -> s, <u²> = s² and the central difference gives 2s exactly."""
        result = finite_difference_oracle(linear_sink(), 0.5, horizon=10.0, n_ensemble=3)

        assert result.value == pytest.approx(1.0, abs=1e-6)
        assert result.method == "finite-difference"
        assert result.stderr >= 0.0

    def test_single_member_uses_segments(self):
        """A single ensemble member estimates the error from segments."""
        result = finite_difference_oracle(linear_sink(), 0.5, horizon=10.0, n_ensemble=1)

        assert result.value == pytest.approx(1.0, abs=1e-6)
        assert result.stderr == pytest.approx(0.0, abs=1e-6)

    @pytest.mark.parametrize("kwargs", [
        {"ds": 0.0},
        {"n_ensemble": 0},
        {"horizon": -1.0},
        {"horizon": 0.05},
    ])
    def test_invalid_arguments_rejected(self, kwargs):
        """Invalid step, ensemble size or horizon raise InputError."""
        arguments = {"horizon": 10.0}
        arguments.update(kwargs)

        with pytest.raises(InputError):
            finite_difference_oracle(linear_sink(), 0.5, **arguments)


@pytest.mark.slow
class TestLongRuns:
    """Long reference runs against published values and the finite-difference reference."""

    def test_lorenz_sensitivity(self):
        """d<z>/dρ ≈ 1.01 at ρ = 28 from both formulas."""
        traj, clv, tangent, adjoint = lorenz_setup(2000.0)
        tangent_result = sensitivity_tangent_flow(traj, tangent, averaging="full")
        adjoint_result = sensitivity_adjoint_flow(traj, adjoint, averaging="full")

        assert sensitivity_adjoint_flow(traj, adjoint).value == pytest.approx(1.01, abs=0.1)
        assert tangent_result.value == pytest.approx(adjoint_result.value, abs=1e-5)
        np.testing.assert_allclose(clv.exponents, [0.906, 0.0, -14.57], atol=0.1)
        assert clv.neutral_count == 1

    def test_catmap_against_finite_differences(self):
        """The adjoint map sensitivity agrees with the ensemble reference."""
        traj, _, adjoint = catmap_setup(0.05, 100_000, buffer=40, spinup_steps=1000)
        shadow = sensitivity_adjoint_map(traj, adjoint)
        reference = finite_difference_oracle(catmap(), 0.05, ds=0.01, horizon=100_000, n_ensemble=8)

        assert abs(shadow.value - reference.value) <= 4.0 * np.hypot(shadow.stderr, reference.stderr) + 1e-3
