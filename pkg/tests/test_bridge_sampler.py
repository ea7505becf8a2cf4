"""Tests for bridge and information-process sampling."""
import math

import numpy as np
import pytest
from scipy import stats

from app.domain.models import DefaultLaw, GridPolicy, GridSpec, TimeGrid
from app.exceptions import InvalidArgumentError
from app.services.bridge_sampler import (
    bridge_transition,
    build_grid,
    sample_bridge_path,
    sample_bridge_values,
    sample_information_path,
    sample_information_values,
)
from app.utils.rng import StudyTag


class TestBridgeTransition:
    """Tests for the one-step bridge law."""

    def test_step_to_pin(self):
        """Test a step onto the pin is deterministic zero."""
        assert bridge_transition(0.7, 0.5, 1.0, 1.0) == (0.0, 0.0)

    def test_midpoint_from_zero(self):
        """Test beta_{r/2} from 0 has variance r/4."""
        mean, var = bridge_transition(0.0, 0.0, 0.5, 1.0)

        assert mean == 0.0
        assert var == pytest.approx(0.25)

    def test_general_step(self):
        """Test mean x(r-t)/(r-s) and variance (t-s)(r-t)/(r-s)."""
        mean, var = bridge_transition(1.0, 0.2, 0.6, 1.0)

        assert mean == pytest.approx(0.5)
        assert var == pytest.approx(0.4 * 0.4 / 0.8)

    def test_vectorized(self):
        """Test array arguments."""
        mean, var = bridge_transition(np.array([1.0, 2.0]), 0.0, 0.5, np.array([1.0, 2.0]))

        np.testing.assert_allclose(mean, [0.5, 1.5])
        np.testing.assert_allclose(var, [0.25, 0.375])

    @pytest.mark.parametrize("s,t,r", [(0.5, 0.5, 1.0), (0.6, 0.5, 1.0), (-0.1, 0.5, 1.0), (0.1, 1.5, 1.0)])
    def test_invalid_times(self, s, t, r):
        """Test 0 <= s < t <= r is enforced."""
        with pytest.raises(InvalidArgumentError):
            bridge_transition(0.0, s, t, r)


class TestBuildGrid:
    """Tests for grid layouts."""

    def test_uniform_policy(self):
        """Test the uniform policy adds only the target."""
        grid = build_grid(GridSpec(policy=GridPolicy.UNIFORM, n_base=10), 1.0)

        assert grid.times[0] == 0.0
        assert 1.0 in grid.times
        assert grid.times[-1] == pytest.approx(1.25)
        assert len(grid) == 11

    def test_geometric_refinement(self):
        """Test spacing shrinks geometrically to the floor around the target."""
        spec = GridSpec(policy=GridPolicy.GEOMETRIC, n_base=200, ratio=0.5, spacing_floor=1e-9)
        target = 1.3
        grid = build_grid(spec, target)

        assert target in grid.times
        gaps = np.abs(grid.times - target)
        smallest = gaps[gaps > 0].min()
        assert 1e-9 * target <= smallest < 2e-9 * target
        assert np.all(np.diff(grid.times) > 0)

    def test_extra_times_and_horizon(self):
        """Test requested times are included and the horizon respected."""
        spec = GridSpec(policy=GridPolicy.UNIFORM, n_base=4, horizon=2.0, extra_times=(0.3, 0.77))
        grid = build_grid(spec, 1.0)

        assert 0.3 in grid.times
        assert 0.77 in grid.times
        assert grid.times[-1] == 2.0


class TestBridgeValues:
    """Tests for bridge sampling."""

    def test_pinned_zeros(self, rng):
        """Test exact zeros at 0 and from the pin on."""
        grid = TimeGrid.uniform(2.0, 8)
        path = sample_bridge_path(1.0, grid, rng)

        assert path.values[0] == 0.0
        assert np.all(path.values[grid.times >= 1.0] == 0.0)
        assert np.all(path.values[(grid.times > 0) & (grid.times < 1.0)] != 0.0)

    def test_one_pin_per_path(self, rng):
        """Test per-path pins."""
        times = np.array([0.0, 0.5, 1.0, 1.5, 2.0])
        values = sample_bridge_values(np.array([1.0, 2.0]), times, 2, rng)

        assert np.all(values[0, 2:] == 0.0)
        assert np.all(values[1, 1:4] != 0.0)
        assert values[1, 4] == 0.0

    def test_invalid_inputs(self, rng):
        """Test time and pin checks."""
        with pytest.raises(InvalidArgumentError, match="strictly increasing"):
            sample_bridge_values(1.0, np.array([0.0, 0.5, 0.5]), 3, rng)
        with pytest.raises(InvalidArgumentError, match="pin times must be positive"):
            sample_bridge_values(0.0, np.array([0.0, 0.5]), 3, rng)

    def test_moments(self, streams):
        """Test means, variances and a covariance against the bridge law."""
        n = 100_000
        times = np.array([0.1, 0.25, 0.5, 0.75, 0.9])
        values = sample_bridge_values(1.0, times, n, streams.stream(StudyTag.SIMULATE, 0))

        for i, t in enumerate(times):
            var = t * (1.0 - t)
            column = values[:, i]
            assert abs(column.mean()) < 3 * math.sqrt(var / n)
            assert abs(column.var() - var) < 3 * var * math.sqrt(2.0 / (n - 1))

        x, y = values[:, 1], values[:, 3]
        cov = 0.25 * (1.0 - 0.75)
        se = math.sqrt((0.25 * 0.75 * 0.75 * 0.25 + cov ** 2) / n)
        assert abs(np.mean(x * y) - cov) < 3 * se

    def test_grid_refinement_consistency(self, streams):
        """Test the law at t = 0.5 does not depend on the intermediate grid."""
        n = 50_000
        coarse = sample_bridge_values(1.0, np.array([0.5]), n, streams.stream(StudyTag.SIMULATE, 1))[:, 0]
        fine_times = np.linspace(0.05, 0.95, 19)
        fine = sample_bridge_values(1.0, fine_times, n, streams.stream(StudyTag.SIMULATE, 2))[:, 9]

        assert fine_times[9] == pytest.approx(0.5)
        se = 0.25 * math.sqrt(2.0 / (n - 1))
        assert abs(coarse.var() - fine.var()) < 3 * math.sqrt(2.0) * se


class TestInformationPath:
    """Tests for the information process."""

    def test_zero_set_identity(self, streams):
        """Test beta_t = 0 at a grid time iff t >= tau."""
        law = DefaultLaw.atomic({1.0: 1 / 3, 1.5: 1 / 3, 2.0: 1 / 3})
        spec = GridSpec(n_base=50)
        violations = 0
        for i in range(500):
            path = sample_information_path(law, spec, streams.stream(StudyTag.SIMULATE, i))
            positive = path.grid.times > 0
            violations += int(np.count_nonzero(((path.values == 0.0) != path.after_tau) & positive))
            assert path.tau in path.grid.times

        assert violations == 0

    @pytest.mark.slow
    def test_zero_set_identity_acceptance(self, streams):
        """Test the zero-set identity on 10^4 paths of a continuous law."""
        law = DefaultLaw.uniform(1.0, 2.0)
        spec = GridSpec()
        violations = 0
        for i in range(10_000):
            path = sample_information_path(law, spec, streams.stream(StudyTag.SIMULATE, i))
            positive = path.grid.times > 0
            violations += int(np.count_nonzero(((path.values == 0.0) != path.after_tau) & positive))

        assert violations == 0

    def test_conditional_law(self, streams):
        """Test a one-atom information process matches the bridge pinned at that atom."""
        n = 10_000
        law = DefaultLaw.atomic({1.0: 1.0})
        times = np.array([0.25, 0.5])
        taus, info = sample_information_values(law, times, n, streams.stream(StudyTag.SIMULATE, 3))
        bridge = sample_bridge_values(1.0, times, n, streams.stream(StudyTag.SIMULATE, 4))

        assert np.all(taus == 1.0)
        result = stats.ks_2samp(info[:, 1], bridge[:, 1])
        assert result.statistic < 1.63 * math.sqrt(2.0 / n)

    def test_conditional_mixture(self, streams):
        """Test values given tau = r are Gaussian with variance t(r-t)/r."""
        n = 20_000
        law = DefaultLaw.atomic({1.0: 0.5, 2.0: 0.5})
        taus, info = sample_information_values(law, np.array([0.5]), n, streams.stream(StudyTag.SIMULATE, 5))

        for r in (1.0, 2.0):
            sample = info[taus == r, 0]
            sd = math.sqrt(0.5 * (r - 0.5) / r)
            result = stats.kstest(sample, "norm", args=(0.0, sd))
            assert result.statistic < 1.63 / math.sqrt(sample.size)
