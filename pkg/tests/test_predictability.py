"""Tests for the predictability experiment."""
import numpy as np
import pytest

from app.domain.models import DefaultLaw, GridSpec, SetDescriptor, TimeGrid, XPath
from app.exceptions import HypothesisError, InvalidArgumentError
from app.services.bridge_sampler import sample_information_path
from app.services.default_law import support_of
from app.services.predictability import (
    announcing_check,
    announcing_sequence,
    build_x_path,
    experiment_cells,
    first_zero_hit,
    predictability_experiment,
    predictability_study,
)
from app.services.set_geometry import distance_to_set
from app.utils.rng import StudyTag


THREE_ATOMS = DefaultLaw.atomic({1.0: 1 / 3, 1.5: 1 / 3, 2.0: 1 / 3})


@pytest.fixture
def sample_x():
    """Create a hand-made X path with tau = 1.5."""
    grid = TimeGrid.uniform(2.0, 4)
    return XPath(
        grid=grid,
        tau=1.5,
        distance=np.abs(grid.times - 1.5),
        values=np.array([0.0, 0.8, 0.2, 0.0, 0.0]),
    )


def test_build_x_path(streams):
    """Test the distance component and the copied bridge values."""
    law = DefaultLaw.atomic({1.0: 1.0})
    info = sample_information_path(law, GridSpec(n_base=20), streams.stream(StudyTag.SIMULATE, 0))

    x = build_x_path(info, support_of(law))

    np.testing.assert_allclose(x.distance, np.abs(info.grid.times - 1.0))
    np.testing.assert_array_equal(x.values, info.values)
    assert x.values is not info.values
    assert x.grid.times[x.zero_index] == 1.0


@pytest.mark.parametrize("law", [
    DefaultLaw.cantor(1.0, 2.0, 2, 0.2),
    DefaultLaw.cantor(1.0, 2.0, 2, 0.45),
    DefaultLaw.uniform(1.0, 2.0),
])
def test_x_path_is_at_origin_at_tau(streams, law):
    """Test X(tau) = (0, 0) exactly for diffuse laws at full depth."""
    support = support_of(law)
    for i in range(300):
        info = sample_information_path(law, GridSpec(n_base=20), streams.stream(StudyTag.SIMULATE, 1, i))
        x = build_x_path(info, support, 40)

        assert x.zero_index is not None
        assert x.grid.times[x.zero_index] == x.tau
        assert x.distance[x.zero_index] == 0.0
        assert x.values[x.zero_index] == 0.0


class TestFirstZeroHit:
    """Tests for the first time X reaches the origin."""

    def test_single_atom_is_never_strict(self, streams):
        """Test a one-atom law gives gamma = tau."""
        law = DefaultLaw.atomic({1.0: 1.0})
        for i in range(20):
            rng = streams.stream(StudyTag.ANNOUNCE, 0, i)
            x = build_x_path(sample_information_path(law, GridSpec(n_base=50), rng), support_of(law))

            assert first_zero_hit(x, support_of(law), 4, rng) == (1.0, False)

    def test_uniform_law_hits_early(self, streams):
        """Test an interval support is often hit before tau, never after."""
        law = DefaultLaw.uniform(1.0, 2.0)
        support = support_of(law)
        strict = 0
        for i in range(300):
            rng = streams.stream(StudyTag.ANNOUNCE, 1, i)
            x = build_x_path(sample_information_path(law, GridSpec(n_base=50), rng), support)
            gamma, is_strict = first_zero_hit(x, support, 4, rng)

            assert gamma <= x.tau
            assert is_strict == (gamma < x.tau)
            if is_strict:
                assert 1.0 <= gamma < x.tau - 0.01
                strict += 1

        assert strict / 300 > 0.1

    def test_sign_change_on_grid_fires(self, streams):
        """Test a sign change between grid times inside a cell is always a hit."""
        grid = TimeGrid.uniform(2.0, 16)
        values = np.full(grid.times.size, 3.0)
        values[0] = values[-1] = 0.0
        values[np.searchsorted(grid.times, 1.375)] = -3.0
        support = SetDescriptor.interval_union([(1.0, 2.0)])
        x = XPath(grid=grid, tau=2.0, distance=distance_to_set(support, grid.times), values=values)

        for i in range(20):
            assert first_zero_hit(x, support, 2, streams.stream(StudyTag.ANNOUNCE, 2, i)) == (1.25, True)


class TestAnnouncingSequence:
    """Tests for T_n = first time |X| <= 1/n."""

    def test_sequence(self, sample_x):
        """Test the levels on a hand-made path."""
        assert announcing_sequence(sample_x, 4) == [1.0, 1.5, 1.5, 1.5]

    def test_until_earlier_time(self, sample_x):
        """Test levels not reached before `until` repeat the previous value."""
        assert announcing_sequence(sample_x, 4, until=1.0) == [1.0, 1.0, 1.0, 1.0]
        assert announcing_sequence(sample_x, 2, until=0.5) == [0.0, 0.0]

    def test_invalid_n_max(self, sample_x):
        """Test n_max >= 1."""
        with pytest.raises(InvalidArgumentError, match="n_max must be >= 1"):
            announcing_sequence(sample_x, 0)


def test_announcing_check_atomic(streams):
    """Test announcing sequences of an atomic law converge to tau from below."""
    law = DefaultLaw.atomic({1.0: 0.5, 2.0: 0.5})

    summary = announcing_check(law, 4, 200, streams, n_max=1000)

    assert summary.order_violations == 0
    assert summary.bound_violations == 0
    assert summary.n_strict == 0
    assert summary.converged_fraction >= 0.98


@pytest.mark.slow
@pytest.mark.parametrize("law", [DefaultLaw.cantor(1.0, 2.0, 2, 0.2), DefaultLaw.uniform(1.0, 2.0)],
                         ids=["cantor-fifth", "uniform"])
def test_announcing_check_diffuse(streams, law):
    """Test announcing sequences on laws whose first zero can precede tau."""
    summary = announcing_check(law, 4, 1000, streams, n_max=1000)

    assert summary.n_paths == 1000
    assert summary.order_violations == 0
    assert summary.bound_violations == 0
    assert 0 < summary.n_strict < 1000
    assert summary.converged_fraction >= 0.9


def test_announcing_sequence_stays_below_first_zero(streams):
    """Test T_n is nondecreasing and never passes the first zero on Cantor paths."""
    law = DefaultLaw.cantor(1.0, 2.0, 2, 0.2)
    support = support_of(law)
    strict = 0
    for i in range(100):
        rng = streams.stream(StudyTag.ANNOUNCE, 5, i)
        x = build_x_path(sample_information_path(law, GridSpec(n_base=100), rng), support)
        gamma, is_strict = first_zero_hit(x, support, 4, rng)
        seq = announcing_sequence(x, 1000, until=gamma)

        assert all(b >= a for a, b in zip(seq, seq[1:]))
        assert seq[-1] <= gamma <= x.tau
        strict += is_strict

    assert strict > 0


def test_experiment_cells():
    """Test cells of the truncated support and the 0-outside-support check."""
    assert experiment_cells(SetDescriptor.interval_union([(1.0, 2.0)]), 2).n_intervals == 4
    with pytest.raises(HypothesisError, match="0 ∉ Γ"):
        experiment_cells(SetDescriptor.interval_union([(0.0, 1.0)]), 2)


class TestPredictabilityStudy:
    """Tests for P(gamma_0 < tau) across levels."""

    def test_atomic_law(self, streams):
        """Test atomic laws are never hit early and the mixture identity holds."""
        report = predictability_study(THREE_ATOMS, [2, 4], 3000, streams, conditional_paths=1000)

        assert report.estimate < 0.01
        assert report.mixture.holds
        assert sum(atom.n_joint for atom in report.atoms) == 3000
        assert [atom.atom for atom in report.atoms] == [1.0, 1.5, 2.0]
        assert report.verdict.hypothesis_holds
        assert report.verdict.below_threshold
        assert report.verdict.consistent_with_predictable
        assert not report.verdict.positive_hitting

    def test_atom_counts_follow_weights(self, streams):
        """Test per-atom path counts against the law."""
        law = DefaultLaw.atomic({1.0: 0.25, 2.0: 0.75})
        report = predictability_study(law, [3], 4000, streams)
        counts = [atom.n_joint for atom in report.atoms]

        assert abs(counts[0] / 4000 - 0.25) < 3 * np.sqrt(0.25 * 0.75 / 4000)
        assert report.to_dict()["pin_margin"] == 0.01

    @pytest.mark.parametrize("law", [DefaultLaw.exponential(1.0), DefaultLaw.uniform(0.0, 1.0)],
                             ids=["exponential", "uniform-from-zero"])
    def test_zero_in_support(self, streams, law):
        """Test supports containing 0 are rejected."""
        with pytest.raises(HypothesisError, match="0 ∉ Γ"):
            predictability_study(law, [2], 100, streams)

    def test_uniform_law_is_hit(self, streams):
        """Test an interval support gives a positive estimate."""
        report = predictability_study(DefaultLaw.uniform(1.0, 2.0), [2, 4], 2000, streams)

        assert report.verdict.positive_hitting
        assert not report.verdict.hypothesis_holds
        assert not report.verdict.consistent_with_predictable
        assert report.estimate > 0.1
        assert report.mixture is None

    def test_small_dimension_monotone(self, streams):
        """Test a Cantor law with dimension below 1/2."""
        report = predictability_study(DefaultLaw.cantor(1.0, 2.0, 2, 0.2), [2, 4, 6], 3000, streams)

        assert report.verdict.hypothesis_holds
        assert report.verdict.monotone
        assert report.rows[-1].estimate <= report.rows[0].estimate
        assert report.dimension == pytest.approx(0.4307, abs=1e-4)

    @pytest.mark.slow
    def test_thin_cantor_law_is_predictable(self, streams):
        """Test a thin Cantor law ends below 0.05 and is reported consistent."""
        report = predictability_study(DefaultLaw.cantor(1.0, 2.0, 2, 0.05), [2, 4, 6, 8], 10_000, streams)

        assert report.estimate < 0.05
        assert report.verdict.consistent_with_predictable

    def test_workers_do_not_change_results(self, streams):
        """Test threads only change scheduling."""
        law = DefaultLaw.cantor(1.0, 2.0, 2, 0.2)

        serial = predictability_study(law, [3], 1500, streams, chunk_size=500, workers=1)
        threaded = predictability_study(law, [3], 1500, streams, chunk_size=500, workers=3)

        assert serial.rows == threaded.rows

    def test_invalid_arguments(self, streams):
        """Test margin, path and level checks."""
        with pytest.raises(InvalidArgumentError, match="margin must be >= 0"):
            predictability_study(THREE_ATOMS, [2], 100, streams, margin=-0.1)
        with pytest.raises(InvalidArgumentError, match="n_paths must be >= 1"):
            predictability_study(THREE_ATOMS, [2], 0, streams)
        with pytest.raises(InvalidArgumentError, match="at least one level"):
            predictability_study(THREE_ATOMS, [], 100, streams)


def test_single_level_experiment(streams):
    """Test the one-level entry point."""
    report = predictability_experiment(DefaultLaw.uniform(1.0, 2.0), 3, 500, streams)

    assert len(report.rows) == 1
    assert report.final.level == 3
    assert report.final.n_cells == 8
