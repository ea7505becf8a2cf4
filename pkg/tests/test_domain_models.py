"""Tests for domain models."""
import math

import numpy as np
import pytest

from app.domain.models import (
    CoverLevel,
    DefaultLaw,
    DiscreteMeasure,
    GridPolicy,
    GridSpec,
    InfoPath,
    LawKind,
    SetDescriptor,
    SetVariant,
    TimeGrid,
    XPath,
    parse_number,
)
from app.domain.reports import (
    AnnouncingSummary,
    EnergyReport,
    HittingEstimate,
    MixtureCheck,
    binomial_half_width,
)
from app.exceptions import ConfigurationError, HypothesisError, InvalidArgumentError


def test_enums():
    """Test enumeration values used in run files."""
    assert LawKind.ATOMIC.value == "atomic"
    assert LawKind.UNIFORM.value == "uniform-interval"
    assert LawKind.EXPONENTIAL.value == "exponential"
    assert LawKind.CANTOR.value == "cantor-singular"
    assert SetVariant.INTERVAL_UNION.value == "interval-union"
    assert GridPolicy.GEOMETRIC.value == "geometric-near-target"


def test_parse_number():
    """Test numbers and fraction strings."""
    assert parse_number(2, "x") == 2.0
    assert parse_number("1/3", "x") == pytest.approx(1.0 / 3.0, abs=1e-16)
    assert parse_number(" 0.25 ", "x") == 0.25

    with pytest.raises(ConfigurationError, match="'x' must be a number"):
        parse_number(True, "x")
    with pytest.raises(ConfigurationError, match="'x' must be a number or 'p/q' string"):
        parse_number("1/0", "x")


class TestSetDescriptor:
    """Tests for closed time-set descriptors."""

    def test_finite_points_sorted_and_deduplicated(self):
        """Test finite point sets."""
        target = SetDescriptor.from_dict({"variant": "finite-points", "points": [2, 1, 2]})

        assert target.points == (1.0, 2.0)
        assert target.lower == 1.0
        assert target.upper == 2.0

    def test_interval_union_must_be_disjoint(self):
        """Test overlapping intervals are rejected."""
        with pytest.raises(ConfigurationError, match="pairwise disjoint"):
            SetDescriptor.interval_union([(0.0, 1.0), (0.5, 2.0)])

    def test_unbounded_interval(self):
        """Test [a, inf) is accepted and reported unbounded."""
        target = SetDescriptor.interval_union([(1.0, math.inf)])

        assert not target.is_bounded
        assert target.upper == math.inf

    def test_cantor_from_dict(self):
        """Test Cantor specs with fraction ratios."""
        target = SetDescriptor.from_dict({"variant": "cantor", "base": [0, 1], "branches": 3, "ratio": "1/3"})

        assert target.branches == 3
        assert target.ratio == pytest.approx(1.0 / 3.0)

    def test_cantor_disjointness(self):
        """Test m * rho > 1 is rejected."""
        with pytest.raises(ConfigurationError, match="m\\*rho <= 1"):
            SetDescriptor.cantor(0.0, 1.0, branches=3, ratio=0.4)

    def test_invalid_variant(self):
        """Test unknown variant."""
        with pytest.raises(ConfigurationError, match="Invalid set variant"):
            SetDescriptor.from_dict({"variant": "fractal"})

    def test_empty_set(self):
        """Test the empty set."""
        target = SetDescriptor.empty()

        assert target.is_empty
        assert target.is_bounded
        with pytest.raises(InvalidArgumentError):
            _ = target.lower

    def test_round_trip(self):
        """Test to_dict/from_dict."""
        for target in (
            SetDescriptor.finite_points([0.5, 1.0]),
            SetDescriptor.interval_union([(0.1, 0.2), (0.5, 0.9)]),
            SetDescriptor.cantor(0.2, 0.8, 2, 0.2),
        ):
            assert SetDescriptor.from_dict(target.to_dict()) == target


class TestDefaultLaw:
    """Tests for default-time law specs."""

    def test_atomic(self):
        """Test atomic law construction."""
        law = DefaultLaw.from_dict({"kind": "atomic", "atoms": [2.0, 1.0], "weights": [0.75, 0.25]})

        assert law.atoms == (1.0, 2.0)
        assert law.weights == (0.25, 0.75)

    def test_atomic_invalid(self):
        """Test atomic law violations."""
        with pytest.raises(ConfigurationError, match="strictly positive"):
            DefaultLaw.atomic({0.0: 1.0})
        with pytest.raises(ConfigurationError, match="sum to 1"):
            DefaultLaw.atomic({1.0: 0.5, 2.0: 0.2})
        with pytest.raises(ConfigurationError, match="distinct"):
            DefaultLaw.from_dict({"kind": "atomic", "atoms": [1.0, 1.0], "weights": [0.5, 0.5]})
        with pytest.raises(ConfigurationError, match="same length"):
            DefaultLaw.from_dict({"kind": "atomic", "atoms": [1.0], "weights": [0.5, 0.5]})

    def test_uniform_and_exponential_invalid(self):
        """Test parameter checks of continuous laws."""
        with pytest.raises(ConfigurationError, match="0 <= low < high"):
            DefaultLaw.uniform(2.0, 1.0)
        with pytest.raises(ConfigurationError, match="'rate' must be positive"):
            DefaultLaw.exponential(0.0)

    def test_missing_key(self):
        """Test missing law keys are named."""
        with pytest.raises(ConfigurationError, match="law spec is missing 'high'"):
            DefaultLaw.from_dict({"kind": "uniform-interval", "low": 1.0})

    def test_round_trip(self):
        """Test to_dict/from_dict."""
        for law in (
            DefaultLaw.atomic({1.0: 0.5, 2.0: 0.5}),
            DefaultLaw.uniform(1.0, 2.0),
            DefaultLaw.exponential(0.5),
            DefaultLaw.cantor(1.0, 2.0, 2, 0.2),
        ):
            assert DefaultLaw.from_dict(law.to_dict()) == law


def test_cover_level_truncate():
    """Test intersecting a cover with a window."""
    cover = CoverLevel(1, [[0.0, 1.0], [2.0, 3.0], [4.0, 5.0]])

    cut = cover.truncate(0.5, 4.0)

    np.testing.assert_array_equal(cut.intervals, [[0.5, 1.0], [2.0, 3.0], [4.0, 4.0]])
    assert cut.degenerate.tolist() == [False, False, True]
    assert list(cut.rows())[0] == (1, 0.5, 1.0)


def test_time_grid_validation():
    """Test time grid invariants."""
    grid = TimeGrid.uniform(2.0, 4)

    np.testing.assert_allclose(grid.times, [0.0, 0.5, 1.0, 1.5, 2.0])
    assert len(grid) == 5

    with pytest.raises(InvalidArgumentError, match="must start at 0"):
        TimeGrid([0.1, 0.2])
    with pytest.raises(InvalidArgumentError, match="strictly increasing"):
        TimeGrid([0.0, 0.2, 0.2])


def test_grid_spec_validation():
    """Test grid spec parameter checks."""
    with pytest.raises(ConfigurationError, match="'ratio' must lie in"):
        GridSpec(ratio=1.5)
    with pytest.raises(ConfigurationError, match="'n_base' must be >= 1"):
        GridSpec(n_base=0)


def test_info_path_zero_set_check():
    """Test that an information path must vanish from tau on."""
    grid = TimeGrid.uniform(2.0, 4)

    path = InfoPath(1.0, grid, np.array([0.0, 0.3, 0.0, 0.0, 0.0]))
    assert path.after_tau.tolist() == [False, False, True, True, True]

    with pytest.raises(InvalidArgumentError, match="zero at t=0 and at t >= tau"):
        InfoPath(1.0, grid, np.array([0.0, 0.3, 0.0, 0.1, 0.0]))


def test_discrete_measure():
    """Test piecewise-uniform measures."""
    measure = DiscreteMeasure.uniform_on([[0.0, 1.0], [2.0, 5.0]])

    np.testing.assert_allclose(measure.weights, [0.25, 0.75])
    assert not measure.has_atom
    assert DiscreteMeasure([[0.0, 0.0], [1.0, 2.0]], [0.5, 0.5]).has_atom
    assert not DiscreteMeasure([[0.0, 0.0], [1.0, 2.0]], [0.0, 1.0]).has_atom

    with pytest.raises(InvalidArgumentError, match="sum to 1"):
        DiscreteMeasure([[0.0, 1.0]], [0.5])
    with pytest.raises(InvalidArgumentError, match="sorted and disjoint"):
        DiscreteMeasure([[0.0, 1.0], [0.5, 2.0]], [0.5, 0.5])


def test_x_path_norm_and_zero_index():
    """Test the Euclidean norm of X and its first exact zero."""
    grid = TimeGrid.uniform(2.0, 4)
    x = XPath(
        grid=grid,
        tau=1.5,
        distance=np.array([1.0, 0.5, 0.0, 0.0, 0.5]),
        values=np.array([0.0, 1.2, 0.3, 0.0, 0.0]),
    )

    np.testing.assert_allclose(x.norm, [1.0, 1.3, 0.3, 0.0, 0.5])
    assert x.zero_index == 3

    with pytest.raises(InvalidArgumentError, match="nonnegative"):
        XPath(grid=grid, tau=1.5, distance=-np.ones(5), values=np.zeros(5))


def test_binomial_half_width():
    """Test 95% half-widths."""
    assert binomial_half_width(0.5, 100) == pytest.approx(0.098)
    assert binomial_half_width(0.0, 100) == 0.0
    assert binomial_half_width(0.3, 0) == 0.0


def test_hitting_estimate_overlap():
    """Test confidence interval overlap."""
    a = HittingEstimate(0.30, 0.02, 1000, 2, 4, 1.0, 1)
    b = HittingEstimate(0.33, 0.02, 1000, 4, 16, 1.0, 1)
    c = HittingEstimate(0.40, 0.02, 1000, 6, 64, 1.0, 1)

    assert a.overlaps(b)
    assert not a.overlaps(c)
    assert a.to_dict()["ci_halfwidth"] == 0.02


def test_energy_report_infinite():
    """Test infinite energies serialize as null with a flag."""
    report = EnergyReport(math.inf, 0.0, 0, math.inf, 3, 2, 0.5)
    data = report.to_dict()

    assert report.energy_infinite
    assert data["energy"] is None
    assert data["energy_infinite"] is True
    assert data["capacity"] == 0.0
    assert data["gap"] is None


def test_mixture_check_holds():
    """Test the mixture tolerance."""
    assert MixtureCheck(0.10, 0.12, 0.03).holds
    assert not MixtureCheck(0.10, 0.20, 0.03).holds


def test_announcing_summary_fraction():
    """Test converged fraction over non-strict paths."""
    summary = AnnouncingSummary(n_paths=10, n_strict=2, n_max=100, order_violations=0,
                                bound_violations=0, n_converged=6)

    assert summary.converged_fraction == 0.75
    assert AnnouncingSummary(3, 3, 10, 0, 0, 0).converged_fraction == 1.0


def test_hypothesis_error_message():
    """Test the hypothesis name is kept on the error."""
    error = HypothesisError("0 ∉ Γ", "support starts at 0")

    assert isinstance(error, ConfigurationError)
    assert error.hypothesis == "0 ∉ Γ"
    assert "support starts at 0" in str(error)
