"""Domain models for the lab."""
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from app.exceptions import ConfigurationError, InvalidArgumentError


# Branch disjointness m*rho <= 1 is checked with this slack so that "1/3"-style ratios pass.
RATIO_SLACK = 1e-15


class LawKind(Enum):
    """Default-time law kinds."""
    ATOMIC = "atomic"
    UNIFORM = "uniform-interval"
    EXPONENTIAL = "exponential"
    CANTOR = "cantor-singular"


class SetVariant(Enum):
    """Closed time-set variants."""
    FINITE_POINTS = "finite-points"
    INTERVAL_UNION = "interval-union"
    CANTOR = "cantor"


class GridPolicy(Enum):
    """Time grid refinement policies."""
    UNIFORM = "uniform"
    GEOMETRIC = "geometric-near-target"


def parse_number(value: Any, key: str) -> float:
    """Parse a JSON number or a "p/q" fraction string.

    Args:
        value: Raw value from a spec
        key: Spec key, used in error messages

    Returns:
        The value as float

    Raises:
        ConfigurationError: If the value is not numeric
    """
    if isinstance(value, bool):
        raise ConfigurationError(f"'{key}' must be a number, got: {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(Fraction(value.strip()))
        except (ValueError, ZeroDivisionError):
            pass
    raise ConfigurationError(f"'{key}' must be a number or 'p/q' string, got: {value!r}")


def _require(data: Dict[str, Any], key: str, owner: str) -> Any:
    if key not in data:
        raise ConfigurationError(f"{owner} spec is missing '{key}'")
    return data[key]


def _parse_base(raw: Any, owner: str) -> Tuple[float, float]:
    if not isinstance(raw, (list, tuple)) or len(raw) != 2:
        raise ConfigurationError(f"{owner} 'base' must be a pair [a, b], got: {raw!r}")
    return parse_number(raw[0], "base"), parse_number(raw[1], "base")


def _validate_cantor(base: Tuple[float, float], branches: int, ratio: float) -> None:
    a, b = base
    if not (math.isfinite(a) and math.isfinite(b)) or a < 0 or b <= a:
        raise ConfigurationError(f"cantor base must satisfy 0 <= a < b < inf, got: [{a}, {b}]")
    if int(branches) != branches or branches < 2:
        raise ConfigurationError(f"cantor 'branches' must be an integer m >= 2, got: {branches}")
    if not 0 < ratio < 1:
        raise ConfigurationError(f"cantor 'ratio' must lie in (0, 1), got: {ratio}")
    if branches * ratio > 1 + RATIO_SLACK:
        raise ConfigurationError(
            f"cantor requires m*rho <= 1 (branches must be disjoint), "
            f"got m={branches}, rho={ratio}, m*rho={branches * ratio:.6g}"
        )


@dataclass(frozen=True)
class SetDescriptor:
    """Closed subset of [0, inf): finite points, interval union or self-similar Cantor set."""
    variant: SetVariant
    points: Tuple[float, ...] = ()
    intervals: Tuple[Tuple[float, float], ...] = ()
    base: Tuple[float, float] = (0.0, 1.0)
    branches: int = 2
    ratio: float = 1.0 / 3.0

    def __post_init__(self):
        """Validate the descriptor invariants."""
        if self.variant == SetVariant.FINITE_POINTS:
            pts = self.points
            if any(not math.isfinite(p) or p < 0 for p in pts):
                raise ConfigurationError(f"finite-points must be finite and >= 0, got: {list(pts)}")
            if any(b <= a for a, b in zip(pts, pts[1:])):
                raise ConfigurationError("finite-points must be sorted strictly increasing")
        elif self.variant == SetVariant.INTERVAL_UNION:
            for a, b in self.intervals:
                if math.isnan(a) or math.isnan(b) or a < 0 or b < a or math.isinf(a):
                    raise ConfigurationError(f"invalid interval [{a}, {b}]")
            for (_, b1), (a2, _) in zip(self.intervals, self.intervals[1:]):
                if a2 <= b1:
                    raise ConfigurationError("interval-union must be sorted and pairwise disjoint")
        else:
            _validate_cantor(self.base, self.branches, self.ratio)

    @classmethod
    def finite_points(cls, points: Iterable[float]) -> "SetDescriptor":
        """Build a finite point set (sorted, duplicates removed)."""
        return cls(SetVariant.FINITE_POINTS, points=tuple(sorted({float(p) for p in points})))

    @classmethod
    def interval_union(cls, intervals: Iterable[Sequence[float]]) -> "SetDescriptor":
        """Build a union of closed intervals."""
        pairs = sorted((float(a), float(b)) for a, b in intervals)
        return cls(SetVariant.INTERVAL_UNION, intervals=tuple(pairs))

    @classmethod
    def cantor(cls, a: float, b: float, branches: int = 2, ratio: float = 1.0 / 3.0) -> "SetDescriptor":
        """Build a self-similar Cantor set on [a, b]."""
        return cls(SetVariant.CANTOR, base=(float(a), float(b)), branches=int(branches), ratio=float(ratio))

    @classmethod
    def empty(cls) -> "SetDescriptor":
        """The empty set."""
        return cls(SetVariant.FINITE_POINTS)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SetDescriptor":
        """Create a descriptor from its JSON specification."""
        if not isinstance(data, dict):
            raise ConfigurationError(f"set spec must be an object, got: {data!r}")
        raw_variant = _require(data, "variant", "set")
        try:
            variant = SetVariant(raw_variant)
        except ValueError:
            raise ConfigurationError(
                f"Invalid set variant: {raw_variant}. "
                f"Valid options: {', '.join(v.value for v in SetVariant)}"
            )
        if variant == SetVariant.FINITE_POINTS:
            points = _require(data, "points", "set")
            return cls.finite_points(parse_number(p, "points") for p in points)
        if variant == SetVariant.INTERVAL_UNION:
            intervals = _require(data, "intervals", "set")
            pairs = []
            for item in intervals:
                if not isinstance(item, (list, tuple)) or len(item) != 2:
                    raise ConfigurationError(f"interval must be a pair [a, b], got: {item!r}")
                pairs.append((parse_number(item[0], "intervals"), parse_number(item[1], "intervals")))
            return cls.interval_union(pairs)
        a, b = _parse_base(_require(data, "base", "set"), "set")
        return cls.cantor(
            a, b,
            branches=int(parse_number(data.get("branches", 2), "branches")),
            ratio=parse_number(_require(data, "ratio", "set"), "ratio"),
        )

    def to_dict(self) -> Dict[str, Any]:
        """JSON specification of the descriptor."""
        if self.variant == SetVariant.FINITE_POINTS:
            return {"variant": self.variant.value, "points": list(self.points)}
        if self.variant == SetVariant.INTERVAL_UNION:
            return {"variant": self.variant.value, "intervals": [list(iv) for iv in self.intervals]}
        return {
            "variant": self.variant.value,
            "base": list(self.base),
            "branches": self.branches,
            "ratio": self.ratio,
        }

    @property
    def is_empty(self) -> bool:
        """True for the empty set."""
        if self.variant == SetVariant.FINITE_POINTS:
            return not self.points
        if self.variant == SetVariant.INTERVAL_UNION:
            return not self.intervals
        return False

    @property
    def lower(self) -> float:
        """Smallest element of the set."""
        if self.is_empty:
            raise InvalidArgumentError("empty set has no lower bound")
        if self.variant == SetVariant.FINITE_POINTS:
            return self.points[0]
        if self.variant == SetVariant.INTERVAL_UNION:
            return self.intervals[0][0]
        return self.base[0]

    @property
    def upper(self) -> float:
        """Largest element of the set (may be inf for interval unions)."""
        if self.is_empty:
            raise InvalidArgumentError("empty set has no upper bound")
        if self.variant == SetVariant.FINITE_POINTS:
            return self.points[-1]
        if self.variant == SetVariant.INTERVAL_UNION:
            return self.intervals[-1][1]
        return self.base[1]

    @property
    def is_bounded(self) -> bool:
        """True when the set is compact."""
        return self.is_empty or math.isfinite(self.upper)


@dataclass(frozen=True, eq=False)
class CoverLevel:
    """Level-k cover: closed intervals, shape (n, 2), sorted by left end."""
    level: int
    intervals: np.ndarray

    def __post_init__(self):
        """Normalize the interval array."""
        arr = np.asarray(self.intervals, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "intervals", arr)
        if self.level < 0:
            raise InvalidArgumentError(f"cover level must be >= 0, got: {self.level}")

    @property
    def n_intervals(self) -> int:
        """Number of cover intervals."""
        return int(self.intervals.shape[0])

    @property
    def lefts(self) -> np.ndarray:
        return self.intervals[:, 0]

    @property
    def rights(self) -> np.ndarray:
        return self.intervals[:, 1]

    @property
    def lengths(self) -> np.ndarray:
        return self.intervals[:, 1] - self.intervals[:, 0]

    @property
    def degenerate(self) -> np.ndarray:
        """Mask of zero-length intervals (atoms)."""
        return self.lengths <= 0.0

    def truncate(self, low: float, high: float) -> "CoverLevel":
        """Intersect every interval with [low, high], dropping empty pieces."""
        lefts = np.maximum(self.lefts, low)
        rights = np.minimum(self.rights, high)
        keep = lefts <= rights
        return CoverLevel(self.level, np.column_stack([lefts[keep], rights[keep]]))

    def rows(self) -> Iterable[Tuple[int, float, float]]:
        """(level, left, right) rows for CSV export."""
        for left, right in self.intervals:
            yield self.level, float(left), float(right)


@dataclass(frozen=True)
class DefaultLaw:
    """Distribution of the default time tau."""
    kind: LawKind
    atoms: Tuple[float, ...] = ()
    weights: Tuple[float, ...] = ()
    low: float = 0.0
    high: float = 1.0
    rate: float = 1.0
    base: Tuple[float, float] = (0.0, 1.0)
    branches: int = 2
    ratio: float = 1.0 / 3.0

    WEIGHT_TOLERANCE = 1e-12

    def __post_init__(self):
        """Validate the law parameters."""
        if self.kind == LawKind.ATOMIC:
            if not self.atoms or len(self.atoms) != len(self.weights):
                raise ConfigurationError("atomic law needs matching non-empty 'atoms' and 'weights'")
            if any(not math.isfinite(a) or a <= 0 for a in self.atoms):
                raise ConfigurationError(f"atoms must be strictly positive times, got: {list(self.atoms)}")
            if any(b <= a for a, b in zip(self.atoms, self.atoms[1:])):
                raise ConfigurationError("atoms must be distinct")
            if any(w < 0 for w in self.weights):
                raise ConfigurationError("atomic weights must be nonnegative")
            total = math.fsum(self.weights)
            if abs(total - 1.0) > self.WEIGHT_TOLERANCE:
                raise ConfigurationError(f"atomic weights must sum to 1, got: {total!r}")
        elif self.kind == LawKind.UNIFORM:
            if not (math.isfinite(self.low) and math.isfinite(self.high)) or self.low < 0 or self.high <= self.low:
                raise ConfigurationError(f"uniform law needs 0 <= low < high, got: [{self.low}, {self.high}]")
        elif self.kind == LawKind.EXPONENTIAL:
            if not (math.isfinite(self.rate) and self.rate > 0):
                raise ConfigurationError(f"exponential 'rate' must be positive, got: {self.rate}")
        else:
            _validate_cantor(self.base, self.branches, self.ratio)

    @classmethod
    def atomic(cls, atoms: Dict[float, float]) -> "DefaultLaw":
        """Atomic law from an {atom: weight} mapping."""
        items = sorted((float(a), float(w)) for a, w in atoms.items())
        return cls(LawKind.ATOMIC, atoms=tuple(a for a, _ in items), weights=tuple(w for _, w in items))

    @classmethod
    def uniform(cls, low: float, high: float) -> "DefaultLaw":
        return cls(LawKind.UNIFORM, low=float(low), high=float(high))

    @classmethod
    def exponential(cls, rate: float) -> "DefaultLaw":
        return cls(LawKind.EXPONENTIAL, rate=float(rate))

    @classmethod
    def cantor(cls, a: float, b: float, branches: int = 2, ratio: float = 1.0 / 3.0) -> "DefaultLaw":
        """Cantor-singular law: uniform random digits on the self-similar set over [a, b]."""
        return cls(LawKind.CANTOR, base=(float(a), float(b)), branches=int(branches), ratio=float(ratio))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DefaultLaw":
        """Create a law from its JSON specification."""
        if not isinstance(data, dict):
            raise ConfigurationError(f"law spec must be an object, got: {data!r}")
        raw_kind = _require(data, "kind", "law")
        try:
            kind = LawKind(raw_kind)
        except ValueError:
            raise ConfigurationError(
                f"Invalid law kind: {raw_kind}. "
                f"Valid options: {', '.join(k.value for k in LawKind)}"
            )
        if kind == LawKind.ATOMIC:
            atoms = [parse_number(a, "atoms") for a in _require(data, "atoms", "law")]
            weights = [parse_number(w, "weights") for w in _require(data, "weights", "law")]
            if len(atoms) != len(weights):
                raise ConfigurationError("law 'atoms' and 'weights' must have the same length")
            if len(set(atoms)) != len(atoms):
                raise ConfigurationError("atoms must be distinct")
            return cls.atomic(dict(zip(atoms, weights)))
        if kind == LawKind.UNIFORM:
            return cls.uniform(
                parse_number(_require(data, "low", "law"), "low"),
                parse_number(_require(data, "high", "law"), "high"),
            )
        if kind == LawKind.EXPONENTIAL:
            return cls.exponential(parse_number(_require(data, "rate", "law"), "rate"))
        a, b = _parse_base(_require(data, "base", "law"), "law")
        return cls.cantor(
            a, b,
            branches=int(parse_number(data.get("branches", 2), "branches")),
            ratio=parse_number(_require(data, "ratio", "law"), "ratio"),
        )

    def to_dict(self) -> Dict[str, Any]:
        """JSON specification of the law."""
        if self.kind == LawKind.ATOMIC:
            return {"kind": self.kind.value, "atoms": list(self.atoms), "weights": list(self.weights)}
        if self.kind == LawKind.UNIFORM:
            return {"kind": self.kind.value, "low": self.low, "high": self.high}
        if self.kind == LawKind.EXPONENTIAL:
            return {"kind": self.kind.value, "rate": self.rate}
        return {"kind": self.kind.value, "base": list(self.base), "branches": self.branches, "ratio": self.ratio}


@dataclass(frozen=True)
class GridSpec:
    """How to lay out the time grid of a simulated path."""
    policy: GridPolicy = GridPolicy.GEOMETRIC
    n_base: int = 200
    horizon: Optional[float] = None
    ratio: float = 0.5
    spacing_floor: float = 1e-9
    extra_times: Tuple[float, ...] = ()

    def __post_init__(self):
        """Validate grid parameters."""
        if self.n_base < 1:
            raise ConfigurationError(f"grid 'n_base' must be >= 1, got: {self.n_base}")
        if not 0 < self.ratio < 1:
            raise ConfigurationError(f"grid 'ratio' must lie in (0, 1), got: {self.ratio}")
        if not 0 < self.spacing_floor < 1:
            raise ConfigurationError(f"grid 'spacing_floor' must lie in (0, 1), got: {self.spacing_floor}")
        if self.horizon is not None and not self.horizon > 0:
            raise ConfigurationError(f"grid 'horizon' must be positive, got: {self.horizon}")


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing times starting at 0."""
    times: np.ndarray
    policy: GridPolicy = GridPolicy.UNIFORM

    def __post_init__(self):
        """Validate grid monotonicity."""
        arr = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", arr)
        if arr.ndim != 1 or arr.size < 2:
            raise InvalidArgumentError("time grid needs at least two times")
        if arr[0] != 0.0:
            raise InvalidArgumentError(f"time grid must start at 0, got: {arr[0]}")
        if not np.all(np.isfinite(arr)) or np.any(np.diff(arr) <= 0):
            raise InvalidArgumentError("time grid must be finite and strictly increasing")

    @classmethod
    def uniform(cls, horizon: float, n_steps: int) -> "TimeGrid":
        """Uniform grid with n_steps steps on [0, horizon]."""
        return cls(np.linspace(0.0, horizon, n_steps + 1), GridPolicy.UNIFORM)

    def __len__(self) -> int:
        return int(self.times.size)


@dataclass(frozen=True, eq=False)
class BridgePath:
    """Sampled Brownian bridge pinned to zero at time `pin`."""
    grid: TimeGrid
    pin: float
    values: np.ndarray

    def __post_init__(self):
        """Check pinning."""
        if self.values.shape != self.grid.times.shape:
            raise InvalidArgumentError("bridge values must match the grid")
        if self.values[0] != 0.0 or np.any(self.values[self.grid.times >= self.pin] != 0.0):
            raise InvalidArgumentError("bridge values must be exactly zero at t=0 and at t >= pin")


@dataclass(frozen=True, eq=False)
class InfoPath:
    """Information process sampled on a grid, with its realized default time."""
    tau: float
    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        """Check the zero-set identity on the grid."""
        if self.values.shape != self.grid.times.shape:
            raise InvalidArgumentError("information values must match the grid")
        if self.values[0] != 0.0 or np.any(self.values[self.grid.times >= self.tau] != 0.0):
            raise InvalidArgumentError("information values must be exactly zero at t=0 and at t >= tau")

    @property
    def after_tau(self) -> np.ndarray:
        """Mask of grid times at or after the default."""
        return self.grid.times >= self.tau


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Probability measure: mass w_i spread uniformly over interval i (atoms when degenerate)."""
    intervals: np.ndarray
    weights: np.ndarray

    WEIGHT_TOLERANCE = 1e-12

    def __post_init__(self):
        """Validate simplex weights and disjointness."""
        ivs = np.asarray(self.intervals, dtype=float).reshape(-1, 2)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        object.__setattr__(self, "intervals", ivs)
        object.__setattr__(self, "weights", w)
        if ivs.shape[0] != w.size or w.size == 0:
            raise InvalidArgumentError("measure needs one weight per interval")
        if np.any(w < 0) or abs(math.fsum(w) - 1.0) > self.WEIGHT_TOLERANCE:
            raise InvalidArgumentError(f"measure weights must be >= 0 and sum to 1, got sum {math.fsum(w)!r}")
        if np.any(ivs[:, 1] < ivs[:, 0]) or np.any(ivs[1:, 0] < ivs[:-1, 1]):
            raise InvalidArgumentError("measure intervals must be sorted and disjoint")

    @classmethod
    def uniform_on(cls, intervals: np.ndarray) -> "DiscreteMeasure":
        """Normalized Lebesgue measure on a union of non-degenerate intervals."""
        ivs = np.asarray(intervals, dtype=float).reshape(-1, 2)
        lengths = ivs[:, 1] - ivs[:, 0]
        return cls(ivs, lengths / lengths.sum())

    @property
    def lengths(self) -> np.ndarray:
        return self.intervals[:, 1] - self.intervals[:, 0]

    @property
    def has_atom(self) -> bool:
        """True when a degenerate interval carries positive mass."""
        return bool(np.any((self.lengths <= 0) & (self.weights > 0)))


@dataclass(frozen=True, eq=False)
class XPath:
    """The pair (dist to support, beta) on the grid of an information path."""
    grid: TimeGrid
    tau: float
    distance: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        """Check component shapes and signs."""
        if self.distance.shape != self.grid.times.shape or self.values.shape != self.grid.times.shape:
            raise InvalidArgumentError("X components must match the grid")
        if np.any(self.distance < 0):
            raise InvalidArgumentError("distance component must be nonnegative")

    @property
    def norm(self) -> np.ndarray:
        """Euclidean norm of X at each grid time."""
        return np.hypot(self.distance, self.values)

    @property
    def zero_index(self) -> Optional[int]:
        """First grid index where X = (0, 0) exactly."""
        hits = np.flatnonzero((self.distance == 0.0) & (self.values == 0.0) & (self.grid.times > 0))
        return int(hits[0]) if hits.size else None
