"""Report value objects produced by the services."""
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from app.domain.models import DefaultLaw, SetDescriptor


Z_95 = 1.96


def binomial_half_width(estimate: float, n: int) -> float:
    """95% normal-approximation half-width of a binomial proportion."""
    if n <= 0:
        return 0.0
    return Z_95 * math.sqrt(estimate * (1.0 - estimate) / n)


@dataclass(frozen=True)
class EnergyReport:
    """Minimal Riesz energy over a cover and the implied capacity."""
    energy: float
    capacity: float
    iterations: int
    gap: float
    level: int
    n_intervals: int
    s: float
    converged: bool = True

    @property
    def energy_infinite(self) -> bool:
        """True when every admissible measure has infinite energy."""
        return math.isinf(self.energy)

    def to_dict(self) -> Dict[str, Any]:
        """JSON form; infinite energies become null with a flag."""
        return {
            "level": self.level,
            "n_intervals": self.n_intervals,
            "s": self.s,
            "energy": None if self.energy_infinite else self.energy,
            "energy_infinite": self.energy_infinite,
            "capacity": self.capacity,
            "iterations": self.iterations,
            "gap": None if math.isinf(self.gap) else self.gap,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class BoxCountingResult:
    """Least-squares box-counting slope."""
    estimate: float
    degenerate: bool
    scales: Tuple[float, ...]
    counts: Tuple[int, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "estimate": self.estimate,
            "degenerate": self.degenerate,
            "scales": list(self.scales),
            "counts": list(self.counts),
        }


@dataclass(frozen=True)
class HittingEstimate:
    """Monte Carlo estimate of P(bridge pinned at `pin` hits zero on the level-k cover)."""
    estimate: float
    half_width: float
    n_paths: int
    level: int
    n_intervals: int
    pin: float
    seed: int
    target: Optional[SetDescriptor] = None

    @property
    def lower(self) -> float:
        return max(0.0, self.estimate - self.half_width)

    @property
    def upper(self) -> float:
        return min(1.0, self.estimate + self.half_width)

    def overlaps(self, other: "HittingEstimate") -> bool:
        """True when the two 95% intervals intersect."""
        return self.lower <= other.upper and other.lower <= self.upper

    def to_dict(self) -> Dict[str, Any]:
        return {
            "level": self.level,
            "n_intervals": self.n_intervals,
            "n_paths": self.n_paths,
            "estimate": self.estimate,
            "ci_halfwidth": self.half_width,
            "pin": self.pin,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class LevelResult:
    """One level of the predictability experiment."""
    level: int
    n_cells: int
    n_paths: int
    n_strict: int
    estimate: float
    half_width: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "level": self.level,
            "n_cells": self.n_cells,
            "n_paths": self.n_paths,
            "n_strict": self.n_strict,
            "estimate": self.estimate,
            "ci_halfwidth": self.half_width,
        }


@dataclass(frozen=True)
class AtomResult:
    """Per-atom breakdown: joint-run frequency among paths with tau = atom, and the conditional run."""
    atom: float
    weight: float
    n_joint: int
    joint_estimate: float
    conditional: HittingEstimate

    def to_dict(self) -> Dict[str, Any]:
        return {
            "atom": self.atom,
            "weight": self.weight,
            "n_joint": self.n_joint,
            "joint_estimate": self.joint_estimate,
            "conditional_estimate": self.conditional.estimate,
            "conditional_ci_halfwidth": self.conditional.half_width,
        }


@dataclass(frozen=True)
class MixtureCheck:
    """Comparison of the joint estimate with the atom-weighted conditional estimates."""
    joint: float
    mixture: float
    tolerance: float

    @property
    def holds(self) -> bool:
        return abs(self.joint - self.mixture) <= self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {"joint": self.joint, "mixture": self.mixture, "tolerance": self.tolerance, "holds": self.holds}


@dataclass(frozen=True)
class Verdict:
    """Experiment verdict flags."""
    hypothesis_holds: bool
    monotone: bool
    below_threshold: bool
    consistent_with_predictable: bool
    positive_hitting: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "hypothesis_holds": self.hypothesis_holds,
            "monotone": self.monotone,
            "below_threshold": self.below_threshold,
            "consistent_with_predictable": self.consistent_with_predictable,
            "positive_hitting": self.positive_hitting,
        }


@dataclass(frozen=True)
class ExperimentReport:
    """Estimates of P(gamma_0 < tau) across cover levels, with verdict flags."""
    law: DefaultLaw
    rows: Tuple[LevelResult, ...]
    verdict: Verdict
    seed: int
    threshold: float
    pin_margin: float
    dimension: float
    atoms: Tuple[AtomResult, ...] = ()
    mixture: Optional[MixtureCheck] = None

    @property
    def final(self) -> LevelResult:
        return self.rows[-1]

    @property
    def estimate(self) -> float:
        return self.final.estimate

    @property
    def half_width(self) -> float:
        return self.final.half_width

    def to_dict(self) -> Dict[str, Any]:
        return {
            "law": self.law.to_dict(),
            "estimate": self.estimate,
            "ci_halfwidth": self.half_width,
            "levels": [row.to_dict() for row in self.rows],
            "atoms": [atom.to_dict() for atom in self.atoms],
            "mixture": self.mixture.to_dict() if self.mixture else None,
            "verdict": self.verdict.to_dict(),
            "threshold": self.threshold,
            "pin_margin": self.pin_margin,
            "support_dimension": self.dimension,
            "seed": self.seed,
        }


@dataclass
class RunReport:
    """Outcome of one CLI run."""
    command: str
    config_hash: str
    version: str
    config: Dict[str, Any]
    outputs: Dict[str, Any]
    artifacts: List[str] = field(default_factory=list)
    wall_time: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        """Serializable part of the report; wall time stays out so outputs are reproducible."""
        return {
            "command": self.command,
            "config_hash": self.config_hash,
            "version": self.version,
            "config": self.config,
            "outputs": self.outputs,
            "artifacts": list(self.artifacts),
        }


@dataclass(frozen=True)
class AnnouncingSummary:
    """Path-wise checks of announcing sequences on simulated X paths."""
    n_paths: int
    n_strict: int
    n_max: int
    order_violations: int
    bound_violations: int
    n_converged: int

    @property
    def converged_fraction(self) -> float:
        """Share of paths announced from below (first zero at tau) with gap <= 1/n_max."""
        eligible = self.n_paths - self.n_strict
        return self.n_converged / eligible if eligible else 1.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_paths": self.n_paths,
            "n_strict": self.n_strict,
            "n_max": self.n_max,
            "order_violations": self.order_violations,
            "bound_violations": self.bound_violations,
            "converged_fraction": self.converged_fraction,
        }
