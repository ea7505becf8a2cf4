"""The predictability experiment: X = (dist to support, beta), first zero, announcing times."""
import math
import time
from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from app.domain.models import CoverLevel, DefaultLaw, GridSpec, InfoPath, LawKind, SetDescriptor, SetVariant, XPath
from app.domain.reports import (
    Z_95,
    AnnouncingSummary,
    AtomResult,
    ExperimentReport,
    HittingEstimate,
    LevelResult,
    MixtureCheck,
    Verdict,
    binomial_half_width,
)
from app.exceptions import HypothesisError, InvalidArgumentError
from app.services.bridge_sampler import sample_information_path
from app.services.default_law import sample_default_times, support_of
from app.services.hitting import (
    DEFAULT_CHUNK_SIZE,
    crossing_probability,
    nonincreasing_within_ci,
    scan_cells_for_zeros,
)
from app.services.set_geometry import (
    DEFAULT_DEPTH,
    cell_resolution,
    distance_to_set,
    frostman_check,
    hausdorff_dimension_analytic,
    scan_cells,
    truncated_cover,
)
from app.utils.parallel import map_chunks
from app.utils.rng import RandomStreams, StudyTag, chunk_sizes


DEFAULT_THRESHOLD = 0.05
# Zeros in (tau - margin, tau) are not scanned; estimates refer to P(gamma_0 < tau - margin).
DEFAULT_PIN_MARGIN = 0.01
ZERO_OUTSIDE_SUPPORT = "0 ∉ Γ"


def build_x_path(info: InfoPath, gamma_set: SetDescriptor, depth: int = DEFAULT_DEPTH) -> XPath:
    """
    Pair each grid time with its distance to the support and the information value.

    Args:
        info: Information path
        gamma_set: Support of the law that produced the path
        depth: Cantor recursion depth for the distance

    Returns:
        XPath on the path's grid
    """
    distance = np.asarray(distance_to_set(gamma_set, info.grid.times, depth), dtype=float)
    return XPath(grid=info.grid, tau=info.tau, distance=distance, values=info.values.copy())


def experiment_cells(gamma_set: SetDescriptor, k: int) -> CoverLevel:
    """
    Level-k scan cells of the support truncated to [min / 2, max].

    Raises:
        HypothesisError: If the support reaches 0
    """
    if gamma_set.is_empty:
        raise InvalidArgumentError("support is empty")
    low = gamma_set.lower
    if low <= 0:
        raise HypothesisError(ZERO_OUTSIDE_SUPPORT, f"support starts at {low}")
    high = gamma_set.upper
    if not math.isfinite(high):
        raise HypothesisError(ZERO_OUTSIDE_SUPPORT, "support must be bounded away from 0 and compact")
    cover = truncated_cover(gamma_set, k, 0.5 * low, high)
    return scan_cells(cover, cell_resolution(gamma_set, k))


def _values_at(x: XPath, targets: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """
    Values of beta at target times before tau, sampled from the bridge between known grid values.

    Each inserted point is drawn conditionally on the last known point to its
    left and the next grid point (or the pin) to its right.
    """
    times, values = x.grid.times, x.values
    tau = x.tau
    out = np.empty(targets.size)
    last_t, last_v = 0.0, 0.0
    for i, t in enumerate(targets):
        j = np.searchsorted(times, t)
        if j < times.size and times[j] == t:
            out[i] = values[j]
            last_t, last_v = t, values[j]
            continue
        left_idx = j - 1
        if times[left_idx] > last_t:
            last_t, last_v = times[left_idx], values[left_idx]
        if j < times.size and times[j] < tau:
            right_t, right_v = times[j], values[j]
        else:
            right_t, right_v = tau, 0.0
        span = right_t - last_t
        mean = last_v + (t - last_t) / span * (right_v - last_v)
        var = (t - last_t) * (right_t - t) / span
        out[i] = mean + math.sqrt(max(var, 0.0)) * rng.standard_normal()
        last_t, last_v = t, out[i]
    return out


def first_zero_hit(
    x: XPath,
    gamma_set: SetDescriptor,
    k: int,
    rng: np.random.Generator,
    margin: float = DEFAULT_PIN_MARGIN,
) -> Tuple[float, bool]:
    """
    First time X reaches (0, 0), at the resolution of the level-k cells.

    Scans the cells of the truncated support that end before tau - margin
    and returns the left end of the first cell where a crossing draw fires;
    otherwise returns tau. Grid times inside a cell split it, so sign changes
    already visible on the path always fire.

    Args:
        x: X path
        gamma_set: Support of the default law
        k: Cover level
        rng: Generator for endpoint and crossing draws
        margin: Guard window before tau

    Returns:
        (time, strict) with strict True iff time < tau
    """
    cells = experiment_cells(gamma_set, k)
    keep = (~cells.degenerate) & (cells.rights < x.tau - margin)
    if not keep.any():
        return x.tau, False

    lefts, rights = cells.lefts[keep], cells.rights[keep]
    inner = x.grid.times[(x.grid.times > lefts[0]) & (x.grid.times < rights[-1])]
    owner = np.searchsorted(lefts, inner, side="right") - 1
    inner = inner[inner < rights[owner]]
    points = np.unique(np.concatenate([lefts, rights, inner]))
    values = _values_at(x, points, rng)

    cell = np.searchsorted(lefts, points[:-1], side="right") - 1
    within = points[1:] <= rights[cell]
    a, b = values[:-1][within], values[1:][within]
    fire = rng.random(a.size) < crossing_probability(a, b, np.diff(points)[within])
    if fire.any():
        return float(lefts[cell[within][np.argmax(fire)]]), True
    return x.tau, False


def announcing_sequence(x: XPath, n_max: int, until: Optional[float] = None) -> List[float]:
    """
    T_n = first grid time with |X_t| <= 1/n, for n = 1..n_max.

    Only grid times up to `until` (default tau) are searched; a level with
    no such time repeats the previous value, and T_1 falls back to 0.

    Args:
        x: X path
        n_max: Number of levels (>= 1)
        until: Announced time

    Returns:
        Nondecreasing list of n_max times
    """
    if n_max < 1:
        raise InvalidArgumentError(f"n_max must be >= 1, got: {n_max}")
    horizon = x.tau if until is None else until
    mask = x.grid.times <= horizon
    times = x.grid.times[mask]
    running_min = np.minimum.accumulate(x.norm[mask])
    thresholds = 1.0 / np.arange(1, n_max + 1)
    # running_min is nonincreasing: first index with running_min <= eps
    idx = np.searchsorted(-running_min, -thresholds, side="left")

    out: List[float] = []
    previous = 0.0
    for i in idx:
        if i < times.size:
            previous = float(times[i])
        out.append(previous)
    return out


def _check_law(law: DefaultLaw) -> SetDescriptor:
    support = support_of(law)
    if law.kind == LawKind.EXPONENTIAL or support.lower <= 0:
        raise HypothesisError(ZERO_OUTSIDE_SUPPORT, f"support of the {law.kind.value} law contains 0")
    return support


def conditional_hitting(
    gamma_set: SetDescriptor,
    atom: float,
    k: int,
    n_paths: int,
    streams: RandomStreams,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    workers: int = 1,
    margin: float = DEFAULT_PIN_MARGIN,
) -> HittingEstimate:
    """
    Estimate P(the bridge pinned at `atom` hits zero in the support before `atom` - margin).

    Uses the same truncated level-k cells as the joint run.
    """
    cells = experiment_cells(gamma_set, k)
    atom_index = int(np.searchsorted(np.asarray(gamma_set.points or [atom]), atom))

    def run_chunk(index: int, size: int) -> int:
        rng = streams.stream(StudyTag.CONDITIONAL, k, atom_index, index)
        return int(np.count_nonzero(scan_cells_for_zeros(cells, atom, size, rng, margin) >= 0))

    hits = sum(map_chunks(run_chunk, chunk_sizes(n_paths, chunk_size), workers))
    p = hits / n_paths
    return HittingEstimate(p, binomial_half_width(p, n_paths), n_paths, k, cells.n_intervals,
                           float(atom), streams.seed, gamma_set)


def _run_level(
    law: DefaultLaw,
    cells: CoverLevel,
    k: int,
    n_paths: int,
    streams: RandomStreams,
    chunk_size: int,
    workers: int,
    margin: float,
) -> Tuple[int, np.ndarray, np.ndarray]:
    """Strict-hit count, and per-atom (paths, strict hits) for atomic laws."""
    atoms = np.asarray(law.atoms, dtype=float)

    def run_chunk(index: int, size: int) -> Tuple[int, np.ndarray, np.ndarray]:
        rng = streams.stream(StudyTag.EXPERIMENT, k, index)
        taus = sample_default_times(law, rng, size)
        strict = scan_cells_for_zeros(cells, taus, size, rng, margin) >= 0
        if atoms.size == 0:
            return int(strict.sum()), np.zeros(0, np.int64), np.zeros(0, np.int64)
        which = np.searchsorted(atoms, taus)
        per_atom = np.bincount(which, minlength=atoms.size)
        per_atom_strict = np.bincount(which[strict], minlength=atoms.size)
        return int(strict.sum()), per_atom, per_atom_strict

    results = map_chunks(run_chunk, chunk_sizes(n_paths, chunk_size), workers)
    n_strict = sum(r[0] for r in results)
    per_atom = sum((r[1] for r in results), np.zeros(atoms.size, np.int64))
    per_atom_strict = sum((r[2] for r in results), np.zeros(atoms.size, np.int64))
    return n_strict, per_atom, per_atom_strict


def predictability_study(
    law: DefaultLaw,
    levels: Sequence[int],
    n_paths: int,
    streams: RandomStreams,
    threshold: float = DEFAULT_THRESHOLD,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    workers: int = 1,
    conditional_paths: Optional[int] = None,
    margin: float = DEFAULT_PIN_MARGIN,
) -> ExperimentReport:
    """
    Estimate P(gamma_0 < tau) at each level and decide the verdict flags.

    For atomic laws the final level is broken down per atom and compared
    with separate conditional runs (joint = sum_r p_r * conditional_r).

    Args:
        law: Default-time law; its support must not contain 0
        levels: Cover levels, in report order
        n_paths: Paths per level (>= 1)
        streams: Seeded streams
        threshold: Verdict threshold on the final estimate
        chunk_size: Paths per stream
        workers: Threads
        conditional_paths: Paths per atom for the conditional runs (default n_paths)
        margin: Guard window before tau (>= 0)

    Returns:
        ExperimentReport

    Raises:
        HypothesisError: If 0 is in the support
    """
    if n_paths < 1:
        raise InvalidArgumentError(f"n_paths must be >= 1, got: {n_paths}")
    if not levels:
        raise InvalidArgumentError("at least one level is required")
    if not margin >= 0:
        raise InvalidArgumentError(f"margin must be >= 0, got: {margin}")
    support = _check_law(law)
    started = time.monotonic()

    rows: List[LevelResult] = []
    per_atom = per_atom_strict = np.zeros(0, np.int64)
    for k in levels:
        cells = experiment_cells(support, k)
        n_strict, per_atom, per_atom_strict = _run_level(
            law, cells, k, n_paths, streams, chunk_size, workers, margin,
        )
        p = n_strict / n_paths
        rows.append(LevelResult(k, cells.n_intervals, n_paths, n_strict, p, binomial_half_width(p, n_paths)))
        logger.debug(f"Level {k}: {n_strict}/{n_paths} strict first hits over {cells.n_intervals} cells")

    atoms: Tuple[AtomResult, ...] = ()
    mixture = None
    if law.kind == LawKind.ATOMIC:
        final_level = levels[-1]
        m_paths = conditional_paths or n_paths
        results = []
        for atom, weight, n_atom, n_atom_strict in zip(law.atoms, law.weights, per_atom, per_atom_strict):
            conditional = conditional_hitting(
                support, atom, final_level, m_paths, streams, chunk_size, workers, margin,
            )
            joint = float(n_atom_strict / n_atom) if n_atom else 0.0
            results.append(AtomResult(atom, weight, int(n_atom), joint, conditional))
        atoms = tuple(results)
        mixture = _mixture_check(rows[-1], atoms)

    final = rows[-1]
    hypothesis_holds = frostman_check(support)
    monotone = nonincreasing_within_ci([r.estimate for r in rows], [r.half_width for r in rows])
    below = final.estimate < threshold
    verdict = Verdict(
        hypothesis_holds=hypothesis_holds,
        monotone=monotone,
        below_threshold=below,
        consistent_with_predictable=(
            hypothesis_holds and monotone and below and support.variant != SetVariant.INTERVAL_UNION
        ),
        positive_hitting=final.estimate - final.half_width > 0,
    )
    report = ExperimentReport(
        law=law,
        rows=tuple(rows),
        verdict=verdict,
        seed=streams.seed,
        threshold=threshold,
        pin_margin=margin,
        dimension=hausdorff_dimension_analytic(support),
        atoms=atoms,
        mixture=mixture,
    )
    logger.info(
        f"Predictability study ({law.kind.value}): final estimate "
        f"{final.estimate:.4f}±{final.half_width:.4f}, verdict {verdict.to_dict()} "
        f"({time.monotonic() - started:.1f}s)"
    )
    return report


def predictability_experiment(
    law: DefaultLaw,
    k: int,
    n_paths: int,
    streams: RandomStreams,
    threshold: float = DEFAULT_THRESHOLD,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    workers: int = 1,
    margin: float = DEFAULT_PIN_MARGIN,
) -> ExperimentReport:
    """Single-level predictability experiment."""
    return predictability_study(law, [k], n_paths, streams, threshold, chunk_size, workers, margin=margin)


def announcing_check(
    law: DefaultLaw,
    k: int,
    n_paths: int,
    streams: RandomStreams,
    n_max: int = 1000,
    spec: GridSpec = GridSpec(),
    depth: int = DEFAULT_DEPTH,
    margin: float = DEFAULT_PIN_MARGIN,
) -> AnnouncingSummary:
    """
    Simulate X paths and check their announcing sequences.

    Per path: T_n nondecreasing, T_n <= first zero, and (when the first
    zero is tau) first zero - T_{n_max} <= 1/n_max.

    Args:
        law: Default-time law
        k: Cover level for the first-zero scan
        n_paths: Number of paths
        streams: Seeded streams; path i uses key (ANNOUNCE, k, i)
        n_max: Number of announcing levels
        spec: Grid layout around each tau
        depth: Cantor recursion depth for distances
        margin: Guard window before tau for the first-zero scan

    Returns:
        AnnouncingSummary
    """
    support = _check_law(law)
    n_strict = order_violations = bound_violations = n_converged = 0
    for i in range(n_paths):
        rng = streams.stream(StudyTag.ANNOUNCE, k, i)
        x = build_x_path(sample_information_path(law, spec, rng), support, depth)
        gamma, strict = first_zero_hit(x, support, k, rng, margin)
        seq = announcing_sequence(x, n_max, until=gamma)
        order_violations += int(any(b < a for a, b in zip(seq, seq[1:])))
        bound_violations += int(seq[-1] > gamma)
        if strict:
            n_strict += 1
        elif gamma - seq[-1] <= 1.0 / n_max:
            n_converged += 1
    summary = AnnouncingSummary(n_paths, n_strict, n_max, order_violations, bound_violations, n_converged)
    logger.info(f"Announcing check at level {k}: {summary.to_dict()}")
    return summary


def _mixture_check(final: LevelResult, atoms: Sequence[AtomResult]) -> MixtureCheck:
    mixture = math.fsum(a.weight * a.conditional.estimate for a in atoms)
    var_joint = final.estimate * (1.0 - final.estimate) / final.n_paths
    var_mix = math.fsum(
        a.weight ** 2 * a.conditional.estimate * (1.0 - a.conditional.estimate) / a.conditional.n_paths
        for a in atoms
    )
    return MixtureCheck(final.estimate, mixture, Z_95 * math.sqrt(var_joint + var_mix))
