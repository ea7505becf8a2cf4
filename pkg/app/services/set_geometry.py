"""Closed time sets: covers, distance, membership and dimensions."""
import math
from typing import Sequence, Tuple, Union

import numpy as np
from loguru import logger

from app.domain.models import CoverLevel, SetDescriptor, SetVariant
from app.domain.reports import BoxCountingResult
from app.exceptions import InvalidArgumentError


DEFAULT_DEPTH = 40
# Closed-interval tests in the Cantor recursion tolerate this much (relative to the base length).
CANTOR_SLACK = 1e-12
# Largest cover the box counter will materialize.
MAX_BOX_INTERVALS = 2 ** 20
# Relative excess over the resolution that still counts as one cell.
SPLIT_SLACK = 1e-9

TimeLike = Union[float, np.ndarray]


def cover_intervals(target: SetDescriptor, k: int) -> CoverLevel:
    """
    Level-k cover of a set.

    Cantor sets use the standard construction (m^k intervals of length
    rho^k (b - a)); finite points are degenerate intervals; interval unions
    are their own cover at every level.

    Args:
        target: Set descriptor
        k: Cover level (>= 0)

    Returns:
        CoverLevel whose union contains the set
    """
    if k < 0:
        raise InvalidArgumentError(f"cover level must be >= 0, got: {k}")

    if target.variant == SetVariant.FINITE_POINTS:
        pts = np.asarray(target.points, dtype=float)
        return CoverLevel(k, np.column_stack([pts, pts]))

    if target.variant == SetVariant.INTERVAL_UNION:
        return CoverLevel(k, np.asarray(target.intervals, dtype=float).reshape(-1, 2))

    a, b = target.base
    m, rho = target.branches, target.ratio
    offsets = np.arange(m) * (1.0 - rho) / (m - 1)
    lefts = np.array([a])
    length = b - a
    for _ in range(k):
        lefts = (lefts[:, None] + offsets[None, :] * length).ravel()
        length *= rho
    return CoverLevel(k, np.column_stack([lefts, lefts + length]))


def cell_resolution(target: SetDescriptor, k: int) -> float:
    """Length scale of level-k scan cells."""
    if target.is_empty or target.variant == SetVariant.FINITE_POINTS:
        return 0.0
    if target.variant == SetVariant.CANTOR:
        return (target.base[1] - target.base[0]) * target.ratio ** k
    return (target.upper - target.lower) * 2.0 ** -k


def scan_cells(cover: CoverLevel, resolution: float) -> CoverLevel:
    """
    Split cover intervals longer than `resolution` into equal adjacent pieces.

    Degenerate intervals and a zero resolution leave the cover unchanged.
    """
    lengths = cover.lengths
    # round-off in the cover construction must not split a cell in two
    long = lengths > resolution * (1.0 + SPLIT_SLACK)
    if resolution <= 0 or cover.n_intervals == 0 or not np.any(long):
        return cover
    if not np.all(np.isfinite(lengths)):
        raise InvalidArgumentError("cannot split an unbounded interval into cells")

    pieces = np.where(long, np.ceil(lengths / resolution - SPLIT_SLACK), 1).astype(np.int64)
    starts = np.cumsum(pieces) - pieces
    offs = np.arange(pieces.sum()) - np.repeat(starts, pieces)
    step = np.repeat(lengths / pieces, pieces)
    base = np.repeat(cover.lefts, pieces)
    lefts = base + step * offs
    rights = base + step * (offs + 1)
    last = starts + pieces - 1
    rights[last] = cover.rights
    return CoverLevel(cover.level, np.column_stack([lefts, rights]))


def truncated_cover(target: SetDescriptor, k: int, low: float, high: float) -> CoverLevel:
    """Level-k cover of the set intersected with [low, high]."""
    return cover_intervals(target, k).truncate(low, high)


def _cantor_descend(target: SetDescriptor, t: np.ndarray, depth: int) -> Tuple[np.ndarray, np.ndarray]:
    """Distance to the set and level-`depth` cover membership, by recursion into sub-intervals.

    Works on the coordinate relative to the current cell, so round-off does not
    accumulate across levels. Descent stops once cells shrink below the slack.
    """
    a, b = target.base
    total = b - a
    m, rho = target.branches, target.ratio
    slack = CANTOR_SLACK * total

    dist = np.zeros_like(t)
    below = t < a - slack
    above = t > b + slack
    dist[below] = a - t[below]
    dist[above] = t[above] - b
    active = ~(below | above)

    u = (t - a) / total
    scale = total
    step_frac = (1.0 - rho) / (m - 1)
    gap_frac = step_frac - rho
    for _ in range(depth):
        # gaps narrower than the slack cannot be told apart
        if slack >= 0.25 * gap_frac * scale:
            break
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        tol = slack / scale
        x = u[idx]
        j = np.clip(np.floor(x / step_frac), 0, m - 1)
        bump = (j < m - 1) & (x >= (j + 1) * step_frac - tol)
        j = j + bump
        left = j * step_frac
        right = left + rho
        inside = (x <= right + tol) & (x >= left - tol)

        out = ~inside
        next_left = np.where(j < m - 1, (j + 1) * step_frac, np.inf)
        gap_dist = np.minimum(np.abs(x - right), np.abs(next_left - x)) * scale
        dist[idx[out]] = gap_dist[out]
        active[idx[out]] = False
        u[idx[inside]] = (x[inside] - left[inside]) / rho
        scale *= rho
    return dist, active


def _as_array(t: TimeLike) -> Tuple[np.ndarray, bool]:
    arr = np.asarray(t, dtype=float)
    return np.atleast_1d(arr).copy(), arr.ndim == 0


def distance_to_set(target: SetDescriptor, t: TimeLike, depth: int = DEFAULT_DEPTH) -> TimeLike:
    """
    Euclidean distance from t to the set.

    Exact for finite points and interval unions; for Cantor sets the error is
    at most rho^depth (b - a), and points inside the level-`depth` cover get 0.
    Levels whose cells are smaller than the round-off slack are not descended.

    Args:
        target: Set descriptor
        t: Time or array of times
        depth: Cantor recursion depth

    Returns:
        Distance (same shape as t); inf for the empty set
    """
    arr, scalar = _as_array(t)

    if target.is_empty:
        dist = np.full_like(arr, np.inf)
    elif target.variant == SetVariant.FINITE_POINTS:
        pts = np.asarray(target.points)
        idx = np.searchsorted(pts, arr)
        left = pts[np.clip(idx - 1, 0, pts.size - 1)]
        right = pts[np.clip(idx, 0, pts.size - 1)]
        dist = np.minimum(np.abs(arr - left), np.abs(right - arr))
    elif target.variant == SetVariant.INTERVAL_UNION:
        ivs = np.asarray(target.intervals)
        i = np.searchsorted(ivs[:, 0], arr, side="right") - 1
        has_left = i >= 0
        safe = np.clip(i, 0, ivs.shape[0] - 1)
        inside = has_left & (arr <= ivs[safe, 1])
        to_prev = np.where(has_left, arr - ivs[safe, 1], np.inf)
        nxt = np.clip(i + 1, 0, ivs.shape[0] - 1)
        to_next = np.where(i + 1 < ivs.shape[0], ivs[nxt, 0] - arr, np.inf)
        dist = np.where(inside, 0.0, np.minimum(to_prev, to_next))
    else:
        dist, _ = _cantor_descend(target, arr, depth)

    return float(dist[0]) if scalar else dist


def membership(target: SetDescriptor, t: TimeLike, depth: int = DEFAULT_DEPTH) -> Union[bool, np.ndarray]:
    """
    Whether t lies in the level-`depth` cover.

    For Cantor sets this over-approximates membership by at most
    rho^depth (b - a).
    """
    arr, scalar = _as_array(t)
    if target.variant == SetVariant.CANTOR:
        _, inside = _cantor_descend(target, arr, depth)
    else:
        inside = distance_to_set(target, arr) == 0.0
    return bool(inside[0]) if scalar else inside


def hausdorff_dimension_analytic(target: SetDescriptor) -> float:
    """Hausdorff dimension: 0 for finite sets, 1 for interval unions, log m / log(1/rho) for Cantor sets."""
    if target.variant == SetVariant.FINITE_POINTS:
        return 0.0
    if target.variant == SetVariant.INTERVAL_UNION:
        if all(b == a for a, b in target.intervals):
            return 0.0
        return 1.0
    return math.log(target.branches) / math.log(1.0 / target.ratio)


def frostman_check(target: SetDescriptor) -> bool:
    """Sufficient condition for Cap_{1/2} = 0: countable set or dimension below 1/2."""
    if target.variant == SetVariant.FINITE_POINTS:
        return True
    return hausdorff_dimension_analytic(target) < 0.5


def _box_cover(target: SetDescriptor, finest: float) -> np.ndarray:
    if target.variant != SetVariant.CANTOR:
        return cover_intervals(target, 0).intervals
    total = target.base[1] - target.base[0]
    k = max(0, math.ceil(math.log(finest / (8.0 * total)) / math.log(target.ratio)))
    while k > 0 and target.branches ** k > MAX_BOX_INTERVALS:
        k -= 1
        logger.warning(f"Box-counting cover capped at level {k} ({target.branches ** k} intervals)")
    return cover_intervals(target, k).intervals


def _count_boxes(intervals: np.ndarray, size: float) -> int:
    lo = np.floor(intervals[:, 0] / size).astype(np.int64)
    hi = np.maximum(np.ceil(intervals[:, 1] / size).astype(np.int64) - 1, lo)
    short = hi - lo <= 1
    parts = [lo[short], hi[short]]
    for first, last in zip(lo[~short], hi[~short]):
        parts.append(np.arange(first, last + 1))
    return int(np.unique(np.concatenate(parts)).size)


def box_counting_estimate(target: SetDescriptor, scales: Sequence[float]) -> BoxCountingResult:
    """
    Box-counting dimension estimate.

    Boxes are the grid [j*eps, (j+1)*eps); the estimate is the least-squares
    slope of log N(eps) against log(1/eps).

    Args:
        target: Bounded, non-empty set
        scales: At least 3 strictly decreasing box sizes

    Returns:
        BoxCountingResult; all-equal counts give estimate 0 with the degenerate flag
    """
    eps = np.asarray(scales, dtype=float)
    if eps.size < 3:
        raise InvalidArgumentError(f"box counting needs at least 3 scales, got: {eps.size}")
    if np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise InvalidArgumentError("box sizes must be positive and strictly decreasing")
    if target.is_empty or not target.is_bounded:
        raise InvalidArgumentError("box counting needs a bounded non-empty set")

    intervals = _box_cover(target, float(eps[-1]))
    counts = np.array([_count_boxes(intervals, size) for size in eps])
    logger.debug(f"Box counts {counts.tolist()} at {eps.size} scales")

    if np.all(counts == counts[0]):
        return BoxCountingResult(0.0, True, tuple(eps.tolist()), tuple(int(c) for c in counts))

    slope = np.polyfit(np.log(1.0 / eps), np.log(counts), 1)[0]
    return BoxCountingResult(float(slope), False, tuple(eps.tolist()), tuple(int(c) for c in counts))
