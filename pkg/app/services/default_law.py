"""Default-time laws: sampling, CDF and support."""
import math
from typing import Union

import numpy as np

from app.domain.models import DefaultLaw, LawKind, SetDescriptor
from app.exceptions import InvalidArgumentError


# Random digits per Cantor draw; rho^64 is far below double resolution for every admissible rho.
CANTOR_DIGITS = 64

TimeLike = Union[float, np.ndarray]


def _cantor_digit_weights(law: DefaultLaw, digits: int) -> np.ndarray:
    a, b = law.base
    m, rho = law.branches, law.ratio
    return (b - a) * (1.0 - rho) / (m - 1) * rho ** np.arange(digits)


def sample_default_times(
    law: DefaultLaw,
    rng: np.random.Generator,
    size: int,
    digits: int = CANTOR_DIGITS,
) -> np.ndarray:
    """
    Draw i.i.d. default times.

    Atomic laws use a cumulative scan, uniform and exponential laws the
    inverse CDF, and Cantor laws a random base-m digit expansion.

    Args:
        law: Default-time law
        rng: Caller-owned generator
        size: Number of draws
        digits: Digits per Cantor draw

    Returns:
        Array of draws, shape (size,)
    """
    if size < 0:
        raise InvalidArgumentError(f"sample size must be >= 0, got: {size}")

    if law.kind == LawKind.ATOMIC:
        cumulative = np.cumsum(law.weights)
        u = rng.random(size) * cumulative[-1]
        idx = np.minimum(np.searchsorted(cumulative, u, side="right"), len(law.atoms) - 1)
        return np.asarray(law.atoms)[idx]

    if law.kind == LawKind.UNIFORM:
        return law.low + (law.high - law.low) * rng.random(size)

    if law.kind == LawKind.EXPONENTIAL:
        return -np.log1p(-rng.random(size)) / law.rate

    draws = rng.integers(0, law.branches, size=(size, digits))
    # finest digits first so small terms are not absorbed
    weights = _cantor_digit_weights(law, digits)
    return law.base[0] + (draws[:, ::-1] * weights[::-1]).sum(axis=1)


def sample_default_time(law: DefaultLaw, rng: np.random.Generator) -> float:
    """Draw one default time."""
    return float(sample_default_times(law, rng, 1)[0])


def _cantor_cdf(law: DefaultLaw, t: np.ndarray, depth: int = 60) -> np.ndarray:
    a, b = law.base
    m, rho = law.branches, law.ratio
    out = np.zeros_like(t)
    out[t >= b] = 1.0
    active = (t > a) & (t < b)
    lo = np.full_like(t, a)
    length = b - a
    scale = 1.0
    step_frac = (1.0 - rho) / (m - 1)
    for _ in range(depth):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        child = rho * length
        step = step_frac * length
        x = t[idx] - lo[idx]
        j = np.clip(np.floor(x / step), 0, m - 1)
        right = j * step + child
        in_gap = x >= right
        # in a gap (or past the last child): mass of children 0..j
        out[idx[in_gap]] += scale * (j[in_gap] + 1) / m
        active[idx[in_gap]] = False
        keep = ~in_gap
        out[idx[keep]] += scale * j[keep] / m
        lo[idx[keep]] += j[keep] * step
        scale /= m
        length = child
    idx = np.flatnonzero(active)
    out[idx] += scale * np.clip((t[idx] - lo[idx]) / length, 0.0, 1.0)
    return out


def law_cdf(law: DefaultLaw, t: TimeLike) -> TimeLike:
    """
    Distribution function P(tau <= t).

    Args:
        law: Default-time law
        t: Time or array of times (>= 0)

    Returns:
        Probabilities with the shape of t
    """
    arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(arr < 0):
        raise InvalidArgumentError("law_cdf requires t >= 0")

    if law.kind == LawKind.ATOMIC:
        cumulative = np.concatenate([[0.0], np.cumsum(law.weights)])
        out = cumulative[np.searchsorted(np.asarray(law.atoms), arr, side="right")]
    elif law.kind == LawKind.UNIFORM:
        out = np.clip((arr - law.low) / (law.high - law.low), 0.0, 1.0)
    elif law.kind == LawKind.EXPONENTIAL:
        out = -np.expm1(-law.rate * arr)
    else:
        out = _cantor_cdf(law, arr)

    out = np.minimum(out, 1.0)
    return float(out[0]) if np.ndim(t) == 0 else out


def support_of(law: DefaultLaw) -> SetDescriptor:
    """Topological support of the law."""
    if law.kind == LawKind.ATOMIC:
        return SetDescriptor.finite_points(a for a, w in zip(law.atoms, law.weights) if w > 0)
    if law.kind == LawKind.UNIFORM:
        return SetDescriptor.interval_union([(law.low, law.high)])
    if law.kind == LawKind.EXPONENTIAL:
        return SetDescriptor.interval_union([(0.0, math.inf)])
    return SetDescriptor.cantor(law.base[0], law.base[1], law.branches, law.ratio)


def law_mean(law: DefaultLaw) -> float:
    """Mean default time, reported next to the sample mean by simulate runs."""
    if law.kind == LawKind.ATOMIC:
        return math.fsum(a * w for a, w in zip(law.atoms, law.weights))
    if law.kind == LawKind.UNIFORM:
        return 0.5 * (law.low + law.high)
    if law.kind == LawKind.EXPONENTIAL:
        return 1.0 / law.rate
    # uniform digits: mean digit (m-1)/2 at every level
    a, b = law.base
    return a + (b - a) * 0.5
