"""Exact-in-law sampling of pinned Brownian bridges and of the information process."""
import math
from typing import Tuple, Union

import numpy as np
from loguru import logger

from app.domain.models import BridgePath, DefaultLaw, GridPolicy, GridSpec, InfoPath, TimeGrid
from app.exceptions import InvalidArgumentError
from app.services.default_law import sample_default_time, sample_default_times


ArrayLike = Union[float, np.ndarray]


def bridge_transition(x: ArrayLike, s: ArrayLike, t: ArrayLike, r: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
    """
    One-step law of a bridge pinned to 0 at r: beta_t given beta_s = x.

    Args:
        x: Value at time s
        s: Current time
        t: Next time
        r: Pin time

    Returns:
        (mean, variance) = (x (r-t)/(r-s), (t-s)(r-t)/(r-s))

    Raises:
        InvalidArgumentError: If not 0 <= s < t <= r
    """
    s_arr, t_arr, r_arr = np.asarray(s, float), np.asarray(t, float), np.asarray(r, float)
    if np.any(s_arr < 0) or np.any(s_arr >= t_arr):
        raise InvalidArgumentError("bridge step requires 0 <= s < t")
    if np.any(t_arr > r_arr):
        raise InvalidArgumentError("bridge step requires t <= r (no step past the pin)")

    remaining = r_arr - s_arr
    mean = np.asarray(x, float) * (r_arr - t_arr) / remaining
    variance = (t_arr - s_arr) * (r_arr - t_arr) / remaining
    if np.ndim(mean) == 0:
        return float(mean), float(variance)
    return mean, variance


def sample_bridge_values(
    pins: ArrayLike,
    times: np.ndarray,
    n_paths: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    Sample bridges at increasing times, one pin per path.

    Values at t = 0 and at every t >= pin are exact zeros.

    Args:
        pins: Pin time (scalar, or one per path)
        times: Strictly increasing nonnegative times
        n_paths: Number of paths
        rng: Caller-owned generator

    Returns:
        Array of shape (n_paths, len(times))
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(times < 0) or np.any(np.diff(times) <= 0):
        raise InvalidArgumentError("bridge times must be nonnegative and strictly increasing")
    r = np.broadcast_to(np.asarray(pins, dtype=float), (n_paths,))
    if np.any(r <= 0):
        raise InvalidArgumentError("pin times must be positive")

    z = rng.standard_normal((n_paths, times.size))
    values = np.zeros((n_paths, times.size))
    x = np.zeros(n_paths)
    s = np.zeros(n_paths)
    for i, t in enumerate(times):
        if t == 0.0:
            continue
        live = t < r
        if not live.any():
            break
        remaining = r - s
        mean = x * (r - t) / remaining
        std = np.sqrt(np.maximum((t - s) * (r - t) / remaining, 0.0))
        col = np.where(live, mean + std * z[:, i], 0.0)
        values[:, i] = col
        x = np.where(live, col, x)
        s = np.where(live, t, s)
    return values


def build_grid(spec: GridSpec, target: float) -> TimeGrid:
    """
    Time grid for a path pinned at `target`.

    The uniform policy spaces n_base steps over the horizon; the geometric
    policy adds target +- h ratio^j down to spacing_floor * target. Both
    include the target and the configured extra times.

    Args:
        spec: Grid specification
        target: Pin time (tau or r)

    Returns:
        TimeGrid starting at 0
    """
    horizon = spec.horizon if spec.horizon is not None else 1.25 * target
    horizon = max(horizon, target)
    base = np.linspace(0.0, horizon, spec.n_base + 1)
    floor = spec.spacing_floor * target
    # base points that only round-off separates from the target
    base = base[np.abs(base - target) >= floor]
    parts = [base, [target]]

    if spec.policy == GridPolicy.GEOMETRIC:
        h = horizon / spec.n_base
        n_levels = max(0, int(math.floor(math.log(floor / h) / math.log(spec.ratio))) + 1)
        offsets = h * spec.ratio ** np.arange(1, n_levels + 1)
        offsets = offsets[offsets >= floor]
        parts.extend([target - offsets, target + offsets])

    if spec.extra_times:
        parts.append(np.asarray(spec.extra_times, dtype=float))

    times = np.unique(np.concatenate([np.asarray(p, dtype=float) for p in parts]))
    times = times[(times >= 0.0) & (times <= horizon)]
    if times[0] != 0.0:
        times = np.concatenate([[0.0], times])
    return TimeGrid(times, spec.policy)


def sample_bridge_path(r: float, grid: TimeGrid, rng: np.random.Generator) -> BridgePath:
    """Sample one bridge pinned at r on a grid (zero sentinel past r)."""
    values = sample_bridge_values(r, grid.times, 1, rng)[0]
    return BridgePath(grid=grid, pin=float(r), values=values)


def sample_information_values(
    law: DefaultLaw,
    times: np.ndarray,
    n_paths: int,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Information process on shared times: tau from the law, then the bridge pinned at tau.

    Returns:
        (taus, values) with values of shape (n_paths, len(times))
    """
    taus = sample_default_times(law, rng, n_paths)
    return taus, sample_bridge_values(taus, times, n_paths, rng)


def sample_information_path(law: DefaultLaw, spec: GridSpec, rng: np.random.Generator) -> InfoPath:
    """
    One information path on a grid built around its own default time.

    Conditionally on tau = r the process is the bridge pinned at r and
    identically zero afterwards.
    """
    tau = sample_default_time(law, rng)
    grid = build_grid(spec, tau)
    values = sample_bridge_values(tau, grid.times, 1, rng)[0]
    logger.debug(f"Information path: tau={tau:.6g}, {len(grid)} grid times")
    return InfoPath(tau=tau, grid=grid, values=values)
