"""Riesz and parabolic energies of piecewise-uniform measures, and capacity estimates."""
import math
from typing import List, Sequence, Tuple

import numpy as np
from loguru import logger

from app.domain.models import CoverLevel, DiscreteMeasure, SetDescriptor
from app.domain.reports import EnergyReport
from app.exceptions import ConvergenceError, InvalidArgumentError
from app.services.set_geometry import cover_intervals
from app.utils.simplex import project_to_simplex


DEFAULT_TOLERANCE = 1e-8
DEFAULT_MAX_ITER = 100_000
# Pairs with (h1 + h2) / D below this use the moment series instead of the closed form.
SEPARATION = 0.25
SERIES_TERMS = 16


def _check_order(s: float) -> None:
    if not 0 < s < 1:
        raise InvalidArgumentError(f"Riesz order must lie in (0, 1), got: {s}")


def _binomial_even(s: float, terms: int) -> np.ndarray:
    """Coefficients of (e/D)^(2j) in (1 + e/D)^(-s), j = 0..terms-1."""
    coeffs = np.empty(2 * terms)
    coeffs[0] = 1.0
    for n in range(1, 2 * terms):
        coeffs[n] = coeffs[n - 1] * (-s - n + 1) / n
    return coeffs[::2]


def _separated_kernel(centers_dist: np.ndarray, h1: np.ndarray, h2: np.ndarray, s: float) -> np.ndarray:
    """Mean of |x - y|^-s over two uniform intervals far apart, by the even-moment series."""
    p = h1 / centers_dist
    q = h2 / centers_dist
    coeffs = _binomial_even(s, SERIES_TERMS)
    total = np.zeros_like(centers_dist)
    for j in range(SERIES_TERMS - 1, -1, -1):
        moment = np.zeros_like(centers_dist)
        for i in range(j + 1):
            moment += (math.comb(2 * j, 2 * i) / ((2 * i + 1) * (2 * j - 2 * i + 1))
                       * p ** (2 * i) * q ** (2 * j - 2 * i))
        total += coeffs[j] * moment
    return centers_dist ** -s * total


def _close_kernel(a1, b1, a2, b2, s: float) -> np.ndarray:
    """Mean of |x - y|^-s over [a1,b1] x [a2,b2] from the exact double primitive."""
    c = 1.0 / ((1.0 - s) * (2.0 - s))

    def g(u):
        return c * np.abs(u) ** (2.0 - s)

    l1 = b1 - a1
    l2 = b2 - a2
    with np.errstate(divide="ignore", invalid="ignore"):
        both = (g(b2 - a1) + g(a2 - b1) - g(b2 - b1) - g(a2 - a1)) / (l1 * l2)

        # one degenerate side: single integral of |x - y|^-s
        def h(u):
            return np.sign(u) * np.abs(u) ** (1.0 - s) / (1.0 - s)

        first_point = (h(b2 - a1) - h(a2 - a1)) / l2
        second_point = (h(b1 - a2) - h(a1 - a2)) / l1
        points = np.abs(a2 - a1) ** -s

    out = np.where(l1 > 0, np.where(l2 > 0, both, second_point), np.where(l2 > 0, first_point, points))
    return out


def kernel_matrix(intervals: np.ndarray, s: float) -> np.ndarray:
    """
    Normalized pair kernels K_ij = mean of |x - y|^-s over interval i x interval j.

    Self-kernels of atoms are +inf.

    Args:
        intervals: Array (n, 2) of disjoint closed intervals
        s: Riesz order in (0, 1)

    Returns:
        Symmetric (n, n) matrix
    """
    _check_order(s)
    ivs = np.asarray(intervals, dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(ivs)):
        raise InvalidArgumentError("energy kernels need bounded intervals")

    a, b = ivs[:, 0], ivs[:, 1]
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    dist = np.abs(mid[:, None] - mid[None, :])
    spread = half[:, None] + half[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        separated = spread < SEPARATION * dist

    A1, B1 = a[:, None], b[:, None]
    A2, B2 = a[None, :], b[None, :]
    K = _close_kernel(A1, B1, A2, B2, s)
    if np.any(separated):
        H1 = np.broadcast_to(half[:, None], dist.shape)
        H2 = np.broadcast_to(half[None, :], dist.shape)
        K[separated] = _separated_kernel(dist[separated], H1[separated], H2[separated], s)

    lengths = b - a
    diag = np.where(lengths > 0, 2.0 / ((1.0 - s) * (2.0 - s)) * np.abs(lengths) ** -s, np.inf)
    np.fill_diagonal(K, diag)
    return K


def _quadratic(K: np.ndarray, w: np.ndarray) -> float:
    return float(np.sum(K * w[:, None] * w[None, :]))


def riesz_energy(measure: DiscreteMeasure, s: float) -> float:
    """
    Riesz s-energy I_s = sum_ij w_i w_j K_s(i, j).

    Any atom with positive weight gives +inf.
    """
    _check_order(s)
    if measure.has_atom:
        return math.inf
    keep = measure.weights > 0
    K = kernel_matrix(measure.intervals[keep], s)
    return _quadratic(K, measure.weights[keep])


def _pair_three_halves(a1, b1, a2, b2) -> np.ndarray:
    """Double integral of |t - s|^-1/2 over [a1,b1] x [a2,b2] for b1 <= a2, grouped to limit cancellation."""

    def diff32(x, y, delta):
        # x^{3/2} - y^{3/2} with x - y = delta
        rx, ry = np.sqrt(x), np.sqrt(y)
        return delta * (x + rx * ry + y) / (rx + ry)

    l1 = b1 - a1
    upper = diff32(b2 - a1, b2 - b1, l1)
    lower = diff32(a2 - a1, a2 - b1, l1)
    return (4.0 / 3.0) * (upper - lower)


def parabolic_zero_energy(nu: DiscreteMeasure) -> float:
    """
    Parabolic 0-energy of mu = nu x delta_0 in one space dimension.

    With both space points at the origin the heat factor
    exp(-|x - y|^2 / (2|t - s|)) is 1 and the kernel is |t - s|^-1/2.
    """
    if nu.has_atom:
        return math.inf

    keep = nu.weights > 0
    ivs = nu.intervals[keep]
    w = nu.weights[keep]
    a, b = ivs[:, 0], ivs[:, 1]
    lengths = b - a
    n = w.size

    i, j = np.triu_indices(n, k=1)
    li, lj = lengths[i], lengths[j]
    both = (li > 0) & (lj > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        cross_both = _pair_three_halves(a[i], b[i], a[j], b[j]) / (li * lj)
        # atom at a[i] against interval j, and interval i against atom at a[j]
        left_atom = 2.0 / (np.sqrt(b[j] - a[i]) + np.sqrt(a[j] - a[i]))
        right_atom = 2.0 / (np.sqrt(a[j] - a[i]) + np.sqrt(a[j] - b[i]))
        atoms = (a[j] - a[i]) ** -0.5
    cross = np.where(both, cross_both,
                     np.where(lj > 0, left_atom, np.where(li > 0, right_atom, atoms)))

    self_terms = (8.0 / 3.0) * lengths ** 1.5 / lengths ** 2
    total = np.sum(w ** 2 * self_terms) + 2.0 * np.sum(w[i] * w[j] * cross)
    return float(total)


def minimize_energy(
    cover: CoverLevel,
    s: float,
    tol: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
    strict: bool = False,
) -> Tuple[DiscreteMeasure, EnergyReport]:
    """
    Minimize the Riesz s-energy over piecewise-uniform probability measures on a cover.

    Projected gradient on the simplex with backtracking; stops when the
    Frank-Wolfe gap (an upper bound on energy - optimum) is below tol * energy.

    Args:
        cover: Non-empty cover
        s: Riesz order in (0, 1)
        tol: Relative optimality tolerance
        max_iter: Iteration cap
        strict: Raise ConvergenceError instead of flagging non-convergence

    Returns:
        (measure, report)
    """
    _check_order(s)
    if cover.n_intervals == 0:
        raise InvalidArgumentError("cannot minimize energy over an empty cover")

    intervals = cover.intervals
    live = ~cover.degenerate
    if not live.any():
        weights = np.full(cover.n_intervals, 1.0 / cover.n_intervals)
        report = EnergyReport(math.inf, 0.0, 0, math.inf, cover.level, cover.n_intervals, s, True)
        return DiscreteMeasure(intervals, weights), report

    K = kernel_matrix(intervals[live], s)
    n = K.shape[0]
    w = np.full(n, 1.0 / n)
    Kw = (K * w).sum(axis=1)
    f = float(w @ Kw)
    step = 1.0 / (2.0 * K.sum(axis=1).max())
    gap = math.inf
    iterations = 0

    for iterations in range(1, max_iter + 1):
        grad = 2.0 * Kw
        gap = float(grad @ w - grad.min())
        if gap <= tol * f:
            break
        trial = 2.0 * step
        while True:
            w_new = project_to_simplex(w - trial * grad)
            d = w_new - w
            Kw_new = (K * w_new).sum(axis=1)
            f_new = float(w_new @ Kw_new)
            if f_new <= f + grad @ d + (d @ d) / (2.0 * trial) or trial < 1e-300:
                break
            trial *= 0.5
        step = trial
        w, Kw, f = w_new, Kw_new, f_new
    else:
        iterations = max_iter

    converged = gap <= tol * f
    if not converged:
        logger.warning(f"Energy minimization stopped at {iterations} iterations, gap {gap:.3e}")
        if strict:
            raise ConvergenceError(iterations, gap)

    weights = np.zeros(cover.n_intervals)
    weights[live] = w / w.sum()
    energy = _quadratic(K, weights[live])
    report = EnergyReport(
        energy=energy,
        capacity=1.0 / energy,
        iterations=iterations,
        gap=gap / f,
        level=cover.level,
        n_intervals=cover.n_intervals,
        s=s,
        converged=converged,
    )
    logger.debug(f"Level {cover.level}: {n} intervals, energy {energy:.10g} after {iterations} iterations")
    return DiscreteMeasure(intervals, weights), report


def capacity_estimate(
    target: SetDescriptor,
    s: float,
    k: int,
    tol: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
) -> EnergyReport:
    """
    Riesz s-capacity of the level-k cover (an upper bound for the set's capacity).

    The empty set has capacity 0.
    """
    _check_order(s)
    if target.is_empty:
        return EnergyReport(math.inf, 0.0, 0, 0.0, k, 0, s, True)
    if not target.is_bounded:
        raise InvalidArgumentError("capacity needs a bounded set; truncate it first")
    _, report = minimize_energy(cover_intervals(target, k), s, tol, max_iter)
    return report


def capacity_profile(
    target: SetDescriptor,
    s: float,
    levels: Sequence[int],
    tol: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
) -> List[EnergyReport]:
    """Capacity estimates for each level, in the given order."""
    reports = [capacity_estimate(target, s, k, tol, max_iter) for k in levels]
    logger.info(
        f"Capacity profile s={s}: "
        + ", ".join(f"k={r.level}: {r.capacity:.6g}" for r in reports)
    )
    return reports
