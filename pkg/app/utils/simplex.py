"""Euclidean projection onto the probability simplex."""
import numpy as np


def project_to_simplex(c: np.ndarray) -> np.ndarray:
    """
    Solve min ||x - c||^2 s.t. sum(x) = 1, x >= 0.
    
    Sort-based threshold search, O(n log n).
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    a = -np.sort(-c)
    lambdas = (np.cumsum(a) - 1.0) / np.arange(1, n + 1)
    k = np.flatnonzero(a > lambdas)[-1]
    return np.maximum(c - lambdas[k], 0.0)
