"""Seeded random streams for reproducible Monte Carlo."""
from enum import IntEnum
from typing import Tuple

import numpy as np

from app.exceptions import ConfigurationError


class StudyTag(IntEnum):
    """First component of every stream key."""
    SIMULATE = 1
    HITTING = 2
    EXPERIMENT = 3
    CONDITIONAL = 4
    ANNOUNCE = 5


class RandomStreams:
    """Derives independent generators from a master seed and a key.
    
    The same (seed, key) always yields the same stream, whatever the order
    in which streams are requested or the worker that consumes them.
    """
    
    def __init__(self, seed: int):
        """
        Initialize the stream factory.
        
        Args:
            seed: Master seed (nonnegative integer, at most 64 bits)
        """
        if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
            raise ConfigurationError(f"seed must be an integer, got: {seed!r}")
        if seed < 0 or seed >= 2 ** 64:
            raise ConfigurationError(f"seed must fit in an unsigned 64-bit integer, got: {seed}")
        self.seed = int(seed)
    
    def stream(self, *key: int) -> np.random.Generator:
        """
        Return the generator for a key.
        
        Args:
            key: Nonnegative integers identifying the stream (study, level, chunk...)
        
        Returns:
            A fresh PCG64 generator
        """
        sequence = np.random.SeedSequence(self.seed, spawn_key=tuple(int(k) for k in key))
        return np.random.Generator(np.random.PCG64(sequence))


def chunk_sizes(n_paths: int, chunk_size: int) -> Tuple[int, ...]:
    """Split n_paths into fixed-size chunks (last one may be shorter)."""
    if n_paths < 0 or chunk_size < 1:
        raise ValueError("n_paths must be >= 0 and chunk_size >= 1")
    full, rest = divmod(n_paths, chunk_size)
    return (chunk_size,) * full + ((rest,) if rest else ())
