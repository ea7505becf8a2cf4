"""Chunked map with deterministic reduction order."""
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, TypeVar

from loguru import logger

T = TypeVar("T")
R = TypeVar("R")


def map_chunks(fn: Callable[[int, T], R], items: Sequence[T], workers: int = 1) -> List[R]:
    """
    Apply fn(index, item) to every item, results in item order.
    
    Args:
        fn: Work function; receives the chunk index and the chunk
        items: Chunks to process
        workers: Thread count; 1 runs inline
    
    Returns:
        Results ordered like items
    """
    if workers <= 1 or len(items) <= 1:
        return [fn(i, item) for i, item in enumerate(items)]
    
    logger.debug(f"Dispatching {len(items)} chunks to {workers} workers")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, i, item) for i, item in enumerate(items)]
        return [future.result() for future in futures]
