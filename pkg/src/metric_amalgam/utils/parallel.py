"""
Deterministic data-parallel helpers.

Workers are threads, so only the numpy and scipy parts of the cycle solver can
overlap; exact Fraction scans hold the GIL. Every caller defaults to one worker.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

from loguru import logger

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(threads: int | None) -> int:
    """
    Normalise a thread count; None or 0 means all cores.
    """
    if not threads:
        return os.cpu_count() or 1
    return max(1, threads)


def ordered_map(func: Callable[[T], R], items: Iterable[T], threads: int | None = 1) -> list[R]:
    """
    Map func over items, possibly on a thread pool, returning results in input order.

    Results never depend on the thread count, so reductions over the returned
    list are deterministic.

    :param func: Pure function of one item.
    :param items: Work items.
    :param threads: Worker count (1 runs inline, None/0 uses every core).
    :return: Results aligned with items.
    """
    work = list(items)
    workers = min(resolve_threads(threads), len(work))
    if workers <= 1:
        return [func(item) for item in work]
    logger.debug(f"ordered_map(): {len(work)} items on {workers} threads")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, work))
