"""
Thread-count singleton and tiled map

Tiles are fixed by size, never by the number of workers, so any reduction over
tile results is identical for every thread count.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, TypeVar

from kfbd.utils.config import settings
from kfbd.utils.exceptions import InputError

T = TypeVar("T")

_thread_count: Optional[int] = None


def get_thread_count() -> int:
    """Current worker count (KFBD_THREADS unless overridden)"""
    global _thread_count
    if _thread_count is None:
        _thread_count = settings.KFBD_THREADS
    return _thread_count


def set_thread_count(threads: int) -> None:
    """Override the worker count (CLI --threads)"""
    global _thread_count
    if threads < 1:
        raise InputError(f"threads must be >= 1, got {threads}")
    _thread_count = int(threads)


def tile_bounds(n: int, tile: int | None = None) -> List[tuple[int, int]]:
    """Row ranges [start, stop) covering 0..n"""
    tile = tile or settings.GRAM_TILE_ROWS
    return [(start, min(start + tile, n)) for start in range(0, n, tile)]


def map_tiles(fn: Callable[[int, int], T], n: int, tile: int | None = None) -> List[T]:
    """Apply fn(start, stop) to every row tile; results come back in tile order"""
    bounds = tile_bounds(n, tile)
    threads = get_thread_count()
    if threads == 1 or len(bounds) == 1:
        return [fn(start, stop) for start, stop in bounds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda b: fn(*b), bounds))


def map_indices(fn: Callable[[int], T], count: int) -> List[T]:
    """Apply fn to 0..count-1 (independent seeded replicates); results come back in index order"""
    threads = get_thread_count()
    if threads == 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))
