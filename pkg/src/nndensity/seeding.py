"""Per-index seed derivation and order-stable parallel mapping.

``sub_seed(master, i)`` applies the SplitMix64 finalizer to
``master + (i + 1) * 0x9E3779B97F4A7C15 (mod 2**64)``. For a fixed master seed the
map ``i -> sub_seed`` is a bijection on 64-bit integers, so distinct indices
never collide.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, TypeVar

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

T = TypeVar("T")
R = TypeVar("R")


def _splitmix(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK
    return z ^ (z >> 31)


def sub_seed(master: int, index: int) -> int:
    return _splitmix((int(master) + (int(index) + 1) * _GOLDEN) & _MASK)


def sub_seeds(master: int, count: int) -> np.ndarray:
    """Vectorized :func:`sub_seed` for indices ``0..count-1`` as ``uint64``."""
    with np.errstate(over="ignore"):
        z = np.uint64(int(master) & _MASK) + (np.arange(1, count + 1, dtype=np.uint64) * np.uint64(_GOLDEN))
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def rng_for(master: int, index: int) -> np.random.Generator:
    return np.random.default_rng(sub_seed(master, index))


def ordered_map(fn: Callable[[T], R], items: Iterable[T], jobs: int = 1) -> list[R]:
    """``map`` that keeps input order; fans out to ``jobs`` worker processes when ``jobs > 1``."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))
