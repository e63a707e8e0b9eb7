"""Small shared helpers: rounding, hashing, per-image seeding, ordered parallel map."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Sequence, TypeVar

_T = TypeVar("_T")
_R = TypeVar("_R")

_MASK64 = (1 << 64) - 1
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def round_half_away(x: float) -> int:
    """Round to the nearest integer with halves away from zero.

    This is the single rounding convention used by every selection and
    augmentation formula in the package.
    """
    if x >= 0:
        return int(math.floor(x + 0.5))
    return int(math.ceil(x - 0.5))


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash."""
    h = _FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def per_image_seed(global_seed: int, image_id: str) -> int:
    """Derive a 64-bit seed for one image from a global seed and the image id.

    The id is hashed with FNV-1a, xor-ed with the global seed and passed
    through a splitmix64 finalizer, so each image gets an independent stream
    regardless of processing order or thread count.
    """
    return _splitmix64((global_seed & _MASK64) ^ fnv1a64(image_id.encode("utf-8")))


def map_ordered(fn: Callable[[_T], _R], items: Iterable[_T], jobs: int = 1) -> List[_R]:
    """Apply `fn` to items, optionally in a thread pool, preserving input order."""
    seq: Sequence[_T] = list(items)
    if jobs <= 1 or len(seq) <= 1:
        return [fn(x) for x in seq]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, seq))
