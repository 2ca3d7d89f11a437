"""Integer helpers for split-factor enumeration."""

from __future__ import annotations

import math
from functools import lru_cache, reduce
from typing import Iterable, Tuple

__all__ = ["divisors", "ordered_factorizations", "lcm", "prod", "ceil_div"]


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def prod(values: Iterable[int]) -> int:
    return math.prod(values)


def lcm(*values: int) -> int:
    return reduce(lambda a, b: a * b // math.gcd(a, b), values, 1)


@lru_cache(maxsize=4096)
def divisors(n: int) -> Tuple[int, ...]:
    "Ascending divisors of n."
    if n < 1:
        raise ValueError(f"divisors of non-positive {n}")
    small, large = [], []
    i = 1
    while i * i <= n:
        if n % i == 0:
            small.append(i)
            if i != n // i:
                large.append(n // i)
        i += 1
    return tuple(small + large[::-1])


@lru_cache(maxsize=4096)
def _exact(n: int, k: int) -> Tuple[Tuple[int, ...], ...]:
    if k == 1:
        return ((n,),)
    out = []
    for d in divisors(n):
        for rest in _exact(n // d, k - 1):
            out.append((d,) + rest)
    return tuple(out)


@lru_cache(maxsize=1024)
def ordered_factorizations(n: int, max_depth: int) -> Tuple[Tuple[int, ...], ...]:
    """All tuples of 1..max_depth factors (1 allowed) whose product is ``n``.

    Splits made only of ones are the same loop as ``(1,)`` and are left out.
    Returned in lexicographic tuple order, e.g. for ``n=8, max_depth=2``:
    ``(1, 8), (2, 4), (4, 2), (8,), (8, 1)``.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    out = []
    for k in range(1, max_depth + 1):
        out.extend(f for f in _exact(n, k) if k == 1 or max(f) > 1)
    return tuple(sorted(out))
