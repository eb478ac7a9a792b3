"""Multi-indices, multiset partitions and the multivariate chain rule.

Multi-indices are plain tuples of non-negative ints. The chain rule is
evaluated by explicit enumeration of the partitions of the multiset of
differentiation directions, so every term can be traced back to a block
structure. Orders stay small (at most 4 in practice), which keeps the
enumeration cheap.
"""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from math import comb, prod
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidArgument

MultiIndex = tuple


def order(alpha: Sequence[int]) -> int:
    return int(sum(alpha))


def check_multi_index(alpha) -> tuple:
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) < 1:
        raise InvalidArgument("a multi-index needs at least one component")
    if any(a < 0 for a in alpha):
        raise InvalidArgument(f"negative component in multi-index {alpha}")
    return alpha


def unit(d: int, i: int) -> tuple:
    return tuple(1 if j == i else 0 for j in range(d))


def zero(d: int) -> tuple:
    return (0,) * d


def leq(beta, alpha) -> bool:
    """Componentwise order ``beta <= alpha``."""
    return all(b <= a for b, a in zip(beta, alpha))


def sub(alpha, beta) -> tuple:
    return tuple(a - b for a, b in zip(alpha, beta))


def add(alpha, beta) -> tuple:
    return tuple(a + b for a, b in zip(alpha, beta))


def binom(alpha, beta) -> int:
    return prod(comb(a, b) for a, b in zip(alpha, beta))


@lru_cache(maxsize=None)
def multi_indices(m: int, d: int) -> tuple:
    """All multi-indices of length ``d`` and order at most ``m``.

    Sorted by order, then lexicographically (descending in the first slot),
    so ``multi_indices(m, d)[0]`` is the zero index.
    """
    if m < 0:
        raise InvalidArgument(f"maximal order must be non-negative, got {m}")
    if d < 1:
        raise InvalidArgument(f"dimension must be positive, got {d}")
    out = [a for a in itertools.product(range(m + 1), repeat=d) if sum(a) <= m]
    out.sort(key=lambda a: (sum(a), tuple(-x for x in a)))
    return tuple(out)


def sub_indices(alpha) -> list:
    """All ``beta <= alpha`` (including 0 and alpha itself)."""
    return [b for b in itertools.product(*(range(a + 1) for a in alpha))]


def _set_partitions(n: int):
    # restricted growth strings: labels[i] <= 1 + max(labels[:i])
    if n == 0:
        yield []
        return
    labels = [0] * n

    def rec(i, top):
        if i == n:
            blocks = [[] for _ in range(top + 1)]
            for slot, lab in enumerate(labels):
                blocks[lab].append(slot)
            yield blocks
            return
        for lab in range(top + 2):
            labels[i] = lab
            yield from rec(i + 1, max(top, lab))

    labels[0] = 0
    yield from rec(1, 0)


@dataclass(frozen=True)
class MultisetPartition:
    """A partition of the multiset of non-null directions of a multi-index.

    ``blocks`` holds one multi-index per block (the block's direction
    counts); ``multiplicity`` is the number of set partitions of the labeled
    differentiation slots that collapse onto this multiset partition.
    """

    blocks: tuple
    multiplicity: int

    @property
    def size(self) -> int:
        return len(self.blocks)

    def as_multisets(self) -> list:
        """Blocks as sorted lists of 1-based coordinate labels."""
        out = []
        for b in self.blocks:
            out.append([j + 1 for j, c in enumerate(b) for _ in range(c)])
        return out


@lru_cache(maxsize=None)
def _partitions_cached(beta: tuple) -> tuple:
    slots = [j for j, c in enumerate(beta) for _ in range(c)]
    d = len(beta)
    counts: Counter = Counter()
    for blocks in _set_partitions(len(slots)):
        key = []
        for block in blocks:
            b = [0] * d
            for s in block:
                b[slots[s]] += 1
            key.append(tuple(b))
        counts[tuple(sorted(key, reverse=True))] += 1
    parts = [MultisetPartition(k, v) for k, v in counts.items()]
    parts.sort(key=lambda p: (p.size, p.blocks))
    return tuple(parts)


def multiindex_partitions(beta) -> list:
    """Enumerate the partitions of the multiset of directions of ``beta``.

    For ``beta = (2, 3, 0, 1)`` the multiset is ``{1, 1, 2, 2, 2, 4}``.
    Distinct multiset partitions are returned once each, carrying the count
    of labeled set partitions they represent; these counts sum to the Bell
    number of ``|beta|``.

    Raises
    ------
    InvalidArgument
        If ``|beta| == 0``.
    """
    beta = check_multi_index(beta)
    if order(beta) == 0:
        raise InvalidArgument("partitions need a multi-index of positive order")
    return list(_partitions_cached(beta))


def chain_rule(outer: Sequence, inner: Callable[[tuple], np.ndarray], beta) -> np.ndarray:
    """Evaluate ``d^beta (g o u)`` from the derivatives of ``g`` and ``u``.

    Parameters
    ----------
    outer
        ``outer[k]`` is ``g^{(k)}(u(x))`` (array over points), for
        ``k = 0..|beta|``. Entry 0 is unused.
    inner
        Maps a block multi-index ``gamma`` to ``d^gamma u`` at the points.
    beta
        The derivative multi-index, ``|beta| >= 1``.
    """
    parts = multiindex_partitions(beta)
    total = None
    cache: dict = {}
    for part in parts:
        term = part.multiplicity * np.asarray(outer[part.size], dtype=float)
        for block in part.blocks:
            if block not in cache:
                cache[block] = np.asarray(inner(block), dtype=float)
            term = term * cache[block]
        total = term if total is None else total + term
    return total


def falling_factorial(x: float, k: int) -> float:
    out = 1.0
    for j in range(k):
        out *= x - j
    return out
