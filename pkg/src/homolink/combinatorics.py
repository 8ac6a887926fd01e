"""Ordered two-partitions of index sets and their permutation signs."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Sequence


@dataclass(frozen=True)
class OrderedPartition:
    left: tuple[int, ...]
    right: tuple[int, ...]
    sign: int


def inversion_sign(seq: Sequence[int]) -> int:
    """Parity of a sequence of distinct comparables, counted by inversions."""
    n = len(seq)
    inv = sum(1 for i in range(n) for j in range(i + 1, n) if seq[i] > seq[j])
    return -1 if inv % 2 else 1


def partitions(a: Sequence[int], w: int) -> list[OrderedPartition]:
    """All splits of ``a`` into an ordered left part of size ``w`` and the rest.

    Both sides keep the order they have in ``a``. Partitions are listed in
    lexicographic order of the left-side positions, and each carries the
    sign of the permutation taking ``a`` to ``left + right``.

    >>> [p.left for p in partitions([1, 3, 6, 9, 5], 3)][:3]
    [(1, 3, 6), (1, 3, 9), (1, 3, 5)]
    """
    a = tuple(a)
    if not 0 <= w <= len(a):
        raise ValueError(f"w={w} out of range for a set of size {len(a)}")
    return list(_partitions(a, w))


@lru_cache(maxsize=None)
def _partitions(a: tuple[int, ...], w: int) -> tuple[OrderedPartition, ...]:
    n = len(a)
    out = []
    for pos in combinations(range(n), w):
        chosen = set(pos)
        rest = tuple(i for i in range(n) if i not in chosen)
        out.append(
            OrderedPartition(
                left=tuple(a[i] for i in pos),
                right=tuple(a[i] for i in rest),
                sign=inversion_sign(pos + rest),
            )
        )
    return tuple(out)


def index_set_without(D: int, k: int) -> list[int]:
    """``[1, ..., k-1, k+1, ..., D]`` (1-based coordinate indices)."""
    if not 1 <= k <= D:
        raise ValueError(f"k={k} outside 1..{D}")
    return [i for i in range(1, D + 1) if i != k]


@lru_cache(maxsize=None)
def form_partitions(D: int, w: int) -> tuple[tuple[int, OrderedPartition], ...]:
    """Every (k, rho) term of the expanded kernel form, for rho in part^w(N^D_{-k})."""
    terms = []
    for k in range(1, D + 1):
        for rho in _partitions(tuple(index_set_without(D, k)), w):
            terms.append((k, rho))
    return tuple(terms)
