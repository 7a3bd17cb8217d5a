"""Pair partitions and coupled permutations of index positions.

Positions are 1-based throughout, matching the subscripts ``i_1..i_k``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

__all__ = [
    "PairPartition",
    "CoupledPermutation",
    "pair_partitions",
    "all_pair_partitions",
    "partition_count",
    "coupled_permutations",
]


@dataclass(frozen=True)
class PairPartition:
    """``r`` unordered pairs plus the leftover singles, in canonical order."""

    pairs: tuple[tuple[int, int], ...]
    singles: tuple[int, ...]

    def __post_init__(self):
        seen = [p for pair in self.pairs for p in pair] + list(self.singles)
        if len(seen) != len(set(seen)):
            raise ValueError("positions repeat")
        if any(a >= b for a, b in self.pairs):
            raise ValueError("pairs must be stored smaller position first")
        if list(self.pairs) != sorted(self.pairs) or list(self.singles) != sorted(self.singles):
            raise ValueError("partition is not in canonical order")

    @property
    def k(self) -> int:
        return 2 * len(self.pairs) + len(self.singles)

    @property
    def r(self) -> int:
        return len(self.pairs)


def _matchings(items: tuple[int, ...]):
    """Perfect matchings of ``items`` with the first item always paired first."""
    if not items:
        yield ()
        return
    head, rest = items[0], items[1:]
    for n, other in enumerate(rest):
        remaining = rest[:n] + rest[n + 1:]
        for tail in _matchings(remaining):
            yield ((head, other),) + tail


def pair_partitions(k: int, r: int) -> list[PairPartition]:
    """All ways to pick ``r`` disjoint unordered pairs from ``{1..k}``.

    Output is sorted by ``(pairs, singles)`` so the order is deterministic.
    """
    if k < 0 or r < 0:
        raise ValueError("k and r must be nonnegative")
    if 2 * r > k:
        raise ValueError(f"cannot form {r} pairs from {k} positions")
    out = []
    for chosen in itertools.combinations(range(1, k + 1), 2 * r):
        singles = tuple(p for p in range(1, k + 1) if p not in chosen)
        for pairs in _matchings(chosen):
            out.append(PairPartition(tuple(sorted(pairs)), singles))
    out.sort(key=lambda p: (p.pairs, p.singles))
    return out


def all_pair_partitions(k: int) -> list[PairPartition]:
    """Partitions for every ``r = 0..k//2``, ``r = 0`` first."""
    return [p for r in range(k // 2 + 1) for p in pair_partitions(k, r)]


def partition_count(k: int, r: int) -> int:
    """``k! / (r! 2^r (k-2r)!)``."""
    return math.factorial(k) // (math.factorial(r) * 2**r * math.factorial(k - 2 * r))


@dataclass(frozen=True)
class CoupledPermutation:
    """A permutation of positions applied to ``j`` and ``i`` together.

    ``image[l-1]`` is the position whose index lands in slot ``l``, so
    ``apply(js)[l-1] == js[image[l-1]-1]``.
    """

    image: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.image) != list(range(1, len(self.image) + 1)):
            raise ValueError("not a permutation of 1..k")

    @property
    def k(self) -> int:
        return len(self.image)

    def apply(self, seq):
        if len(seq) != self.k:
            raise ValueError("length mismatch")
        return tuple(seq[p - 1] for p in self.image)

    def is_identity(self) -> bool:
        return self.image == tuple(range(1, self.k + 1))

    def axes(self) -> tuple[int, ...]:
        """Zero-based axis order for ``np.transpose``."""
        return tuple(p - 1 for p in self.image)


def coupled_permutations(k: int) -> list[CoupledPermutation]:
    """All ``k!`` permutations in lexicographic order."""
    if k < 1:
        raise ValueError("k must be positive")
    return [CoupledPermutation(p) for p in itertools.permutations(range(1, k + 1))]
