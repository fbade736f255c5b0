"""Integer partitions, Kostka numbers and the majorization order."""

from __future__ import annotations

from functools import lru_cache
from itertools import accumulate
from typing import Iterable, Iterator, Sequence


class Partition(tuple):
    """A weakly decreasing tuple of positive integers.

    Compares equal to the plain tuple of its parts, so ``Partition((3, 2)) == (3, 2)``.
    """

    def __new__(cls, parts: Iterable[int] = ()):
        parts = tuple(int(p) for p in parts)
        if any(p <= 0 for p in parts):
            raise ValueError(f"partition parts must be positive: {parts}")
        if any(a < b for a, b in zip(parts, parts[1:])):
            raise ValueError(f"partition parts must be weakly decreasing: {parts}")
        return super().__new__(cls, parts)

    @property
    def n(self) -> int:
        return sum(self)

    @property
    def parts(self) -> tuple[int, ...]:
        return tuple(self)

    def __repr__(self) -> str:
        return f"Partition({tuple(self)!r})"


def as_partition(parts: Iterable[int]) -> Partition:
    if isinstance(parts, Partition):
        return parts
    return Partition(parts)


def canonicalize(margins: Sequence[int]) -> tuple[Partition, tuple[int, ...]]:
    """Sort positive margins into a partition.

    Returns the partition and the permutation ``order`` with
    ``partition[k] == margins[order[k]]``.
    """
    if any(m <= 0 for m in margins):
        raise ValueError(f"margins must be positive: {tuple(margins)}")
    order = tuple(sorted(range(len(margins)), key=lambda k: (-margins[k], k)))
    return Partition(margins[k] for k in order), order


def partitions_of(n: int) -> list[Partition]:
    """All partitions of ``n`` in decreasing lexicographic order."""
    if n < 1:
        raise ValueError("n must be positive")
    return [Partition(p) for p in _partitions(n, n)]


def _partitions(n: int, largest: int) -> Iterator[tuple[int, ...]]:
    if n == 0:
        yield ()
        return
    for first in range(min(n, largest), 0, -1):
        for rest in _partitions(n - first, first):
            yield (first,) + rest


def kostka(shape: Sequence[int], weight: Sequence[int]) -> int:
    """Number of semistandard Young tableaux of ``shape`` and ``weight``.

    Tableaux are built symbol by symbol: the cells holding symbol ``s`` form a
    horizontal strip of size ``weight[s]`` added to the shape filled so far, so
    the backtracking walks chains of shapes inside ``shape``.  ``weight`` need
    not be sorted.
    """
    shape = tuple(shape)
    weight = tuple(weight)
    if sum(shape) != sum(weight):
        raise ValueError(f"shape {shape} and weight {weight} have different sizes")
    if any(w < 0 for w in weight):
        raise ValueError("weight entries must be non-negative")
    return _kostka(shape, weight)


@lru_cache(maxsize=None)
def _kostka(shape: tuple[int, ...], weight: tuple[int, ...]) -> int:
    return _count_strips(shape, tuple(0 for _ in shape), weight)


@lru_cache(maxsize=None)
def _count_strips(shape: tuple[int, ...], inner: tuple[int, ...], weight: tuple[int, ...]) -> int:
    if not weight:
        return 1 if inner == shape else 0
    size, rest = weight[0], weight[1:]
    total = 0
    for grown in _horizontal_strips(shape, inner, size):
        total += _count_strips(shape, grown, rest)
    return total


def _horizontal_strips(shape, inner, size) -> Iterator[tuple[int, ...]]:
    # Row r may grow up to shape[r] and, to keep columns strict, up to inner[r-1].
    rows = len(shape)

    def grow(r, left, acc):
        if r == rows:
            if left == 0:
                yield tuple(acc)
            return
        cap = shape[r] if r == 0 else min(shape[r], inner[r - 1])
        for add in range(min(left, cap - inner[r]), -1, -1):
            acc.append(inner[r] + add)
            yield from grow(r + 1, left - add, acc)
            acc.pop()

    yield from grow(0, size, [])


def majorizes(a: Sequence[int], b: Sequence[int]) -> bool:
    """True iff ``a`` majorizes ``b``: every prefix sum of ``a`` is at least that of ``b``.

    Vectors are zero-padded to a common length and sorted in decreasing order.
    """
    if sum(a) != sum(b):
        raise ValueError(f"majorization needs equal totals, got {sum(a)} and {sum(b)}")
    length = max(len(a), len(b))
    a = sorted(list(a) + [0] * (length - len(a)), reverse=True)
    b = sorted(list(b) + [0] * (length - len(b)), reverse=True)
    return all(x >= y for x, y in zip(accumulate(a), accumulate(b)))


def conjugate(p: Sequence[int]) -> Partition:
    if not p:
        return Partition(())
    return Partition(sum(1 for part in p if part > c) for c in range(p[0]))
