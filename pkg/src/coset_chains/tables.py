"""Contingency tables with fixed margins and the Fisher-Yates distribution.

A table with row sums ``lambda`` and column sums ``mu`` labels the double coset
``S_lambda x S_mu`` of the symmetric group; a uniform permutation induces the
Fisher-Yates law on tables.  All probabilities here are exact ``Fraction``s.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import accumulate
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .partitions import majorizes

DEFAULT_MAX_STATES = 2_000_000


class StateSpaceTooLarge(RuntimeError):
    """Raised when an enumeration would exceed the configured state cap."""


def max_states() -> int:
    return int(os.environ.get("COSET_CHAINS_MAX_STATES", DEFAULT_MAX_STATES))


def make_rng(seed=None) -> np.random.Generator:
    """Seedable counter-based generator (Philox 4x64) used for all sampling."""
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class ContingencyTable:
    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(int(v) for v in row) for row in self.entries)
        if not rows or not rows[0]:
            raise ValueError("a table needs at least one row and one column")
        if len({len(r) for r in rows}) != 1:
            raise ValueError("ragged rows")
        if any(v < 0 for r in rows for v in r):
            raise ValueError("negative entry")
        object.__setattr__(self, "entries", rows)

    @classmethod
    def _unchecked(cls, entries: tuple) -> "ContingencyTable":
        # for entries already known to be valid integer tuples (hot paths)
        obj = object.__new__(cls)
        object.__setattr__(obj, "entries", entries)
        return obj

    @classmethod
    def from_rows(cls, rows, row_sums=None, col_sums=None) -> "ContingencyTable":
        t = cls(tuple(tuple(r) for r in rows))
        if row_sums is not None and tuple(row_sums) != t.row_sums:
            raise ValueError(f"row sums {t.row_sums} do not match stated {tuple(row_sums)}")
        if col_sums is not None and tuple(col_sums) != t.col_sums:
            raise ValueError(f"column sums {t.col_sums} do not match stated {tuple(col_sums)}")
        return t

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.entries), len(self.entries[0])

    @property
    def row_sums(self) -> tuple[int, ...]:
        return tuple(sum(r) for r in self.entries)

    @property
    def col_sums(self) -> tuple[int, ...]:
        return tuple(sum(c) for c in zip(*self.entries))

    @property
    def n(self) -> int:
        return sum(self.row_sums)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def flat(self) -> tuple[int, ...]:
        return tuple(v for r in self.entries for v in r)

    def array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64)

    def __str__(self) -> str:
        return "(" + "; ".join(",".join(map(str, r)) for r in self.entries) + ")"


@dataclass(frozen=True)
class ThreeWayTable:
    entries: tuple[tuple[tuple[int, ...], ...], ...]

    def __post_init__(self):
        cube = tuple(tuple(tuple(int(v) for v in fibre) for fibre in plane) for plane in self.entries)
        if any(v < 0 for plane in cube for fibre in plane for v in fibre):
            raise ValueError("negative entry")
        object.__setattr__(self, "entries", cube)

    @property
    def shape(self) -> tuple[int, int, int]:
        return len(self.entries), len(self.entries[0]), len(self.entries[0][0])

    def margins(self) -> tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]:
        a = np.array(self.entries)
        return (tuple(int(v) for v in a.sum(axis=(1, 2))),
                tuple(int(v) for v in a.sum(axis=(0, 2))),
                tuple(int(v) for v in a.sum(axis=(0, 1))))

    @property
    def n(self) -> int:
        return sum(self.margins()[0])

    def cells(self) -> Iterator[tuple[tuple[int, int, int], int]]:
        for i, plane in enumerate(self.entries):
            for j, fibre in enumerate(plane):
                for k, v in enumerate(fibre):
                    if v:
                        yield (i, j, k), v


def _check_margins(rows: Sequence[int], cols: Sequence[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    rows, cols = tuple(int(r) for r in rows), tuple(int(c) for c in cols)
    if any(r <= 0 for r in rows) or any(c <= 0 for c in cols):
        raise ValueError("margins must be positive integers")
    if sum(rows) != sum(cols):
        raise ValueError(f"row total {sum(rows)} differs from column total {sum(cols)}")
    return rows, cols


def count_tables(rows: Sequence[int], cols: Sequence[int]) -> int:
    """Number of tables with the given margins (dynamic programming over rows)."""
    rows, cols = _check_margins(rows, cols)
    return _count_rows(rows, cols)


@lru_cache(maxsize=4096)
def _count_rows(rows: tuple[int, ...], remaining: tuple[int, ...]) -> int:
    if len(rows) == 1:
        return 1
    return sum(_count_rows(rows[1:], tuple(c - v for c, v in zip(remaining, row)))
               for row in _bounded_compositions(rows[0], remaining))


def _bounded_compositions(total: int, caps: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """Vectors ``v`` with ``sum(v) == total`` and ``0 <= v[j] <= caps[j]``, lexicographic order."""
    suffix = list(accumulate(reversed(caps)))[::-1] + [0]

    def rec(j, left, acc):
        if j == len(caps):
            yield tuple(acc)
            return
        lo = max(0, left - suffix[j + 1])
        for v in range(lo, min(left, caps[j]) + 1):
            acc.append(v)
            yield from rec(j + 1, left - v, acc)
            acc.pop()

    yield from rec(0, total, [])


def iter_tables(rows: Sequence[int], cols: Sequence[int]) -> Iterator[ContingencyTable]:
    rows, cols = _check_margins(rows, cols)

    def rec(i, remaining, acc):
        if i == len(rows) - 1:
            yield ContingencyTable(tuple(acc) + (tuple(remaining),))
            return
        for row in _bounded_compositions(rows[i], remaining):
            acc.append(row)
            yield from rec(i + 1, tuple(c - v for c, v in zip(remaining, row)), acc)
            acc.pop()

    yield from rec(0, cols, [])


def enumerate_tables(rows: Sequence[int], cols: Sequence[int], cap: int | None = None) -> list[ContingencyTable]:
    """Every table with the given margins, in row-major lexicographic order.

    Raises :class:`StateSpaceTooLarge` when the count exceeds ``cap``
    (default: ``COSET_CHAINS_MAX_STATES`` or 2e6).
    """
    cap = max_states() if cap is None else cap
    size = count_tables(rows, cols)
    if size > cap:
        raise StateSpaceTooLarge(f"state space too large: {size} tables exceeds cap {cap}")
    return list(iter_tables(rows, cols))


def coset_size(t: ContingencyTable) -> int:
    """Size of the double coset labelled by ``t``: prod(lambda_i!) prod(mu_j!) / prod(T_ij!)."""
    num = math.prod(math.factorial(r) for r in t.row_sums) * math.prod(math.factorial(c) for c in t.col_sums)
    den = math.prod(math.factorial(v) for v in t.flat())
    return num // den


def fisher_yates_pmf(t: ContingencyTable) -> Fraction:
    return Fraction(coset_size(t), math.factorial(t.n))


def fisher_yates_distribution(tables: Sequence[ContingencyTable]) -> list[Fraction]:
    return [fisher_yates_pmf(t) for t in tables]


# ---------------------------------------------------------------------------
# permutations and double cosets

def check_permutation(sigma: Sequence[int]) -> tuple[int, ...]:
    sigma = tuple(int(s) for s in sigma)
    if sorted(sigma) != list(range(1, len(sigma) + 1)):
        raise ValueError(f"not a permutation of 1..{len(sigma)}: {sigma}")
    return sigma


def parse_permutation(text: str) -> tuple[int, ...]:
    """Parse ``"12534"`` (n < 10) or ``"1,2,5,3,4"``."""
    text = text.strip()
    parts = text.split(",") if "," in text else list(text)
    return check_permutation(int(p) for p in parts)


def _block_of(sizes: Sequence[int]) -> list[int]:
    return [b for b, size in enumerate(sizes) for _ in range(size)]


def permutation_to_table(sigma: Sequence[int], rows: Sequence[int], cols: Sequence[int]) -> ContingencyTable:
    """Table of the double coset of ``sigma`` (one-line notation, values 1..n).

    Entry (i, j) counts positions in the i-th block of ``rows`` whose value lies
    in the j-th block of ``cols``.
    """
    sigma = check_permutation(sigma)
    rows, cols = _check_margins(rows, cols)
    if len(sigma) != sum(rows):
        raise ValueError("permutation size differs from table total")
    row_block, col_block = _block_of(rows), _block_of(cols)
    counts = [[0] * len(cols) for _ in rows]
    for pos, val in enumerate(sigma):
        counts[row_block[pos]][col_block[val - 1]] += 1
    return ContingencyTable(tuple(map(tuple, counts)))


def min_coset_representative(t: ContingencyTable) -> tuple[int, ...]:
    """Shortest permutation in the double coset of ``t``.

    Positions are filled left to right; row block i takes, for each column
    block j in turn, the next ``T_ij`` smallest unused values of that block.
    """
    starts = [0] + list(accumulate(t.col_sums))[:-1]
    used = [0] * len(starts)
    sigma = []
    for row in t.entries:
        for j, count in enumerate(row):
            sigma.extend(starts[j] + used[j] + s + 1 for s in range(count))
            used[j] += count
    return tuple(sigma)


def sample_fisher_yates(rows: Sequence[int], cols: Sequence[int], rng: np.random.Generator) -> ContingencyTable:
    """Exact draw from Fisher-Yates: shuffle 1..n uniformly, then read off the double coset."""
    rows, cols = _check_margins(rows, cols)
    sigma = rng.permutation(sum(rows)) + 1
    return permutation_to_table(sigma, rows, cols)


def sample_fisher_yates_many(rows: Sequence[int], cols: Sequence[int], size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` independent Fisher-Yates tables as an array of shape (size, I, J)."""
    rows, cols = _check_margins(rows, cols)
    n = sum(rows)
    row_block = np.array(_block_of(rows))
    col_block = np.array(_block_of(cols))
    perms = rng.permuted(np.tile(np.arange(n), (size, 1)), axis=1)
    cell = row_block[None, :] * len(cols) + col_block[perms]
    out = np.zeros((size, len(rows) * len(cols)), dtype=np.int64)
    np.add.at(out, (np.repeat(np.arange(size), n), cell.ravel()), 1)
    return out.reshape(size, len(rows), len(cols))


# ---------------------------------------------------------------------------
# moments and statistics

def expected_entry(rows, cols, i: int, j: int) -> Fraction:
    return Fraction(rows[i] * cols[j], sum(rows))


def cross_moment(rows, cols, ij: tuple[int, int], kl: tuple[int, int]) -> Fraction:
    """E[T_ij T_kl] under Fisher-Yates (0-based cell indices)."""
    (i, j), (k, l) = ij, kl
    n = sum(rows)
    li, mj, lk, ml = rows[i], cols[j], rows[k], cols[l]
    if i != k and j != l:
        return Fraction(li * mj * lk * ml, n * (n - 1))
    if i != k:  # shared column
        return Fraction(li * mj * lk * (mj - 1), n * (n - 1))
    if j != l:  # shared row, by transposition
        return Fraction(mj * li * ml * (li - 1), n * (n - 1))
    return Fraction(li * li * mj * mj, n * n) + Fraction(li * mj * (n - li) * (n - mj), n * n * (n - 1))


def _falling(a: int, k: int) -> int:
    out = 1
    for s in range(k):
        out *= a - s
    return out


def factorial_moment(rows, cols, powers: dict[tuple[int, int], int]) -> Fraction:
    """E[prod (T_ij)_[a_ij]] under Fisher-Yates, with ``(x)_[a]`` the falling factorial.

    Equals prod_i (lambda_i)_[r_i] prod_j (mu_j)_[c_j] / n_[N] where ``r``/``c``
    are the row/column totals of the exponent array and ``N`` its sum.
    """
    n = sum(rows)
    r = [0] * len(rows)
    c = [0] * len(cols)
    for (i, j), a in powers.items():
        r[i] += a
        c[j] += a
    total = sum(r)
    if total > n:
        return Fraction(0)
    num = math.prod(_falling(rows[i], r[i]) for i in range(len(rows)))
    num *= math.prod(_falling(cols[j], c[j]) for j in range(len(cols)))
    return Fraction(num, _falling(n, total))


def chi_square_statistic(t: ContingencyTable) -> Fraction:
    """Pearson chi-square against the independence table, as an exact rational."""
    rows, cols, n = t.row_sums, t.col_sums, t.n
    total = Fraction(0)
    for i, row in enumerate(t.entries):
        for j, v in enumerate(row):
            expected = Fraction(rows[i] * cols[j], n)
            total += (v - expected) ** 2 / expected
    return total


def table_majorizes(t: ContingencyTable, other: ContingencyTable) -> bool:
    """True iff ``other`` majorizes ``t`` (``t`` precedes ``other``)."""
    if t.row_sums != other.row_sums or t.col_sums != other.col_sums:
        raise ValueError("tables must share both margins")
    return majorizes(sorted(other.flat(), reverse=True), sorted(t.flat(), reverse=True))


def _q_integer(m: int, theta):
    return sum(theta ** s for s in range(m))


def _q_factorial(m: int, theta):
    out = theta ** 0
    for s in range(1, m + 1):
        out *= _q_integer(s, theta)
    return out


def q_coset_weight(t: ContingencyTable, theta):
    """Size weight of the parabolic double coset of GL_n(1/theta) labelled by ``t``.

    theta^(-n^2 + sum_{i<i', j<j'} T_ij T_i'j') (1-theta)^n
    prod [lambda_i]! prod [mu_j]! / prod [T_ij]!, with theta-factorials.
    Exact when ``theta`` is a Fraction; float otherwise.
    """
    if not 0 < theta <= 1:
        raise ValueError("theta must lie in (0, 1]")
    if not isinstance(theta, Fraction):
        theta = float(theta)
    entries = t.entries
    I, J = t.shape
    inversions = sum(entries[i][j] * entries[i2][j2]
                     for i in range(I) for i2 in range(i + 1, I)
                     for j in range(J) for j2 in range(j + 1, J))
    n = t.n
    weight = theta ** (inversions - n * n) * (1 - theta) ** n
    for m in t.row_sums + t.col_sums:
        weight *= _q_factorial(m, theta)
    for v in t.flat():
        weight /= _q_factorial(v, theta)
    return weight


# ---------------------------------------------------------------------------
# three-way tables

def iter_three_way(lam: Sequence[int], mu: Sequence[int], rho: Sequence[int]) -> Iterator[ThreeWayTable]:
    """Every I x J x K table with one-dimensional margins ``lam``, ``mu``, ``rho``."""
    lam, mu = _check_margins(lam, mu)
    _, rho = _check_margins(lam, rho)
    I = len(lam)

    # Slice i is a J x K table with row sums a_i (sum a_i = lam_i) and column
    # sums b_i (sum b_i = lam_i); the slices must add up to mu and rho.
    def rec(i, mu_left, rho_left, acc):
        if i == I - 1:
            for plane in iter_tables_nonneg(mu_left, rho_left):
                yield ThreeWayTable(tuple(acc) + (plane,))
            return
        for a in _bounded_compositions(lam[i], mu_left):
            for b in _bounded_compositions(lam[i], rho_left):
                for plane in iter_tables_nonneg(a, b):
                    acc.append(plane)
                    yield from rec(i + 1, tuple(x - y for x, y in zip(mu_left, a)),
                                   tuple(x - y for x, y in zip(rho_left, b)), acc)
                    acc.pop()

    yield from rec(0, mu, rho, [])


def iter_tables_nonneg(rows: Sequence[int], cols: Sequence[int]) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Like :func:`iter_tables` but margins may contain zeros; yields raw entry tuples."""
    rows, cols = tuple(rows), tuple(cols)
    if sum(rows) != sum(cols):
        return

    def rec(i, remaining, acc):
        if i == len(rows) - 1:
            yield tuple(acc) + (tuple(remaining),)
            return
        for row in _bounded_compositions(rows[i], remaining):
            acc.append(row)
            yield from rec(i + 1, tuple(c - v for c, v in zip(remaining, row)), acc)
            acc.pop()

    yield from rec(0, cols, [])


def three_way_pmf(t: ThreeWayTable) -> Fraction:
    """(1/n!^2) prod lam_i! mu_j! rho_k! / prod T_ijk!  (the complete-independence law)."""
    lam, mu, rho = t.margins()
    n = sum(lam)
    num = math.prod(math.factorial(v) for v in lam + mu + rho)
    den = math.prod(math.factorial(v) for _, v in t.cells()) * math.factorial(n) ** 2
    return Fraction(num, den)


# ---------------------------------------------------------------------------
# file formats

def table_to_json(t: ContingencyTable) -> str:
    return json.dumps({"rows": [list(r) for r in t.entries],
                       "row_sums": list(t.row_sums), "col_sums": list(t.col_sums)})


def table_from_json(text: str) -> ContingencyTable:
    data = json.loads(text)
    if "rows" not in data:
        raise ValueError("JSON table needs a 'rows' field")
    rows = data["rows"]
    _check_integral(rows)
    return ContingencyTable.from_rows(rows, data.get("row_sums"), data.get("col_sums"))


def table_to_csv(t: ContingencyTable) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(t.entries)
    return buf.getvalue()


def table_from_csv(text: str) -> ContingencyTable:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    parsed = []
    for r in rows:
        try:
            parsed.append([int(c) for c in r])
        except ValueError as exc:
            raise ValueError(f"non-integer entry in CSV row {r}") from exc
    return ContingencyTable.from_rows(parsed)


def _check_integral(rows):
    for r in rows:
        if not isinstance(r, list):
            raise ValueError("rows must be lists of integers")
        for v in r:
            if isinstance(v, bool) or not isinstance(v, int):
                raise ValueError(f"non-integer entry {v!r}")


def load_table(path, fmt: str | None = None) -> ContingencyTable:
    path = Path(path)
    fmt = fmt or ("json" if path.suffix.lower() == ".json" else "csv")
    text = path.read_text()
    if fmt == "json":
        return table_from_json(text)
    if fmt == "csv":
        return table_from_csv(text)
    raise ValueError(f"unknown table format {fmt!r}")


def save_table(t: ContingencyTable, path, fmt: str | None = None) -> None:
    path = Path(path)
    fmt = fmt or ("json" if path.suffix.lower() == ".json" else "csv")
    path.write_text(table_to_json(t) if fmt == "json" else table_to_csv(t))
