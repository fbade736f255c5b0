"""Markov kernels on contingency tables.

The random transpositions chain moves a table by a swap ``F`` on a 2x2 minor:
``T[i1,j1]`` and ``T[i2,j2]`` drop by one while ``T[i1,j2]`` and ``T[i2,j1]``
grow by one.  Companion kernels (uniform swaps, two Metropolis hybrids, the
three-way chain) share the same move set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Iterator, Sequence

import numpy as np
import scipy.sparse as sp

from .tables import (ContingencyTable, ThreeWayTable, enumerate_tables, fisher_yates_pmf,
                     iter_three_way, three_way_pmf, _block_of, _check_margins)


@dataclass(frozen=True)
class SwapMove:
    i1: int
    j1: int
    i2: int
    j2: int

    def __post_init__(self):
        if self.i1 == self.i2 or self.j1 == self.j2:
            raise ValueError("a swap needs two distinct rows and two distinct columns")

    def apply(self, t: ContingencyTable) -> ContingencyTable:
        e = t.entries
        r1, r2 = list(e[self.i1]), list(e[self.i2])
        r1[self.j1] -= 1
        r2[self.j2] -= 1
        r1[self.j2] += 1
        r2[self.j1] += 1
        if r1[self.j1] < 0 or r2[self.j2] < 0:
            raise ValueError("swap would create a negative entry")
        rows = list(e)
        rows[self.i1], rows[self.i2] = tuple(r1), tuple(r2)
        return ContingencyTable._unchecked(tuple(rows))


def swap_moves(t: ContingencyTable) -> Iterator[SwapMove]:
    """All swaps over unordered row pairs ``i1 < i2`` and ordered columns ``j1 != j2``.

    Both diagonal orientations of each 2x2 minor are included; each gives a
    different neighbour.  Feasibility is not checked here.
    """
    I, J = t.shape
    for i1 in range(I):
        for i2 in range(i1 + 1, I):
            for j1 in range(J):
                for j2 in range(J):
                    if j1 != j2:
                        yield SwapMove(i1, j1, i2, j2)


def _with_holding(t, moves: dict, total=None) -> dict:
    out = dict(moves)
    out[t] = out.get(t, Fraction(0)) + 1 - sum(moves.values(), Fraction(0))
    if out[t] < 0:
        raise ArithmeticError(f"negative holding probability at {t}")
    if out[t] == 0:
        del out[t]
    return out


def rt_row(t: ContingencyTable, no_holding: bool = False) -> dict[ContingencyTable, Fraction]:
    """Random transpositions row: each swap F gets 2 T[i1,j1] T[i2,j2] / n^2.

    With ``no_holding`` the weight is 2 T[i1,j1] T[i2,j2] / (n(n-1)), the law
    of two distinct cards.  The remaining mass is the holding probability.
    """
    n = t.n
    denom = n * (n - 1) if no_holding else n * n
    if denom == 0:
        return {t: Fraction(1)}
    moves = {nb: Fraction(w, denom) for nb, w in rt_row_weights(t)}
    return _with_holding(t, moves)


def _support_pairs(t: ContingencyTable) -> Iterator[tuple[SwapMove, int]]:
    """Swaps whose two pivot cells are both positive, with the pivot product."""
    cells = [(i, j, v) for i, row in enumerate(t.entries) for j, v in enumerate(row) if v]
    for a, (i1, j1, v1) in enumerate(cells):
        for i2, j2, v2 in cells[a + 1:]:
            if i1 != i2 and j1 != j2:
                yield SwapMove(i1, j1, i2, j2), v1 * v2


def rt_row_weights(t: ContingencyTable) -> list[tuple[ContingencyTable, int]]:
    """Off-diagonal rt weights as integers over the common denominator n^2."""
    return [(mv.apply(t), 2 * w) for mv, w in _support_pairs(t)]


def uniform_swap_row(t: ContingencyTable) -> dict[ContingencyTable, Fraction]:
    """Symmetric swap chain: every feasible swap has probability 2/(IJ)^2."""
    I, J = t.shape
    p = Fraction(2, (I * J) ** 2)
    moves = {mv.apply(t): p for mv in swap_moves(t) if t[mv.i1, mv.j1] and t[mv.i2, mv.j2]}
    return _with_holding(t, moves)


def metropolis_uniform_row(t: ContingencyTable) -> dict[ContingencyTable, Fraction]:
    """rt proposals accepted towards the uniform law: min(P(x,y), P(y,x))."""
    n2 = t.n ** 2
    moves = {}
    for mv in swap_moves(t):
        a, b = t[mv.i1, mv.j1], t[mv.i2, mv.j2]
        if a and b:
            back = (t[mv.i1, mv.j2] + 1) * (t[mv.i2, mv.j1] + 1)
            moves[mv.apply(t)] = Fraction(2 * min(a * b, back), n2)
    return _with_holding(t, moves)


def metropolis_fy_row(t: ContingencyTable) -> dict[ContingencyTable, Fraction]:
    """Uniform swap proposals accepted towards Fisher-Yates."""
    I, J = t.shape
    p = Fraction(2, (I * J) ** 2)
    moves = {}
    for mv in swap_moves(t):
        a, b = t[mv.i1, mv.j1], t[mv.i2, mv.j2]
        if a and b:
            ratio = Fraction(a * b, (t[mv.i1, mv.j2] + 1) * (t[mv.i2, mv.j1] + 1))
            moves[mv.apply(t)] = p * min(Fraction(1), ratio)
    return _with_holding(t, moves)


@dataclass
class ChainKernel:
    """A transition law on an enumerated state space.

    ``row_fn(state)`` returns a mapping neighbour -> exact probability
    (holding included).  Rows are computed lazily and cached.
    """

    name: str
    states: list
    row_fn: Callable[[Hashable], dict]
    stationary_fn: Callable[[Hashable], Fraction] | None = None
    _index: dict = field(default=None, repr=False)
    _rows: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._index = {s: k for k, s in enumerate(self.states)}

    def __len__(self) -> int:
        return len(self.states)

    def index(self, state) -> int:
        return self._index[state]

    def row(self, state) -> dict:
        """Sparse row as ``{state: Fraction}``."""
        if state not in self._rows:
            self._rows[state] = self.row_fn(state)
        return self._rows[state]

    def row_indexed(self, k: int) -> list[tuple[int, Fraction]]:
        return sorted((self._index[s], p) for s, p in self.row(self.states[k]).items())

    def stationary(self, exact: bool = True):
        if self.stationary_fn is None:
            raise ValueError(f"kernel {self.name} has no stationary law attached")
        pi = [self.stationary_fn(s) for s in self.states]
        return pi if exact else np.array([float(p) for p in pi])

    def sparse(self) -> sp.csr_matrix:
        r, c, v = [], [], []
        for k in range(len(self.states)):
            for j, p in self.row_indexed(k):
                r.append(k)
                c.append(j)
                v.append(float(p))
        N = len(self.states)
        return sp.csr_matrix((v, (r, c)), shape=(N, N))

    def dense(self) -> np.ndarray:
        return self.sparse().toarray()


def rt_kernel(rows: Sequence[int], cols: Sequence[int], no_holding: bool = False, states=None) -> ChainKernel:
    states = enumerate_tables(rows, cols) if states is None else states
    name = "rt_no_holding" if no_holding else "rt"
    return ChainKernel(name, states, lambda t: rt_row(t, no_holding), fisher_yates_pmf)


def uniform_swap_kernel(rows, cols, states=None) -> ChainKernel:
    states = enumerate_tables(rows, cols) if states is None else states
    size = len(states)
    return ChainKernel("uniform_swap", states, uniform_swap_row, lambda t: Fraction(1, size))


def metropolis_uniform_kernel(rows, cols, states=None) -> ChainKernel:
    states = enumerate_tables(rows, cols) if states is None else states
    size = len(states)
    return ChainKernel("metropolis_uniform", states, metropolis_uniform_row, lambda t: Fraction(1, size))


def metropolis_fy_kernel(rows, cols, states=None) -> ChainKernel:
    states = enumerate_tables(rows, cols) if states is None else states
    return ChainKernel("metropolis_fy", states, metropolis_fy_row, fisher_yates_pmf)


KERNELS = {
    "rt": rt_kernel,
    "uniform": uniform_swap_kernel,
    "metropolis_uniform": metropolis_uniform_kernel,
    "metropolis_fy": metropolis_fy_kernel,
}


def rt_matrix(rows, cols, states=None) -> tuple[list[ContingencyTable], sp.csr_matrix]:
    """Float rt transition matrix built from integer weights (fast path for large spaces)."""
    states = enumerate_tables(rows, cols) if states is None else states
    index = {s: k for k, s in enumerate(states)}
    n2 = float(sum(rows)) ** 2
    r, c, v = [], [], []
    for k, t in enumerate(states):
        off = 0
        for nb, w in rt_row_weights(t):
            r.append(k)
            c.append(index[nb])
            v.append(w / n2)
            off += w
        r.append(k)
        c.append(k)
        v.append(1.0 - off / n2)
    N = len(states)
    return states, sp.csr_matrix((v, (r, c)), shape=(N, N))


# ---------------------------------------------------------------------------
# sampling forms

def rt_sample_step(t: ContingencyTable, rng: np.random.Generator) -> ContingencyTable:
    """One rt step: pick two of the n data points (with replacement) and swap their columns."""
    flat = t.flat()
    n = t.n
    I, J = t.shape
    cum = np.cumsum(flat)
    a, b = rng.integers(n, size=2)
    ca, cb = int(np.searchsorted(cum, a, side="right")), int(np.searchsorted(cum, b, side="right"))
    (i1, j1), (i2, j2) = divmod(ca, J), divmod(cb, J)
    if i1 == i2 or j1 == j2:
        return t
    return SwapMove(i1, j1, i2, j2).apply(t)


def sn_rt_step(sigma: Sequence[int], rng: np.random.Generator) -> tuple[int, ...]:
    """Right-multiply by the transposition of two uniformly chosen positions (equal picks hold)."""
    sigma = list(sigma)
    n = len(sigma)
    a, b = rng.integers(n, size=2)
    sigma[a], sigma[b] = sigma[b], sigma[a]
    return tuple(sigma)


def sn_rt_walk(sigma0: Sequence[int], steps: int, paths: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Run ``paths`` independent S_n walks from ``sigma0``; returns the permutations after each step.

    Element ``t`` of the result is an array of shape (paths, n) (values 1..n),
    for t = 0..steps.
    """
    perms = np.tile(np.asarray(sigma0, dtype=np.int64), (paths, 1))
    n = perms.shape[1]
    out = [perms.copy()]
    idx = np.arange(paths)
    for _ in range(steps):
        a = rng.integers(n, size=paths)
        b = rng.integers(n, size=paths)
        va, vb = perms[idx, a].copy(), perms[idx, b].copy()
        perms[idx, a] = vb
        perms[idx, b] = va
        out.append(perms.copy())
    return out


def permutations_to_tables(perms: np.ndarray, rows, cols) -> np.ndarray:
    """Vectorized :func:`permutation_to_table` over a (paths, n) array; returns flat cell counts."""
    rows, cols = _check_margins(rows, cols)
    row_block = np.array(_block_of(rows))
    col_block = np.array(_block_of(cols))
    cell = row_block[None, :] * len(cols) + col_block[perms - 1]
    paths = perms.shape[0]
    out = np.zeros((paths, len(rows) * len(cols)), dtype=np.int64)
    np.add.at(out, (np.repeat(np.arange(paths), perms.shape[1]), cell.ravel()), 1)
    return out


def collapse_to_2x2(t: ContingencyTable) -> ContingencyTable:
    """Merge rows 2..I and columns 2..J, keeping the (1,1) entry."""
    I, J = t.shape
    if I < 2 or J < 2:
        raise ValueError("collapsing needs at least two rows and two columns")
    a = t[0, 0]
    b = t.row_sums[0] - a
    c = t.col_sums[0] - a
    d = t.n - a - b - c
    return ContingencyTable(((a, b), (c, d)))


def lumped_row(kernel: ChainKernel, state, project: Callable) -> dict:
    """Push a kernel row through ``project`` (aggregating mass per image)."""
    out: dict = {}
    for nb, p in kernel.row(state).items():
        key = project(nb)
        out[key] = out.get(key, Fraction(0)) + p
    return out


def dump_trajectory(kernel: ChainKernel, path_states: Sequence, fh) -> None:
    """Write a trajectory as JSON lines ``{t, state_index, entries}``."""
    for t, s in enumerate(path_states):
        fh.write(json.dumps({"t": t, "state_index": kernel.index(s),
                             "entries": [list(r) for r in s.entries]}) + "\n")


# ---------------------------------------------------------------------------
# three-way chain

def three_way_row(t: ThreeWayTable) -> dict[ThreeWayTable, Fraction]:
    """Pick two data points and an axis r uniformly; swap their r-th coordinates.

    Each unordered pair of distinct cells and axis contributes
    (1/3) 2 T_c1 T_c2 / n^2; coinciding targets are aggregated and no-op
    swaps fold into holding.
    """
    n = t.n
    cells = list(t.cells())
    counts = dict(cells)
    denom = 3 * n * n
    moves: dict = {}
    for a in range(len(cells)):
        for b in range(a + 1, len(cells)):
            (c1, v1), (c2, v2) = cells[a], cells[b]
            for r in range(3):
                if c1[r] == c2[r]:
                    continue
                d1 = list(c1)
                d2 = list(c2)
                d1[r], d2[r] = c2[r], c1[r]
                new = dict(counts)
                for c in (c1, c2):
                    new[c] -= 1
                for d in (tuple(d1), tuple(d2)):
                    new[d] = new.get(d, 0) + 1
                target = _three_way_from_counts(new, t.shape)
                if target == t:
                    continue
                moves[target] = moves.get(target, Fraction(0)) + Fraction(2 * v1 * v2, denom)
    return _with_holding(t, moves)


def _three_way_from_counts(counts: dict, shape) -> ThreeWayTable:
    I, J, K = shape
    return ThreeWayTable(tuple(tuple(tuple(counts.get((i, j, k), 0) for k in range(K))
                                     for j in range(J)) for i in range(I)))


def three_way_kernel(lam, mu, rho) -> ChainKernel:
    states = list(iter_three_way(lam, mu, rho))
    return ChainKernel("three_way", states, three_way_row, three_way_pmf)


@dataclass
class ThreeWayReport:
    margins: tuple
    states: int
    rows_sum_to_one: bool
    detailed_balance: bool
    components: int


def three_way_states(lam, mu, rho) -> np.ndarray:
    """All three-way tables as sorted multisets of cell codes, shape (states, n).

    Cell (i, j, k) has code (i*J + j)*K + k.  Data point p has first coordinate
    fixed by the block structure of ``lam``; every table arises from some
    arrangement of the ``mu`` and ``rho`` labels over the points.
    """
    lam, mu = _check_margins(lam, mu)
    _, rho = _check_margins(lam, rho)
    J, K = len(mu), len(rho)
    iw = np.array(_block_of(lam))
    jw = _multiset_permutations(_block_of(mu))
    kw = _multiset_permutations(_block_of(rho))
    # Permuting points inside an i-block gives the same table, so the j labels
    # may be taken sorted inside each block (canonical up to that symmetry).
    jw = np.unique(_sort_within_blocks(jw, lam), axis=0)
    codes = (iw[None, None, :] * J + jw[:, None, :]) * K + kw[None, :, :]
    codes = np.sort(codes.reshape(-1, codes.shape[-1]), axis=1)
    return np.unique(codes, axis=0)


def _sort_within_blocks(words: np.ndarray, sizes) -> np.ndarray:
    out = words.copy()
    start = 0
    for s in sizes:
        out[:, start:start + s] = np.sort(out[:, start:start + s], axis=1)
        start += s
    return out


def _multiset_permutations(word: Sequence[int]) -> np.ndarray:
    """Distinct rearrangements of ``word`` as rows of an array."""
    word = sorted(word)
    out = []

    def rec(counts, acc):
        if len(acc) == len(word):
            out.append(list(acc))
            return
        for v in range(len(counts)):
            if counts[v]:
                counts[v] -= 1
                acc.append(v)
                rec(counts, acc)
                acc.pop()
                counts[v] += 1

    counts = [word.count(v) for v in range(max(word) + 1)]
    rec(counts, [])
    return np.array(out, dtype=np.int64)


def _encode(codes: np.ndarray, base: int) -> np.ndarray:
    key = np.zeros(codes.shape[0], dtype=np.int64)
    for col in range(codes.shape[1]):
        key = key * base + codes[:, col]
    return key


def three_way_count_matrix(lam, mu, rho, chunk: int = 20000):
    """Integer transition counts C with P = C / (3 n^2), plus the state array.

    Counts run over ordered picks (a, b) of data points and axes r; picks
    with a == b, or swaps that leave the table unchanged, land on the diagonal.
    """
    states = three_way_states(lam, mu, rho)
    n = states.shape[1]
    J, K = len(mu), len(rho)
    base = len(lam) * J * K
    if base ** n >= 2 ** 62:
        raise OverflowError("state codes do not fit in 64 bits")
    keys = _encode(states, base)
    order = np.argsort(keys)
    keys_sorted = keys[order]
    N = states.shape[0]
    # (a, b) and (b, a) perform the same swap, so each unordered pick counts twice
    picks = [(a, b) for a in range(n) for b in range(a + 1, n)]
    C = sp.csr_matrix((N, N), dtype=np.int64)
    for lo in range(0, N, chunk):
        block = states[lo:lo + chunk]
        coords = [block // (J * K), (block // K) % J, block % K]
        src, dst = [np.empty(0, dtype=np.int64)], [np.empty(0, dtype=np.int64)]
        for a, b in picks:
            for r in range(3):
                new = [c.copy() for c in coords]
                new[r][:, a], new[r][:, b] = coords[r][:, b], coords[r][:, a]
                code = np.sort((new[0] * J + new[1]) * K + new[2], axis=1)
                pos = np.searchsorted(keys_sorted, _encode(code, base))
                src.append(np.arange(lo, lo + block.shape[0]))
                dst.append(order[pos])
        src, dst = np.concatenate(src), np.concatenate(dst)
        C = C + sp.csr_matrix((np.full(src.shape[0], 2, dtype=np.int64), (src, dst)), shape=(N, N))
    # diagonal picks a == b
    C = C + sp.identity(N, dtype=np.int64, format="csr") * (3 * n)
    return states, C


def verify_three_way(lam, mu, rho) -> ThreeWayReport:
    """Check row sums, detailed balance against the product-hypergeometric law, and irreducibility.

    All checks are in integer arithmetic: with C the count matrix and
    D_x = prod_c T_c(x)!, reversibility reads C[x,y] D_y == C[y,x] D_x.
    """
    from scipy.sparse.csgraph import connected_components

    states, C = three_way_count_matrix(lam, mu, rho)
    n = states.shape[1]
    row_ok = bool(np.all(np.asarray(C.sum(axis=1)).ravel() == 3 * n * n))
    D = _factorial_products(states)
    M = (C @ sp.diags(D)).tocsr()
    diff = (M - M.T).tocsr()
    diff.eliminate_zeros()
    ncomp, _ = connected_components(C, directed=True, connection="strong")
    return ThreeWayReport((tuple(lam), tuple(mu), tuple(rho)), states.shape[0], row_ok, diff.nnz == 0, ncomp)


def _factorial_products(states: np.ndarray) -> np.ndarray:
    """prod_c T_c! for each row of sorted cell codes.

    Within a run of equal codes the running position counts 1, 2, ..., r, so
    the product of these counters over a row is the product of r! over runs.
    """
    run = np.ones(states.shape, dtype=np.int64)
    for c in range(1, states.shape[1]):
        run[:, c] = np.where(states[:, c] == states[:, c - 1], run[:, c - 1] + 1, 1)
    return np.prod(run, axis=1)
