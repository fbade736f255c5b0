"""Convergence to stationarity: exact distances, closed-form bounds, chain comparison."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import backend
from .chains import KERNELS, ChainKernel, rt_kernel
from .spectral import beta_two_row, brute_force_spectrum, kernel_poly_extreme, spectrum
from .tables import ContingencyTable, enumerate_tables, fisher_yates_pmf

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 5_000_000  # rational multiply-adds before switching to floats


@dataclass
class Evolution:
    dist: list | np.ndarray
    steps: int
    switched_at: int | None = None  # first step computed in floating point, if any

    @property
    def exact(self) -> bool:
        return self.switched_at is None


@dataclass
class DistanceProfile:
    t: list[int]
    tv: list[float]
    chi2: list[float]
    start: int | None = None  # state index, None for a pi-average


def _start_vector(kernel: ChainKernel, start, exact: bool):
    N = len(kernel)
    if isinstance(start, (ContingencyTable, int, np.integer)):
        k = kernel.index(start) if isinstance(start, ContingencyTable) else int(start)
        vec = [Fraction(0)] * N
        vec[k] = Fraction(1)
    elif isinstance(start, dict):
        vec = [Fraction(0)] * N
        for s, p in start.items():
            vec[kernel.index(s)] = Fraction(p)
    else:
        if len(start) != N:
            raise ValueError(f"start has {len(start)} entries, kernel has {N} states")
        vec = [Fraction(p) if exact else p for p in start]
    return vec if exact else np.array([float(p) for p in vec])


def evolve(kernel: ChainKernel, start, t: int, exact: bool = True, budget: int = DEFAULT_BUDGET) -> Evolution:
    """Push ``start`` through ``t`` steps of ``kernel`` (row vector times P^t).

    In exact mode the arithmetic is rational while the estimated work stays
    within ``budget``; past that the remaining steps run in double precision
    and the switch step is recorded.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    vec = _start_vector(kernel, start, exact)
    if not exact:
        P = kernel.sparse()
        for _ in range(t):
            vec = P.T @ vec
        return Evolution(vec, t, 0 if t else None)
    rows = [kernel.row_indexed(k) for k in range(len(kernel))]
    per_step = sum(len(r) for r in rows)
    work = 0
    for step in range(t):
        if work + per_step > budget:
            log.info("exact evolution switched to floats at step %d (budget %d)", step, budget)
            rest = evolve(kernel, [float(p) for p in vec], t - step, exact=False)
            return Evolution(rest.dist, t, step)
        new = [Fraction(0)] * len(vec)
        for k, row in enumerate(rows):
            mass = vec[k]
            if mass:
                for j, p in row:
                    new[j] += mass * p
        vec = new
        work += per_step
    return Evolution(vec, t)


def evolve_distribution(kernel: ChainKernel, start, t: int, exact: bool = True, budget: int = DEFAULT_BUDGET):
    return evolve(kernel, start, t, exact, budget).dist


def tv_distance(p: Sequence, q: Sequence):
    """Half the L1 distance; exact when both inputs are rational."""
    if len(p) != len(q):
        raise ValueError("distributions live on different state spaces")
    if isinstance(p, np.ndarray) or isinstance(q, np.ndarray):
        return 0.5 * float(np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float)).sum())
    return sum((abs(a - b) for a, b in zip(p, q)), Fraction(0)) / 2


def chi2_from(dist: Sequence, pi: Sequence):
    if isinstance(dist, np.ndarray):
        pi = np.asarray(pi, dtype=float)
        return float(((dist - pi) ** 2 / pi).sum())
    return sum(((a - b) ** 2 / b for a, b in zip(dist, pi)), Fraction(0))


def chi2_distance(kernel: ChainKernel, x0, t: int, exact: bool = False):
    """chi^2_x0(t) = sum_y (P^t(x0,y) - pi(y))^2 / pi(y)."""
    dist = evolve_distribution(kernel, x0, t, exact)
    return chi2_from(dist, kernel.stationary(exact=not isinstance(dist, np.ndarray)))


def distance_profile(kernel: ChainKernel, x0, t_max: int) -> DistanceProfile:
    """TV and chi^2 from a point mass for t = 0..t_max (floating point)."""
    P = kernel.sparse()
    pi = kernel.stationary(exact=False)
    vec = _start_vector(kernel, x0, exact=False)
    out = DistanceProfile([], [], [], int(np.argmax(vec)))
    for t in range(t_max + 1):
        if t:
            vec = P.T @ vec
        out.t.append(t)
        out.tv.append(tv_distance(vec, pi))
        out.chi2.append(chi2_from(vec, pi))
    return out


# ---------------------------------------------------------------------------
# whole-matrix quantities

def _matrix_power_exact(P: list[list[Fraction]], t: int) -> list[list[Fraction]]:
    N = len(P)

    def mul(A, B):
        Bt = list(zip(*B))
        return [[sum((a * b for a, b in zip(row, col) if a and b), Fraction(0)) for col in Bt] for row in A]

    result = [[Fraction(int(i == j)) for j in range(N)] for i in range(N)]
    base = P
    while t:
        if t & 1:
            result = mul(result, base)
        t >>= 1
        if t:
            base = mul(base, base)
    return result


def transition_power(kernel: ChainKernel, t: int, exact: bool = False):
    if exact:
        N = len(kernel)
        P = [[Fraction(0)] * N for _ in range(N)]
        for k in range(N):
            for j, p in kernel.row_indexed(k):
                P[k][j] = p
        return _matrix_power_exact(P, t)
    return np.linalg.matrix_power(kernel.dense(), t)


def average_chi2(kernel: ChainKernel, t: int, exact: bool = False):
    """sum_x pi(x) chi^2_x(t), computed directly from P^t."""
    Pt = transition_power(kernel, t, exact)
    pi = kernel.stationary(exact=exact)
    if exact:
        N = len(pi)
        return sum((pi[x] * chi2_from(Pt[x], pi) for x in range(N)), Fraction(0))
    Pt = np.asarray(Pt)
    return float(sum(pi[x] * chi2_from(Pt[x], pi) for x in range(len(pi))))


def average_chi2_closed_forms(rows, cols, t) -> dict[str, float]:
    """Candidate spectral expressions for the pi-averaged chi^2 at time ``t``.

    ``multiplicity``: sum m_rho beta^{2t};  ``multiplicity_squared``: sum
    m_rho^2 beta^{2t};  ``quarter``: (1/4) sum m_rho beta^{2t}.  The sums run
    over the non-trivial eigenvalues.
    """
    spec = spectrum(rows, cols)
    n = sum(rows)
    forms = {"multiplicity": 0.0, "multiplicity_squared": 0.0}
    for e in spec:
        if tuple(e.partition) == (n,):
            continue
        power = float(e.beta) ** (2 * t)
        forms["multiplicity"] += e.multiplicity * power
        forms["multiplicity_squared"] += e.multiplicity ** 2 * power
    forms["quarter"] = forms["multiplicity"] / 4
    return forms


def two_row_average_sum(k: int, n: int, t) -> float:
    """sum_{m=1}^k (1 - 2m(n+1-m)/n^2)^{2t}."""
    return sum(float(beta_two_row(m, n)) ** (2 * t) for m in range(1, k + 1))


@dataclass
class AverageBound:
    kind: str
    t: float
    bound: float
    t_checked: int | None = None  # integer time the exact average was evaluated at
    exact_average: float | None = None

    @property
    def holds(self) -> bool | None:
        if self.exact_average is None:
            return None
        if self.kind == "upper":
            return self.exact_average <= self.bound
        return self.exact_average >= self.bound


def avg_chi2_bound(k: int, l: int, n: int, c: float, kind: str = "upper", verify: bool = True) -> AverageBound:
    """Time and bound for the pi-averaged distance on (n-k, k) x (n-l, l) tables.

    ``upper``: t = (n/4)(log k + c) with bound e^{-c}.  ``lower``: t = c n / 4
    with bound 1 - c.  With ``verify`` the exact average chi^2 is computed at
    the integer time on the conservative side (ceil for upper, floor for lower).
    """
    if not 1 <= k <= l <= n // 2:
        raise ValueError(f"needs 1 <= k <= l <= n/2, got k={k}, l={l}, n={n}")
    if kind == "upper":
        t = n / 4 * (math.log(k) + c)
        out = AverageBound(kind, t, math.exp(-c))
        t_int = math.ceil(t)
    elif kind == "lower":
        t = c * n / 4
        out = AverageBound(kind, t, 1 - c)
        t_int = math.floor(t)
    else:
        raise ValueError("kind must be 'upper' or 'lower'")
    if verify:
        kernel = rt_kernel((n - k, k), (n - l, l))
        out.t_checked = t_int
        out.exact_average = average_chi2(kernel, t_int)
    return out


# ---------------------------------------------------------------------------
# 2 x J tables from the extreme state k e_j

def extreme_state(k: int, cols: Sequence[int], j: int) -> ContingencyTable:
    """The (n-k, k) x mu table whose second row is k in column j and zero elsewhere."""
    cols = tuple(cols)
    if cols[j] <= k:
        raise ValueError(f"extreme state does not exist: mu_j = {cols[j]} <= k = {k}")
    top = list(cols)
    top[j] -= k
    bottom = [0] * len(cols)
    bottom[j] = k
    return ContingencyTable((tuple(top), tuple(bottom)))


def extreme_chi2(k: int, cols: Sequence[int], j: int, t) -> float:
    """chi^2 from k e_j via sum_m beta_m^{2t} h_m(k e_j, k e_j)."""
    n = sum(cols)
    return sum(float(beta_two_row(m, n)) ** (2 * t) * float(kernel_poly_extreme(m, k, cols[j], n))
               for m in range(1, k + 1))


@dataclass
class ExtremeBounds:
    state: ContingencyTable
    t_upper: float
    t_lower: float
    chi2_upper: float  # kernel-polynomial chi^2 at ceil(t_upper)
    chi2_lower: float | None  # at floor(t_lower), None if t_lower < 0
    bound_upper: float
    bound_lower: float


def extreme_state_bounds(k: int, cols: Sequence[int], j: int, c: float) -> ExtremeBounds:
    """Upper and lower times for chi^2 from k e_j on (n-k, k) x mu tables.

    (a) t = (n/4 + k(k-1)/(2(n-2k))) (log(k n (n-mu_j) / ((n-2k)(mu_j-k))) + c)
    gives chi^2 <= e^{-c};  (b) t = (n/8)(log(k (n-1)(n-mu_j) / ((n-k) mu_j)) - c)
    gives chi^2 >= e^{c}.
    """
    cols = tuple(cols)
    n = sum(cols)
    if not 0 <= j < len(cols):
        raise ValueError(f"column index {j} out of range")
    if k < 1 or n <= 2 * k:
        raise ValueError(f"needs 1 <= k and n > 2k, got k={k}, n={n}")
    state = extreme_state(k, cols, j)
    mu_j = cols[j]
    t_up = (n / 4 + k * (k - 1) / (2 * (n - 2 * k))) * (
        math.log(k * n * (n - mu_j) / ((n - 2 * k) * (mu_j - k))) + c)
    t_low = n / 8 * (math.log(k * (n - 1) * (n - mu_j) / ((n - k) * mu_j)) - c)
    chi_low = extreme_chi2(k, cols, j, math.floor(t_low)) if t_low >= 0 else None
    return ExtremeBounds(state, t_up, t_low, extreme_chi2(k, cols, j, math.ceil(t_up)), chi_low,
                         math.exp(-c), math.exp(c))


def chi2_threshold_time(kernel: ChainKernel, x0, level: float, t_max: int = 100_000) -> int:
    """Smallest integer t with chi^2_x0(t) <= level, by direct evolution."""
    P = kernel.sparse()
    pi = kernel.stationary(exact=False)
    vec = _start_vector(kernel, x0, exact=False)
    for t in range(t_max + 1):
        if chi2_from(vec, pi) <= level:
            return t
        vec = P.T @ vec
    raise ArithmeticError(f"chi^2 stayed above {level} up to t = {t_max}")


# ---------------------------------------------------------------------------
# mixing times

def worst_tv(kernel: ChainKernel, t: int, exact: bool = False):
    """d(t) = max_x ||P^t(x, .) - pi||_TV."""
    Pt = transition_power(kernel, t, exact)
    pi = kernel.stationary(exact=exact)
    if exact:
        return max(tv_distance(row, pi) for row in Pt)
    return float(0.5 * np.abs(np.asarray(Pt) - pi[None, :]).sum(axis=1).max())


def t_mix(kernel: ChainKernel, eps=Fraction(1, 4), exact: bool = False, t_max: int = 1 << 20) -> int:
    """min { t : d(t) < eps }, by doubling then integer bisection (d is non-increasing)."""
    if len(kernel) == 1:
        return 0
    if worst_tv(kernel, 0, exact) < eps:
        return 0
    hi = 1
    while worst_tv(kernel, hi, exact) >= eps:
        hi *= 2
        if hi > t_max:
            raise ArithmeticError(f"t_mix exceeds {t_max}")
    lo = hi // 2  # d(lo) >= eps
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if worst_tv(kernel, mid, exact) < eps:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass
class WilsonBound:
    t_lower: float
    case: int  # 1 when n >= 2(lambda_i + mu_j), else 2
    argument: float
    degenerate: bool
    reason: str | None = None


def wilson_lower_bound(rows, cols, i: int, j: int, c: float) -> WilsonBound:
    """Lower bound on t_mix from the linear eigenfunction of cell (i, j).

    Case 1 (n >= 2(lambda_i + mu_j)): (n/4 - 1/2)(log(m - lambda_i mu_j/n) - c).
    Case 2: (n/4 - 1/2)(log((n m - lambda_i mu_j)^2 / (2 n (n+2) lambda_i mu_j)) - c),
    with m = min(lambda_i, mu_j).  A log argument at most 1, or n <= 4 (where
    the eigenvalue 1 - 2/n is not above 1/2), gives the trivial bound 0 and
    sets ``degenerate``.  Negative values are clipped to 0.
    """
    n = sum(rows)
    if not (0 <= i < len(rows) and 0 <= j < len(cols)):
        raise ValueError(f"cell ({i}, {j}) out of range")
    li, mj = rows[i], cols[j]
    m = min(li, mj)
    if n >= 2 * (li + mj):
        case, arg = 1, m - li * mj / n
    else:
        case, arg = 2, (n * m - li * mj) ** 2 / (2 * n * (n + 2) * li * mj)
    if n <= 4:
        return WilsonBound(0.0, case, arg, True, "eigenvalue 1 - 2/n must exceed 1/2 (needs n > 4)")
    if arg <= 1:
        return WilsonBound(0.0, case, arg, True, "log argument <= 1")
    return WilsonBound(max(0.0, (n / 4 - 0.5) * (math.log(arg) - c)), case, arg, False)


# ---------------------------------------------------------------------------
# spectral gaps and the Metropolis comparison

def spectral_gap(kernel: ChainKernel) -> float:
    """1 - lambda_2 of a reversible kernel; a single-state space reports 1."""
    if len(kernel) == 1:
        return 1.0
    vals = brute_force_spectrum(kernel)
    return float(1 - vals[1])


@dataclass
class ComparisonReport:
    rows: tuple
    cols: tuple
    tau: dict[str, float] = field(default_factory=dict)
    m: int = 0
    M: int = 0
    bounds: dict[str, float] = field(default_factory=dict)
    holds_a: bool | None = None
    holds_b: bool | None = None
    skipped: str | None = None


def relaxation_comparison(rows, cols, slack: float = 1e-9) -> ComparisonReport:
    """Relaxation times of the four chains and the two comparison sandwiches.

    (a) m^2 (IJ)^2/n^2 tau_U^M <= tau_U <= M^2 (IJ)^2/n^2 tau_U^M
    (b) n^2/((IJ)^2 M^4) tau_FY^M <= tau_FY <= n^2/((IJ)^2 m^4) tau_FY^M
    where m, M are the smallest positive and the largest entry over all tables.
    """
    rows, cols = tuple(rows), tuple(cols)
    states = enumerate_tables(rows, cols)
    report = ComparisonReport(rows, cols)
    entries = [v for t in states for v in t.flat()]
    report.m = min(v for v in entries if v > 0)
    report.M = max(entries)
    names = {"FY": "rt", "U": "uniform", "U_M": "metropolis_uniform", "FY_M": "metropolis_fy"}
    for key, name in names.items():
        report.tau[key] = 1 / spectral_gap(KERNELS[name](rows, cols, states=states))
    if len(states) == 1:
        report.skipped = "single table: every gap is 1"
        return report
    n, IJ = sum(rows), len(rows) * len(cols)
    r = IJ ** 2 / n ** 2
    b = report.bounds
    b["a_lower"] = report.m ** 2 * r * report.tau["U_M"]
    b["a_upper"] = report.M ** 2 * r * report.tau["U_M"]
    b["b_lower"] = report.tau["FY_M"] / (r * report.M ** 4)
    b["b_upper"] = report.tau["FY_M"] / (r * report.m ** 4)
    tol = slack * max(1.0, *report.tau.values())
    report.holds_a = b["a_lower"] - tol <= report.tau["U"] <= b["a_upper"] + tol
    report.holds_b = b["b_lower"] - tol <= report.tau["FY"] <= b["b_upper"] + tol
    return report


# ---------------------------------------------------------------------------
# Monte Carlo

@dataclass
class EmpiricalTV:
    estimate: float
    ci_low: float
    ci_high: float
    paths: int
    counts: np.ndarray


def _walk_chunk(start: np.ndarray, n: int, ncols: int, t: int, paths: int, seed_seq: np.random.SeedSequence,
                chunk: int = 100_000) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(seed_seq))
    out = []
    for lo in range(0, paths, chunk):
        size = min(chunk, paths - lo)
        tables = np.tile(start, (size, 1))
        picks = rng.integers(n, size=(t, size, 2), dtype=np.int64)
        out.append(backend.rt_walk(tables, ncols, picks))
    return np.concatenate(out) if out else np.empty((0, start.size), dtype=np.int64)


def empirical_tv(x0: ContingencyTable, t: int, paths: int, seed=None, jobs: int = 1,
                 n_boot: int = 200, alpha: float = 0.05, states=None) -> EmpiricalTV:
    """Plug-in TV between the empirical law of the rt chain at time ``t`` and Fisher-Yates.

    Paths are split over ``jobs`` independent streams (``SeedSequence.spawn``).
    The interval is estimate +/- u, where u is the (1 - alpha) bootstrap
    quantile of TV(resampled frequencies, observed frequencies); by the
    triangle inequality this also absorbs the upward bias of the plug-in.
    """
    if paths < 1:
        raise ValueError("paths must be at least 1")
    rows, cols = x0.row_sums, x0.col_sums
    states = enumerate_tables(rows, cols) if states is None else states
    index = {s.flat(): k for k, s in enumerate(states)}
    pi = np.array([float(fisher_yates_pmf(s)) for s in states])
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = root.spawn(max(1, jobs))
    shares = [paths // len(children) + (w < paths % len(children)) for w in range(len(children))]
    start = np.array(x0.flat(), dtype=np.int64)
    args = [(start, x0.n, len(cols), t, s, ss) for s, ss in zip(shares, children) if s]
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            finals = list(pool.map(lambda a: _walk_chunk(*a), args))
    else:
        finals = [_walk_chunk(*a) for a in args]
    counts = np.zeros(len(states), dtype=np.int64)
    for final in finals:
        uniq, cnt = np.unique(final, axis=0, return_counts=True)
        for row, c_ in zip(uniq, cnt):
            counts[index[tuple(int(v) for v in row)]] += c_
    freq = counts / paths
    est = 0.5 * float(np.abs(freq - pi).sum())
    boot_rng = np.random.Generator(np.random.Philox(root.spawn(1)[0]))
    resampled = boot_rng.multinomial(paths, freq, size=n_boot) / paths
    spread = 0.5 * np.abs(resampled - freq[None, :]).sum(axis=1)
    u = float(np.quantile(spread, 1 - alpha))
    return EmpiricalTV(est, max(0.0, est - u), est + u, paths, counts)
