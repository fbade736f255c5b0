"""Spectra of the table chain: closed forms, Hahn polynomials, and a numerical oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Sequence

import numpy as np

from . import backend
from .partitions import Partition, as_partition, canonicalize, kostka, partitions_of


@dataclass(frozen=True)
class SpectrumEntry:
    partition: Partition
    beta: Fraction
    multiplicity: int

    def as_dict(self) -> dict:
        return {"partition": list(self.partition), "beta": str(self.beta),
                "beta_float": float(self.beta), "multiplicity": self.multiplicity}


@dataclass(frozen=True)
class Spectrum:
    entries: tuple[SpectrumEntry, ...]
    row_order: tuple[int, ...] = ()
    col_order: tuple[int, ...] = ()

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    @property
    def dimension(self) -> int:
        return sum(e.multiplicity for e in self.entries)

    def as_dict(self) -> dict:
        """``{partition tuple: (beta, multiplicity)}``."""
        return {tuple(e.partition): (e.beta, e.multiplicity) for e in self.entries}

    def eigenvalues(self) -> list[Fraction]:
        """All eigenvalues with repetition, sorted descending."""
        out = [e.beta for e in self.entries for _ in range(e.multiplicity)]
        return sorted(out, reverse=True)


def beta(rho: Sequence[int], n: int | None = None) -> Fraction:
    """Eigenvalue attached to the partition ``rho``: 1/n + sum(rho_j^2 - (2j-1) rho_j) / n^2."""
    rho = as_partition(rho)
    n = rho.n if n is None else n
    if rho.n != n:
        raise ValueError(f"{rho} is not a partition of {n}")
    s = sum(r * r - (2 * j - 1) * r for j, r in enumerate(rho, start=1))
    return Fraction(1, n) + Fraction(s, n * n)


def beta_content_form(rho: Sequence[int], n: int | None = None) -> Fraction:
    """Same eigenvalue written as 1/n + sum((rho_j - j)(rho_j - j + 1) - j(j-1)) / n^2."""
    rho = as_partition(rho)
    n = rho.n if n is None else n
    s = sum((r - j) * (r - j + 1) - j * (j - 1) for j, r in enumerate(rho, start=1))
    return Fraction(1, n) + Fraction(s, n * n)


def beta_two_row(m: int, n: int) -> Fraction:
    """1 - 2m(n+1-m)/n^2, the eigenvalue of rho = (n-m, m)."""
    if not 0 <= 2 * m <= n:
        raise ValueError("need 0 <= m <= n/2")
    value = 1 - Fraction(2 * m * (n + 1 - m), n * n)
    shape = (n - m, m) if m else (n,)
    assert value == beta(shape, n)
    return value


def spectrum(rows: Sequence[int], cols: Sequence[int]) -> Spectrum:
    """Eigenvalues beta_rho with multiplicity kostka(rho, lambda) * kostka(rho, mu).

    Margins in any order are accepted; they are sorted into partitions and the
    sorting permutations are kept on the result.
    """
    lam, row_order = canonicalize(rows)
    mu, col_order = canonicalize(cols)
    if lam.n != mu.n:
        raise ValueError(f"row total {lam.n} differs from column total {mu.n}")
    n = lam.n
    entries = []
    for rho in partitions_of(n):
        mult = kostka(rho, lam) * kostka(rho, mu)
        if mult:
            entries.append(SpectrumEntry(rho, beta(rho, n), mult))
    return Spectrum(tuple(entries), row_order, col_order)


def two_row_multiplicity(m: int, cols: Sequence[int], rule: str = "kostka") -> int:
    """Multiplicity of beta_m for a 2 x J table with second row total at least m.

    ``rule`` selects the counting device: ``"kostka"`` (kostka((n-m, m), mu)),
    ``"caps"`` (compositions of m with x_j <= mu_{j+1}, requires mu_1 >= m) or
    ``"strict"`` (compositions of m with x_j < mu_{J-j+1}).
    """
    mu = tuple(sorted(cols, reverse=True))
    n = sum(mu)
    J = len(mu)
    if rule == "kostka":
        shape = (n - m, m) if m else (n,)
        return kostka(shape, mu) if n - m >= m else 0
    if rule == "caps":
        if mu[0] < m:
            raise ValueError("the capped count needs mu_1 >= m")
        caps = mu[1:]
    elif rule == "strict":
        caps = tuple(mu[J - j] - 1 for j in range(1, J))
    else:
        raise ValueError(f"unknown rule {rule!r}")
    return _count_capped(m, caps)


def _count_capped(total: int, caps: Sequence[int]) -> int:
    ways = [1] + [0] * total
    for c in caps:
        new = [0] * (total + 1)
        for s in range(total + 1):
            if ways[s]:
                for v in range(min(c, total - s) + 1):
                    new[s + v] += ways[s]
        ways = new
    return ways[total]


# ---------------------------------------------------------------------------
# numerical oracle

class NotReversibleError(ValueError):
    pass


def symmetrize(P: np.ndarray, pi: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """D^{1/2} P D^{-1/2} for D = diag(pi), after checking detailed balance."""
    P = np.asarray(P, dtype=float)
    flow = pi[:, None] * P
    residual = np.max(np.abs(flow - flow.T)) if P.size else 0.0
    if residual > tol:
        raise NotReversibleError(f"detailed-balance residual {residual:.3e} exceeds {tol:g}")
    d = np.sqrt(pi)
    S = d[:, None] * P / d[None, :]
    return (S + S.T) / 2


def brute_force_spectrum(kernel_or_matrix, pi=None, tol: float = 1e-12, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a reversible kernel by Jacobi rotations on its symmetrization, descending.

    Accepts a :class:`ChainKernel` (its stationary law is used) or a dense
    matrix together with ``pi``.
    """
    if pi is None:
        P = kernel_or_matrix.dense()
        pi = kernel_or_matrix.stationary(exact=False)
    else:
        P = kernel_or_matrix.toarray() if hasattr(kernel_or_matrix, "toarray") else np.asarray(kernel_or_matrix)
        pi = np.asarray(pi, dtype=float)
    S = np.ascontiguousarray(symmetrize(P, pi))
    vals, sweeps, off = backend.jacobi_eigenvalues(S, tol, max_sweeps)
    if off >= tol:
        raise ArithmeticError(f"Jacobi did not converge: off-diagonal norm {off:.3e} after {sweeps} sweeps")
    return np.sort(vals)[::-1]


def cluster(values: Sequence[float], tol: float = 1e-8) -> list[tuple[float, int]]:
    """Group sorted values whose consecutive gaps are within ``tol``; returns (mean, count)."""
    vals = sorted(values, reverse=True)
    groups: list[list[float]] = []
    for v in vals:
        if groups and groups[-1][-1] - v <= tol:
            groups[-1].append(v)
        else:
            groups.append([v])
    return [(sum(g) / len(g), len(g)) for g in groups]


def match_spectrum(numeric: Sequence[float], spec: Spectrum, tol: float = 1e-9) -> bool:
    """Multiset comparison: every cluster of numeric eigenvalues sits on one exact value with the same count."""
    expected: dict[Fraction, int] = {}
    for e in spec:
        expected[e.beta] = expected.get(e.beta, 0) + e.multiplicity
    clusters = cluster(numeric)
    if len(clusters) != len(expected):
        return False
    exact = sorted(expected.items(), reverse=True)
    numeric_sorted = sorted(numeric, reverse=True)
    flat_exact = [float(b) for b, m in exact for _ in range(m)]
    if len(flat_exact) != len(numeric_sorted):
        return False
    return all(abs(a - b) <= tol for a, b in zip(numeric_sorted, flat_exact))


# ---------------------------------------------------------------------------
# Hahn polynomials

def rising(a, k: int):
    out = a * 0 + 1
    for s in range(k):
        out *= a + s
    return out


def falling(a, k: int):
    out = a * 0 + 1
    for s in range(k):
        out *= a - s
    return out


def hahn_univariate(m: int, x: int, k: int, alpha, beta_) -> Fraction:
    """Terminating 3F2(-m, m+alpha+beta-1, -x; alpha, -k | 1).

    Raises ZeroDivisionError if a denominator factor vanishes before the sum
    terminates.
    """
    if m < 0 or x < 0:
        raise ValueError("need m >= 0 and x >= 0")
    alpha, beta_ = Fraction(alpha), Fraction(beta_)
    total = Fraction(0)
    term = Fraction(1)
    for s in range(0, min(m, x) + 1):
        if s:
            num = (-m + s - 1) * (m + alpha + beta_ - 1 + s - 1) * (-x + s - 1)
            den = (alpha + s - 1) * (-k + s - 1) * s
            if den == 0:
                raise ZeroDivisionError(f"denominator vanishes at term {s} before termination")
            term = term * num / den
        total += term
    return total


def _hahn_cleared(m: int, x: int, kk: int, alpha: Fraction, beta_: Fraction) -> Fraction:
    """(-kk)_(m) * Q_m(x; kk, alpha, beta) with the (-kk)_(s) denominators cancelled."""
    total = Fraction(0)
    for s in range(0, min(m, x) + 1):
        den = rising(alpha, s) * math.factorial(s)
        if den == 0:
            raise ZeroDivisionError(f"denominator vanishes at term {s}")
        total += (rising(Fraction(-m), s) * rising(m + alpha + beta_ - 1, s) * rising(Fraction(-x), s)
                  / den * rising(Fraction(-kk + s), m - s))
    return total


def hahn_multivariate(m: Sequence[int], x: Sequence[int], k: int, mu: Sequence[int]) -> Fraction:
    """Multivariate Hahn polynomial Q_m(x; k, mu) for the hypergeometric law H_{k,mu}.

    ``x`` has length J with sum k and ``x_j <= mu_j``; ``m`` has length J-1.
    The family is an orthogonal eigenbasis of the 2 x J chain when every
    ``mu_j >= k``; below that some indices vanish or stop being eigenfunctions.
    """
    J = len(mu)
    m, x = tuple(m), tuple(x)
    if len(m) != J - 1 or len(x) != J:
        raise ValueError("need len(m) == J-1 and len(x) == J")
    if sum(x) != k or any(a > b for a, b in zip(x, mu)) or min(x) < 0:
        raise ValueError("x is not in the support of the hypergeometric law")
    deg = sum(m)
    if deg > k:
        raise ValueError("degree exceeds k")
    lead = falling(k, deg)
    if lead == 0:
        raise ZeroDivisionError("(k)_[|m|] vanishes")
    value = Fraction((-1) ** deg, lead)
    for j in range(1, J):
        x_before = sum(x[:j - 1])
        m_after = sum(m[j:])
        mu_after = sum(mu[j:])
        kk = k - x_before - m_after
        value *= _hahn_cleared(m[j - 1], x[j - 1], kk, Fraction(-mu[j - 1]), Fraction(-mu_after + 2 * m_after))
    return value


def hypergeometric_support(k: int, mu: Sequence[int]) -> list[tuple[int, ...]]:
    """All x with |x| = k and 0 <= x_j <= mu_j."""
    out = []
    for x in product(*(range(c + 1) for c in mu)):
        if sum(x) == k:
            out.append(x)
    return out


def hypergeometric_pmf(x: Sequence[int], mu: Sequence[int]) -> Fraction:
    n, k = sum(mu), sum(x)
    return Fraction(math.prod(math.comb(c, v) for c, v in zip(mu, x)), math.comb(n, k))


def hahn_indices(degree: int, J: int) -> list[tuple[int, ...]]:
    return [m for m in product(range(degree + 1), repeat=J - 1) if sum(m) == degree]


def hahn_norm(m: Sequence[int], k: int, mu: Sequence[int]) -> Fraction:
    return sum((hypergeometric_pmf(x, mu) * hahn_multivariate(m, x, k, mu) ** 2
                for x in hypergeometric_support(k, mu)), Fraction(0))


def kernel_poly_sum(degree: int, x: Sequence[int], k: int, mu: Sequence[int]) -> Fraction:
    """h_m(x, x) = sum over |m| = degree of Q_m(x)^2 / <Q_m, Q_m>; needs every mu_j >= k."""
    if min(mu) < k:
        raise ValueError("the Hahn basis needs every mu_j >= k")
    total = Fraction(0)
    for m in hahn_indices(degree, len(mu)):
        norm = hahn_norm(m, k, mu)
        if norm == 0:
            continue
        total += hahn_multivariate(m, x, k, mu) ** 2 / norm
    return total


def kernel_poly_extreme(m: int, k: int, mu_j: int, n: int) -> Fraction:
    """Closed form of h_m(k e_j, k e_j):
    C(k,m) (n-2m+1) n_[m-1] (n-mu_j)_[m] / ((n-k)_[m] (mu_j)_[m])."""
    if mu_j < k:
        raise ValueError(f"needs mu_j >= k, got mu_j={mu_j}, k={k}")
    if not 1 <= m <= k:
        raise ValueError("needs 1 <= m <= k")
    num = math.comb(k, m) * (n - 2 * m + 1) * falling(n, m - 1) * falling(n - mu_j, m)
    den = falling(n - k, m) * falling(mu_j, m)
    return Fraction(num, den)
