"""Residual analysis of contingency tables and a chi-square decomposition by eigenfunctions."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import gammaincc

from .eigenfunctions import all_quadratics, evaluate, monomial_moment
from .tables import ContingencyTable, chi_square_statistic


@dataclass(frozen=True)
class Dataset:
    name: str
    table: ContingencyTable
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    note: str


_MIDTOWN = (
    (64, 94, 58, 46),
    (57, 94, 54, 40),
    (57, 105, 65, 60),
    (72, 141, 77, 94),
    (36, 97, 54, 78),
    (21, 71, 54, 71),
)

_VICTORIA = (
    (1, 0, 0, 0, 1, 2, 0, 0, 1, 0, 1, 0),
    (1, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0, 2),
    (1, 0, 0, 0, 2, 1, 0, 0, 0, 0, 0, 1),
    (3, 0, 2, 0, 0, 0, 1, 0, 1, 3, 1, 1),
    (2, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0),
    (2, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0),
    (2, 0, 2, 1, 0, 0, 0, 0, 1, 1, 1, 2),
    (0, 0, 0, 3, 0, 0, 1, 0, 0, 1, 0, 2),
    (0, 0, 0, 1, 1, 0, 0, 0, 0, 0, 1, 0),
    (1, 1, 0, 2, 0, 0, 1, 0, 0, 1, 1, 0),
    (0, 1, 1, 1, 2, 0, 0, 2, 0, 1, 1, 0),
    (0, 1, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0),
)

_HAIR_EYE = (
    (68, 119, 26, 7),
    (20, 84, 17, 94),
    (15, 54, 14, 10),
    (5, 29, 14, 16),
)

_MONTHS = ("Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec")

# entries, published row totals, published column totals, labels, note
_FIXTURES = {
    "midtown": (_MIDTOWN, (262, 245, 287, 384, 265, 217), (307, 602, 362, 389),
                tuple("ABCDEF"), ("Well", "Mild", "Moderate", "Impaired"),
                "Midtown Manhattan mental health survey: parental socioeconomic status (A high .. F low) "
                "by severity of symptoms"),
    "victoria": (_VICTORIA, (6, 5, 5, 12, 12, 3, 10, 7, 3, 7, 9, 3), (13, 4, 7, 10, 8, 4, 5, 3, 4, 9, 7, 8),
                 _MONTHS, _MONTHS, "Birth month (rows) by death month (columns) for 82 descendants of Queen Victoria"),
    "hair_eye": (_HAIR_EYE, (220, 215, 93, 64), (108, 286, 71, 127),
                 ("Brown", "Blue", "Hazel", "Green"), ("Black", "Brown", "Red", "Blond"),
                 "Eye colour (rows) by hair colour (columns), 592 individuals"),
}

CHECKSUMS = {
    "midtown": "143f10947365a8c42b731bcdc8f60c103a035bf7d1d7add390d30efc43a71fd3",
    "victoria": "d56e7185cfb402746b86597bc4be4104dc8f2f0ca31ba4159f89f6821c3bab49",
    "hair_eye": "1bd0a37b17b1aae695459c1028d97d164f69c76433b7027d84608c2032a704f3",
}


def checksum(entries) -> str:
    return hashlib.sha256(json.dumps([list(r) for r in entries]).encode()).hexdigest()


def builtin(name: str) -> Dataset:
    """One of the bundled datasets: ``midtown``, ``victoria`` or ``hair_eye``."""
    try:
        entries, row_tot, col_tot, rlab, clab, note = _FIXTURES[name]
    except KeyError:
        raise KeyError(f"unknown dataset {name!r}; choose from {sorted(_FIXTURES)}") from None
    if checksum(entries) != CHECKSUMS[name]:
        raise ValueError(f"dataset {name} failed its checksum")
    table = ContingencyTable.from_rows(entries, row_tot, col_tot)
    return Dataset(name, table, rlab, clab, note)


DATASETS = tuple(_FIXTURES)


# ---------------------------------------------------------------------------
# residuals

@dataclass(frozen=True)
class Residual:
    """A residual num / sqrt(scale) kept exactly as the pair (num, scale)."""

    num: Fraction
    scale: Fraction

    def __float__(self) -> float:
        return float(self.num) / math.sqrt(self.scale)

    def square(self) -> Fraction:
        return self.num ** 2 / self.scale


def _expected(t: ContingencyTable, i: int, j: int) -> Fraction:
    return Fraction(t.row_sums[i] * t.col_sums[j], t.n)


def _residuals(t: ContingencyTable, scale) -> list[list[Residual]]:
    I, J = t.shape
    return [[Residual(t[i, j] - _expected(t, i, j), scale(i, j)) for j in range(J)] for i in range(I)]


def _as_output(res, exact: bool):
    return res if exact else np.array([[float(r) for r in row] for row in res])


def pearson_residuals(t: ContingencyTable, exact: bool = False):
    """(T_ij - lambda_i mu_j / n) / sqrt(lambda_i mu_j / n)."""
    if min(t.row_sums) == 0 or min(t.col_sums) == 0:
        raise ValueError("Pearson residuals need every row and column total to be positive")
    return _as_output(_residuals(t, lambda i, j: _expected(t, i, j)), exact)


def residual_variance(rows, cols, i: int, j: int) -> Fraction:
    """c_ij = lambda_i mu_j (n - lambda_i)(n - mu_j) / (n^2 (n - 1)), the Fisher-Yates variance of T_ij."""
    n = sum(rows)
    return Fraction(rows[i] * cols[j] * (n - rows[i]) * (n - cols[j]), n * n * (n - 1))


def normalized_residuals(t: ContingencyTable, exact: bool = False):
    """Linear eigenfunctions scaled to unit norm under Fisher-Yates."""
    rows, cols = t.row_sums, t.col_sums
    I, J = t.shape
    for i in range(I):
        for j in range(J):
            if residual_variance(rows, cols, i, j) <= 0:
                raise ValueError(f"cell ({i}, {j}) has zero variance under the margins; cannot normalize")
    return _as_output(_residuals(t, lambda i, j: residual_variance(rows, cols, i, j)), exact)


# ---------------------------------------------------------------------------
# chi-square decomposition

@dataclass(frozen=True)
class Decomposition:
    quad_part: Fraction
    linear_part: Fraction
    constant_part: Fraction

    @property
    def total(self) -> Fraction:
        return self.quad_part + self.linear_part + self.constant_part


def chi2_decomposition(t: ContingencyTable) -> Decomposition:
    """Split the Pearson statistic along the diagonal quadratic and the linear eigenfunctions.

    With M = lambda_i mu_j / n, f_q = T^2 - K T + L (the diagonal quadratic
    eigenfunction) and f_l = T - M:
    (T - M)^2 / M = f_q / M + (K - 2M)/M f_l + ((M^2 - L)/M + K - 2M).
    """
    n = t.n
    if n < 3:
        raise ValueError("the decomposition needs n >= 3")
    rows, cols = t.row_sums, t.col_sums
    if min(rows) == 0 or min(cols) == 0:
        raise ValueError("every row and column total must be positive")
    quad = lin = const = Fraction(0)
    I, J = t.shape
    for i in range(I):
        for j in range(J):
            li, mj, x = rows[i], cols[j], t[i, j]
            M = Fraction(li * mj, n)
            K = Fraction(2 * li * mj - 2 * li - 2 * mj + n, n - 2)
            L = Fraction(li * mj * (1 + li * mj - li - mj), (n - 1) * (n - 2))
            quad += (x * x - K * x + L) / M
            lin += (K - 2 * M) / M * (x - M)
            const += (M * M - L) / M + K - 2 * M
    out = Decomposition(quad, lin, const)
    assert out.total == chi_square_statistic(t)
    return out


def chi2_pvalue(stat, df: int) -> float:
    """Upper tail of the chi-square law, Q(df/2, stat/2) (regularized incomplete gamma)."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    return float(gammaincc(df / 2, float(stat) / 2))


def degrees_of_freedom(t: ContingencyTable) -> int:
    I, J = t.shape
    return (I - 1) * (J - 1)


# ---------------------------------------------------------------------------
# quadratic panel

@dataclass(frozen=True)
class PanelEntry:
    cells: tuple
    kind: str
    raw: Fraction
    variance: Fraction
    value: float  # raw / sqrt(variance); 0 when the function vanishes identically


def _poly_variance(terms, rows, cols) -> Fraction:
    """E_pi[f^2] for a mean-zero polynomial, from exact moments of degree <= 4."""
    cache: dict = {}
    total = Fraction(0)
    for m1, c1 in terms:
        for m2, c2 in terms:
            mono = tuple(sorted(m1 + m2))
            if mono not in cache:
                cache[mono] = monomial_moment(mono, rows, cols)
            total += c1 * c2 * cache[mono]
    return total


def quadratic_residual_panel(t: ContingencyTable) -> list[PanelEntry]:
    """Every quadratic eigenfunction at ``t``, divided by its standard deviation under Fisher-Yates."""
    if t.n < 3:
        raise ValueError("quadratic eigenfunctions need n >= 3")
    rows, cols = t.row_sums, t.col_sums
    out = []
    for f in all_quadratics(rows, cols):
        raw = evaluate(f, t)
        var = _poly_variance(f.terms, rows, cols)
        value = float(raw) / math.sqrt(var) if var else 0.0
        out.append(PanelEntry(f.cells, f.kind, raw, var, value))
    return out


def linear_panel(t: ContingencyTable) -> list[tuple[tuple[int, int], float]]:
    """Normalized linear eigenfunctions in row-major order (the residual plot)."""
    I, J = t.shape
    res = normalized_residuals(t)
    return [((i, j), float(res[i, j])) for i in range(I) for j in range(J)]


def analyze(t: ContingencyTable) -> dict:
    """Residual matrices, decomposition and the classical test in one report."""
    dec = chi2_decomposition(t)
    stat = chi_square_statistic(t)
    df = degrees_of_freedom(t)
    return {
        "n": t.n,
        "chi2": float(stat),
        "df": df,
        "p_value": chi2_pvalue(stat, df) if df else None,
        "pearson": pearson_residuals(t).tolist(),
        "normalized": normalized_residuals(t).tolist(),
        "decomposition": {"quad_part": str(dec.quad_part), "linear_part": str(dec.linear_part),
                          "constant_part": str(dec.constant_part), "total": str(dec.total)},
    }
