"""Polynomial eigenfunctions of the random transpositions table chain.

Polynomials are dictionaries from monomials to exact coefficients.  A
monomial is a sorted tuple of 0-based cells ``(i, j)``; the empty tuple is the
constant term.  The one-step operator ``E[. | T_0 = x]`` maps a polynomial of
degree at most two to another one, so eigen-identities can be checked
symbolically, coefficient by coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .tables import ContingencyTable

Cell = tuple[int, int]
Monomial = tuple[Cell, ...]
Poly = dict[Monomial, Fraction]


def _add(poly: Poly, mono, coef) -> None:
    mono = tuple(sorted(mono))
    value = poly.get(mono, Fraction(0)) + coef
    if value:
        poly[mono] = value
    else:
        poly.pop(mono, None)


def poly_combine(*pairs) -> Poly:
    """Linear combination ``sum(c * p for c, p in pairs)``."""
    out: Poly = {}
    for c, p in pairs:
        for mono, coef in p.items():
            _add(out, mono, c * coef)
    return out


@dataclass(frozen=True)
class CellPolynomial:
    kind: str
    cells: tuple[Cell, ...]
    terms: tuple[tuple[Monomial, Fraction], ...]
    eigenvalue: Fraction
    note: str | None = None

    @property
    def poly(self) -> Poly:
        return dict(self.terms)

    @property
    def degree(self) -> int:
        return max((len(m) for m, _ in self.terms), default=0)


def evaluate(poly, t: ContingencyTable) -> Fraction:
    terms = poly.terms if isinstance(poly, CellPolynomial) else poly.items()
    total = Fraction(0)
    for mono, coef in terms:
        total += coef * math.prod(t[c] for c in mono)
    return total


def _freeze(poly: Poly) -> tuple:
    return tuple(sorted(poly.items()))


# ---------------------------------------------------------------------------
# one-step conditional moments

def _check_cell(rows, cols, cell):
    i, j = cell
    if not (0 <= i < len(rows) and 0 <= j < len(cols)):
        raise IndexError(f"cell {cell} outside a {len(rows)}x{len(cols)} table")


def step_linear(rows, cols, cell: Cell) -> Poly:
    """E[T_1(i,j) | x] = (1 - 2/n) x_ij + 2 lambda_i mu_j / n^2."""
    _check_cell(rows, cols, cell)
    n = sum(rows)
    i, j = cell
    return {(cell,): 1 - Fraction(2, n), (): Fraction(2 * rows[i] * cols[j], n * n)}


def step_quadratic(rows, cols, a: Cell, b: Cell) -> Poly:
    """E[T_1(a) T_1(b) | x] as a polynomial in x, for any two cells."""
    _check_cell(rows, cols, a)
    _check_cell(rows, cols, b)
    n = sum(rows)
    (i, j), (k, l) = a, b
    c = Fraction(2, n * n)
    lam, mu = rows, cols
    out: Poly = {}
    if i != k and j != l:
        _add(out, (a, b), 1 - Fraction(4, n) + Fraction(2, n * n))
        _add(out, (b,), c * lam[i] * mu[j])
        _add(out, (a,), c * lam[k] * mu[l])
        _add(out, ((i, l), (k, j)), c)
        return out
    beta2 = 1 - Fraction(4, n) + Fraction(4, n * n)
    if i != k:  # shared column j
        _add(out, (a, b), beta2)
        _add(out, (b,), c * lam[i] * (mu[j] - 1))
        _add(out, (a,), c * lam[k] * (mu[j] - 1))
        return out
    if j != l:  # shared row i
        _add(out, (a, b), beta2)
        _add(out, (b,), c * mu[j] * (lam[i] - 1))
        _add(out, (a,), c * mu[l] * (lam[i] - 1))
        return out
    _add(out, (a, a), beta2)
    _add(out, (a,), c * (2 * lam[i] * mu[j] - 2 * lam[i] - 2 * mu[j] + n))
    _add(out, (), c * lam[i] * mu[j])
    return out


def apply_step(rows, cols, poly: Poly) -> Poly:
    """Image of a polynomial of degree <= 2 under the one-step operator."""
    out: Poly = {}
    for mono, coef in poly.items():
        if len(mono) == 0:
            image = {(): Fraction(1)}
        elif len(mono) == 1:
            image = step_linear(rows, cols, mono[0])
        elif len(mono) == 2:
            image = step_quadratic(rows, cols, *mono)
        else:
            raise ValueError("only degree <= 2 is supported symbolically")
        for m2, c2 in image.items():
            _add(out, m2, coef * c2)
    return out


def is_eigen(rows, cols, poly: Poly, eigenvalue) -> bool:
    """Exact symbolic check of E[f(T_1) | x] == eigenvalue * f(x)."""
    return not poly_combine((1, apply_step(rows, cols, poly)), (-eigenvalue, poly))


def second_moment_step(rows, cols, a: Cell, b: Cell, t: ContingencyTable) -> Fraction:
    """E[T_1(a) T_1(b) | T_0 = t], exact."""
    return evaluate(step_quadratic(rows, cols, a, b), t)


def moment_recursion_polynomial(rows, cols, cell: Cell, m: int) -> list[Fraction]:
    """Coefficients (constant first) of E[T_1(i,j)^m | x] as a polynomial in x = x_ij.

    The entry performs a birth-death step: up with probability
    2(lambda_i - x)(mu_j - x)/n^2 and down with 2x(n - lambda_i - mu_j + x)/n^2.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    _check_cell(rows, cols, cell)
    n = sum(rows)
    li, mj = rows[cell[0]], cols[cell[1]]
    c = Fraction(2, n * n)
    # polynomials as coefficient lists, constant first
    up = [c * li * mj, -c * (li + mj), c]
    down = [Fraction(0), c * (n - li - mj), c]

    def mul(p, q):
        out = [Fraction(0)] * (len(p) + len(q) - 1)
        for a, x in enumerate(p):
            for b, y in enumerate(q):
                out[a + b] += x * y
        return out

    def shift_power(delta):  # (x + delta)^m - x^m
        coeffs = [Fraction(math.comb(m, r) * delta ** (m - r)) for r in range(m + 1)]
        coeffs[m] -= 1
        return coeffs

    total = [Fraction(0)] * (m + 3)
    total[m] += 1
    for k, v in enumerate(mul(up, shift_power(1))):
        total[k] += v
    for k, v in enumerate(mul(down, shift_power(-1))):
        total[k] += v
    while len(total) > 1 and total[-1] == 0:
        total.pop()
    return total


def moment_degree_recursion(rows, cols, i: int, j: int, m: int, t: ContingencyTable) -> Fraction:
    """E[T_1(i,j)^m | T_0 = t]; the leading coefficient is checked to be 1 - 2m(n+1-m)/n^2."""
    coeffs = moment_recursion_polynomial(rows, cols, (i, j), m)
    n = sum(rows)
    lead = 1 - Fraction(2 * m * (n + 1 - m), n * n)
    if len(coeffs) != m + 1 or coeffs[m] != lead:
        raise ArithmeticError("leading coefficient of the moment recursion is not 1 - 2m(n+1-m)/n^2")
    x = t[i, j]
    return sum((c * x ** k for k, c in enumerate(coeffs)), Fraction(0))


# ---------------------------------------------------------------------------
# eigenfunctions

def linear_f(rows, cols, i: int, j: int) -> CellPolynomial:
    """f_ij(x) = x_ij - lambda_i mu_j / n, eigenvalue 1 - 2/n."""
    _check_cell(rows, cols, (i, j))
    n = sum(rows)
    poly = {((i, j),): Fraction(1), (): -Fraction(rows[i] * cols[j], n)}
    beta1 = 1 - Fraction(2, n)
    assert is_eigen(rows, cols, poly, beta1)
    return CellPolynomial("linear", ((i, j),), _freeze(poly), beta1)


def _closed_form_quadratic(rows, cols, a: Cell, b: Cell) -> tuple[str, Poly]:
    n = sum(rows)
    lam, mu = rows, cols
    (i, j), (k, l) = a, b
    d1, d2 = Fraction(1, n - 2), Fraction(1, (n - 1) * (n - 2))
    p: Poly = {}
    if i != k and j != l:
        _add(p, (a, b), 1)
        _add(p, ((i, l), (k, j)), 1)
        _add(p, (a,), -lam[k] * mu[l] * d1)
        _add(p, (b,), -lam[i] * mu[j] * d1)
        _add(p, ((i, l),), -lam[k] * mu[j] * d1)
        _add(p, ((k, j),), -lam[i] * mu[l] * d1)
        _add(p, (), 2 * lam[k] * mu[l] * lam[i] * mu[j] * d2)
        return "quad_disjoint", p
    if i != k:
        _add(p, (a, b), 1)
        _add(p, (a,), -lam[i] * (mu[j] - 1) * d1)
        _add(p, (b,), -lam[k] * (mu[j] - 1) * d1)
        _add(p, (), lam[i] * lam[k] * mu[j] * (mu[j] - 1) * d2)
        return "quad_shared_col", p
    if j != l:
        # transpose of the shared-column form
        _add(p, (a, b), 1)
        _add(p, (a,), -mu[j] * (lam[i] - 1) * d1)
        _add(p, (b,), -mu[l] * (lam[i] - 1) * d1)
        _add(p, (), mu[j] * mu[l] * lam[i] * (lam[i] - 1) * d2)
        return "quad_shared_row", p
    _add(p, (a, a), 1)
    _add(p, (a,), -(2 * lam[i] * mu[j] - 2 * lam[i] - 2 * mu[j] + n) * d1)
    _add(p, (), lam[i] * mu[j] * (1 + lam[i] * mu[j] - lam[i] - mu[j]) * d2)
    return "quad_diag", p


def _solve_lower_terms(rows, cols, quad: Poly, eigenvalue: Fraction) -> Poly:
    """Complete a degree-2 part into an eigenfunction by solving for the linear and constant terms."""
    n = sum(rows)
    beta1 = 1 - Fraction(2, n)
    image = apply_step(rows, cols, quad)
    for mono, coef in quad.items():
        if image.get(mono, 0) != eigenvalue * coef:
            raise ArithmeticError("quadratic part is not invariant under the step operator")
    out = dict(quad)
    const = image.get((), Fraction(0))
    for mono, coef in image.items():
        if len(mono) == 1:
            (i, j), = mono
            a = coef / (eigenvalue - beta1)
            _add(out, mono, a)
            const += a * Fraction(2 * rows[i] * cols[j], n * n)
    _add(out, (), const / (eigenvalue - 1))
    return out


def quadratic_f(rows, cols, a: Cell, b: Cell) -> CellPolynomial:
    """Quadratic eigenfunction for the cell pair (a, b), eigenvalue 1 - 4/n + 4/n^2.

    Starts from the classical closed form for the pair's configuration and
    checks the eigen-identity symbolically.  If it fails, the linear and
    constant terms are re-derived from the one-step moments and ``note``
    records the discrepancy.
    """
    n = sum(rows)
    if n < 3:
        raise ValueError("quadratic eigenfunctions need n >= 3")
    _check_cell(rows, cols, a)
    _check_cell(rows, cols, b)
    a, b = sorted((tuple(a), tuple(b)))
    eigenvalue = 1 - Fraction(4, n) + Fraction(4, n * n)
    kind, poly = _closed_form_quadratic(rows, cols, a, b)
    note = None
    if not is_eigen(rows, cols, poly, eigenvalue):
        quad = {m: c for m, c in poly.items() if len(m) == 2}
        fixed = _solve_lower_terms(rows, cols, quad, eigenvalue)
        changed = sorted(m for m in set(poly) | set(fixed) if poly.get(m) != fixed.get(m))
        note = f"closed-form lower-order coefficients corrected on {changed}"
        poly = fixed
        assert is_eigen(rows, cols, poly, eigenvalue)
    return CellPolynomial(kind, (a, b), _freeze(poly), eigenvalue, note)


def all_quadratics(rows, cols) -> list[CellPolynomial]:
    """One quadratic eigenfunction per unordered pair of cells (diagonal pairs included)."""
    cells = [(i, j) for i in range(len(rows)) for j in range(len(cols))]
    return [quadratic_f(rows, cols, cells[p], cells[q])
            for p in range(len(cells)) for q in range(p, len(cells))]


def stationary_mean(poly, rows, cols) -> Fraction:
    """E_pi[poly] from exact Fisher-Yates factorial moments (no enumeration)."""
    terms = poly.terms if isinstance(poly, CellPolynomial) else poly.items()
    total = Fraction(0)
    for mono, coef in terms:
        total += coef * monomial_moment(mono, rows, cols)
    return total


def monomial_moment(mono: Sequence[Cell], rows, cols) -> Fraction:
    """E_pi[prod x_c] via falling-factorial moments and Stirling numbers of the second kind."""
    from itertools import product as iproduct

    from .tables import factorial_moment

    powers: dict[Cell, int] = {}
    for c in mono:
        powers[c] = powers.get(c, 0) + 1
    cells = list(powers)
    total = Fraction(0)
    # x^p = sum_r S(p, r) x_[r]
    for rs in iproduct(*(range(1, powers[c] + 1) for c in cells)):
        weight = math.prod(_stirling2(powers[c], r) for c, r in zip(cells, rs))
        if weight:
            total += weight * factorial_moment(rows, cols, dict(zip(cells, rs)))
    return total


def _stirling2(p: int, r: int) -> int:
    return sum((-1) ** (r - s) * math.comb(r, s) * s ** p for s in range(r + 1)) // math.factorial(r)
