from fractions import Fraction
import numpy as np
import pytest
from hypothesis import given, strategies as st

from coset_chains.chains import metropolis_uniform_kernel, rt_kernel
from coset_chains.partitions import conjugate, kostka, majorizes, partitions_of
from coset_chains.spectral import (NotReversibleError, beta, beta_content_form, beta_two_row,
                                   brute_force_spectrum, cluster, falling, hahn_indices, hahn_multivariate, hahn_norm,
                                   hahn_univariate, hypergeometric_pmf, hypergeometric_support,
                                   kernel_poly_extreme, kernel_poly_sum, match_spectrum, rising, spectrum,
                                   two_row_multiplicity)
from coset_chains.tables import count_tables

TABLE1 = {(5,): (Fraction(1), 1), (4, 1): (Fraction(3, 5), 4), (3, 2): (Fraction(9, 25), 2),
          (3, 1, 1): (Fraction(1, 5), 1)}


def test_beta_examples():
    assert beta((4, 1), 5) == Fraction(3, 5)
    assert beta((3, 2), 5) == Fraction(9, 25)
    assert beta((7,)) == 1
    with pytest.raises(ValueError):
        beta((3, 1), 5)


@pytest.mark.parametrize("n", range(1, 13))
def test_beta_forms_agree(n):
    for rho in partitions_of(n):
        assert beta(rho, n) == beta_content_form(rho, n)


def test_beta_sign_flip_under_conjugation():
    # character ratios of a transposition change sign under conjugation
    for n in range(2, 10):
        for rho in partitions_of(n):
            assert beta(rho) - Fraction(1, n) == -(beta(conjugate(rho)) - Fraction(1, n))
    # the sign representation: holding keeps it away from -1
    for n in range(2, 12):
        assert beta((1,) * n) == Fraction(2, n) - 1


def test_beta_two_row():
    assert beta_two_row(0, 9) == 1
    for n in range(2, 14):
        assert beta_two_row(1, n) == 1 - Fraction(2, n)
        for m in range(n // 2 + 1):
            assert beta_two_row(m, n) == beta((n - m, m) if m else (n,), n)
    assert beta_two_row(2, 5) == Fraction(9, 25)
    with pytest.raises(ValueError):
        beta_two_row(3, 5)


@pytest.mark.parametrize("n", range(1, 11))
def test_beta_monotone_in_majorization(n):
    ps = partitions_of(n)
    for a in ps:
        for b in ps:
            if majorizes(b, a):
                assert beta(a, n) <= beta(b, n)


def test_table1():
    s = spectrum((3, 1, 1), (2, 2, 1))
    assert s.as_dict() == TABLE1
    assert s.dimension == 8 == count_tables((3, 1, 1), (2, 2, 1))


def test_spectrum_single_row():
    for mu in partitions_of(6):
        assert spectrum((6,), mu).as_dict() == {(6,): (Fraction(1), 1)}


def test_spectrum_accepts_unsorted_margins():
    assert spectrum((1, 3, 1), (2, 1, 2)).as_dict() == TABLE1
    with pytest.raises(ValueError):
        spectrum((3, 2), (2, 2))


def test_two_row_multiplicities_are_one():
    for n in range(2, 13):
        for k in range(1, n // 2 + 1):
            for l in range(k, n // 2 + 1):
                s = spectrum((n - k, k), (n - l, l))
                assert {e.partition for e in s} == {((n - m, m) if m else (n,)) for m in range(k + 1)}
                assert all(e.multiplicity == 1 for e in s)


@pytest.mark.parametrize("n", range(1, 9))
def test_dimension_and_corollaries(n):
    ps = partitions_of(n)
    for lam in ps:
        for mu in ps:
            s = spectrum(lam, mu)
            assert s.dimension == count_tables(lam, mu)
            assert sum(e.beta == 1 for e in s) == 1 and s.as_dict()[(n,)] == (1, 1)
            d = s.as_dict()
            if n >= 2:
                expected = (len(lam) - 1) * (len(mu) - 1)
                assert d.get((n - 1, 1), (None, 0))[1] == expected
            for e in s:
                assert len(e.partition) <= min(len(lam), len(mu))
                assert e.partition[0] >= max(lam[0], mu[0])


@pytest.mark.parametrize("n", range(2, 6))
def test_brute_force_matches_closed_form_small(n):
    for lam in partitions_of(n):
        for mu in partitions_of(n):
            if mu > lam:
                continue
            vals = brute_force_spectrum(rt_kernel(lam, mu))
            assert match_spectrum(vals, spectrum(lam, mu))


def test_brute_force_table1_and_top_vector():
    k = rt_kernel((3, 1, 1), (2, 2, 1))
    vals = brute_force_spectrum(k)
    assert match_spectrum(vals, spectrum((3, 1, 1), (2, 2, 1)))
    assert vals[0] == pytest.approx(1, abs=1e-12)
    P = k.dense()
    assert np.allclose(P @ np.ones(len(k)), 1, atol=1e-15)


def test_match_spectrum_rejects_wrong_values():
    s = spectrum((3, 1, 1), (2, 2, 1))
    vals = np.array(sorted([float(b) for b in s.eigenvalues()], reverse=True))
    assert match_spectrum(vals, s)
    bad = vals.copy()
    bad[2] += 1e-6
    assert not match_spectrum(bad, s)
    assert not match_spectrum(vals[:-1], s)


def test_metropolis_uniform_real_spectrum():
    vals = brute_force_spectrum(metropolis_uniform_kernel((3, 2), (2, 2, 1)))
    assert np.all(vals <= 1 + 1e-12) and np.all(vals >= -1 - 1e-12)
    assert vals[0] == pytest.approx(1)


def test_non_reversible_rejected():
    P = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    with pytest.raises(NotReversibleError):
        brute_force_spectrum(P, np.ones(3) / 3)


def test_cluster():
    assert cluster([1.0, 0.5, 0.5 + 1e-10, 0.2]) == [(1.0, 1), (pytest.approx(0.5), 2), (0.2, 1)]


def test_two_row_multiplicity_rules():
    for n in range(2, 11):
        for mu in partitions_of(n):
            for m in range(n // 2 + 1):
                k = kostka((n - m, m) if m else (n,), mu)
                assert two_row_multiplicity(m, mu) == k
                if mu[0] >= m:
                    assert two_row_multiplicity(m, mu, "caps") == k
    # the strict count disagrees with the eigenvalue count
    assert two_row_multiplicity(1, (2, 2, 1), "strict") != two_row_multiplicity(1, (2, 2, 1))
    with pytest.raises(ValueError):
        two_row_multiplicity(1, (2, 1), "other")


def test_factorials():
    assert rising(3, 0) == 1 and rising(3, 3) == 60 and rising(-2, 3) == 0
    assert falling(5, 2) == 20 and falling(Fraction(1, 2), 2) == Fraction(-1, 4)


def test_hahn_univariate_base_cases():
    for x in range(5):
        assert hahn_univariate(0, x, 4, -3, -5) == 1
        a, b = Fraction(-3), Fraction(-5)
        assert hahn_univariate(1, x, 4, a, b) == 1 - (1 + a + b - 1) * x / (a * 4)
    with pytest.raises(ValueError):
        hahn_univariate(-1, 0, 4, -3, -5)


def test_hahn_univariate_orthogonal():
    mu, k = (3, 5), 4
    support = hypergeometric_support(k, mu)
    for a in range(4):
        for b in range(a + 1, 4):
            ip = sum(hypergeometric_pmf(x, mu) * hahn_univariate(a, x[0], k, -3, -5) * hahn_univariate(b, x[0], k, -3, -5)
                     for x in support)
            assert ip == 0


def test_hahn_univariate_premature_zero():
    with pytest.raises(ZeroDivisionError):
        hahn_univariate(2, 2, 4, -1, -5)


def test_hahn_multivariate_orthogonal():
    mu, k = (4, 4, 4), 3
    idx = [m for d in range(3) for m in hahn_indices(d, 3)]
    support = hypergeometric_support(k, mu)
    for x in support:
        assert hahn_multivariate((0, 0), x, k, mu) == 1
    for a in idx:
        for b in idx:
            if a < b:
                assert sum(hypergeometric_pmf(x, mu) * hahn_multivariate(a, x, k, mu) * hahn_multivariate(b, x, k, mu)
                           for x in support) == 0
    with pytest.raises(ValueError):
        hahn_multivariate((1, 0), (3, 0, 1), k, mu)
    with pytest.raises(ValueError):
        hahn_multivariate((4, 0), (3, 0, 0), k, mu)


def test_hahn_eigenfunctions_two_row():
    mu, k, n = (4, 4, 4), 3, 12
    kern = rt_kernel((9, 3), mu)
    for d in range(1, 4):
        b = beta_two_row(d, n)
        for m in hahn_indices(d, 3):
            for t in kern.states:
                lhs = sum(p * hahn_multivariate(m, y.entries[1], k, mu) for y, p in kern.row(t).items())
                assert lhs == b * hahn_multivariate(m, t.entries[1], k, mu)


@given(st.sampled_from([(5, 4, 3), (3, 3, 3), (4, 3, 5), (6, 3, 3, 4), (2, 2, 2, 2)]), st.integers(1, 3))
def test_hahn_eigenfunctions_property(mu, k):
    if min(mu) < k:
        return
    n = sum(mu)
    kern = rt_kernel((n - k, k), mu)
    for d in range(1, k + 1):
        b = beta_two_row(d, n)
        for m in hahn_indices(d, len(mu)):
            for t in kern.states[:20]:
                lhs = sum(p * hahn_multivariate(m, y.entries[1], k, mu) for y, p in kern.row(t).items())
                assert lhs == b * hahn_multivariate(m, t.entries[1], k, mu)


def test_kernel_poly_extreme_examples():
    assert kernel_poly_extreme(1, 2, 5, 10) == Fraction(9, 4)
    assert kernel_poly_sum(1, (2, 0), 2, (5, 5)) == Fraction(9, 4)
    for n in range(4, 14):
        for k in range(1, n // 2):
            for mj in range(k, n):
                assert kernel_poly_extreme(1, k, mj, n) == Fraction(k * (n - 1) * (n - mj), (n - k) * mj)
    with pytest.raises(ValueError):
        kernel_poly_extreme(1, 3, 2, 10)
    with pytest.raises(ValueError):
        kernel_poly_extreme(3, 2, 5, 10)


@pytest.mark.parametrize("mu", [(4, 4, 4), (3, 3, 3), (5, 4, 3), (3, 5, 4), (6, 3, 3)])
def test_kernel_poly_closed_form(mu):
    n = sum(mu)
    for k in range(1, 4):
        for m in range(1, k + 1):
            for j in range(3):
                if mu[j] < k:
                    continue
                x = [0, 0, 0]
                x[j] = k
                assert kernel_poly_extreme(m, k, mu[j], n) == kernel_poly_sum(m, x, k, mu)


def test_kernel_poly_sum_total():
    # summing h_m(x, x) over all degrees gives 1 / H(x)
    mu, k = (4, 3, 3), 3
    for x in hypergeometric_support(k, mu):
        total = 1 + sum(kernel_poly_sum(d, x, k, mu) for d in range(1, k + 1))
        assert total == 1 / hypergeometric_pmf(x, mu)
    with pytest.raises(ValueError):
        kernel_poly_sum(1, (3, 0, 0), 3, (4, 3, 2))


def test_hahn_count_matches_multiplicity():
    for mu in [(4, 4, 4), (3, 5, 4), (6, 3, 3, 3)]:
        n = sum(mu)
        for k in range(1, 4):
            for d in range(1, k + 1):
                idx = hahn_indices(d, len(mu))
                assert len(idx) == kostka((n - d, d), sorted(mu, reverse=True))
                assert all(hahn_norm(m, k, mu) > 0 for m in idx)
