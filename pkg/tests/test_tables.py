import math
from fractions import Fraction
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import chisquare

from coset_chains.partitions import partitions_of
from coset_chains.tables import (ContingencyTable, StateSpaceTooLarge, ThreeWayTable, chi_square_statistic,
                                 count_tables, coset_size, cross_moment, enumerate_tables, expected_entry,
                                 factorial_moment, fisher_yates_distribution, fisher_yates_pmf, iter_three_way,
                                 load_table, make_rng, min_coset_representative, parse_permutation,
                                 permutation_to_table, q_coset_weight, sample_fisher_yates,
                                 sample_fisher_yates_many, save_table, table_from_csv, table_from_json,
                                 table_majorizes, table_to_csv, table_to_json, three_way_pmf)

from conftest import margins

T = ContingencyTable.from_rows
EXAMPLE = ((3, 2), (2, 2, 1))


def test_table_validation():
    with pytest.raises(ValueError):
        T([[1, 2], [3]])
    with pytest.raises(ValueError):
        T([[1, -1]])
    with pytest.raises(ValueError):
        T([[1, 2]], row_sums=[4])
    t = T([[2, 1, 0], [0, 1, 1]])
    assert t.row_sums == (3, 2) and t.col_sums == (2, 2, 1) and t.n == 5
    assert str(t) == "(2,1,0; 0,1,1)"


def test_enumerate_example():
    tables = enumerate_tables(*EXAMPLE)
    assert len(tables) == 5
    assert [t.flat() for t in tables] == sorted(t.flat() for t in tables)
    assert enumerate_tables((2, 1), (2, 1)) == [T([[1, 1], [1, 0]]), T([[2, 0], [0, 1]])]


def test_single_row_forced():
    assert enumerate_tables((6,), (3, 2, 1)) == [T([[3, 2, 1]])]


def test_count_matches_enumeration():
    for lam in partitions_of(6):
        for mu in partitions_of(6):
            assert count_tables(lam, mu) == len(enumerate_tables(lam, mu))


def test_cap(monkeypatch):
    with pytest.raises(StateSpaceTooLarge):
        enumerate_tables((1,) * 6, (1,) * 6, cap=100)
    monkeypatch.setenv("COSET_CHAINS_MAX_STATES", "10")
    with pytest.raises(StateSpaceTooLarge):
        enumerate_tables((4, 4), (2, 2, 2, 2))


def test_bad_margins():
    with pytest.raises(ValueError):
        enumerate_tables((3, 2), (2, 2))
    with pytest.raises(ValueError):
        enumerate_tables((3, 0), (2, 1))


def test_coset_sizes_and_pmf():
    assert coset_size(T([[2, 1, 0], [0, 1, 1]])) == 24
    assert coset_size(T([[2, 0, 1], [0, 2, 0]])) == 12
    assert fisher_yates_pmf(T([[2, 1, 0], [0, 1, 1]])) == Fraction(24, 120)
    assert fisher_yates_pmf(T([[1, 1, 1], [1, 1, 0]])) == Fraction(48, 120)
    assert coset_size(T([[5]])) == 120
    assert fisher_yates_pmf(T([[5]])) == 1


def test_coset_size_by_orbit_count():
    # count permutations of S_5 landing on each table
    counts = {}
    for sigma in permutations(range(1, 6)):
        t = permutation_to_table(sigma, *EXAMPLE)
        counts[t] = counts.get(t, 0) + 1
    assert counts == {t: coset_size(t) for t in enumerate_tables(*EXAMPLE)}


@pytest.mark.parametrize("n", range(1, 11))
def test_pmf_sums_to_one(n):
    ps = partitions_of(n)
    for lam in ps[:: max(1, len(ps) // 6)]:
        for mu in ps[:: max(1, len(ps) // 6)]:
            if count_tables(lam, mu) > 5000:
                continue
            tables = enumerate_tables(lam, mu)
            assert sum(fisher_yates_distribution(tables)) == 1
            assert sum(coset_size(t) for t in tables) == math.factorial(n)


def test_permutation_examples():
    assert permutation_to_table(parse_permutation("12534"), *EXAMPLE) == T([[2, 0, 1], [0, 2, 0]])
    assert permutation_to_table(parse_permutation("13425"), *EXAMPLE) == T([[1, 2, 0], [1, 0, 1]])
    assert permutation_to_table(range(1, 6), (3, 2), (3, 2)) == T([[3, 0], [0, 2]])
    assert min_coset_representative(T([[2, 1, 0], [0, 1, 1]])) == (1, 2, 3, 4, 5)
    assert min_coset_representative(T([[0, 2, 1], [2, 0, 0]])) == (3, 4, 5, 1, 2)
    assert parse_permutation("1,2,3") == (1, 2, 3)
    with pytest.raises(ValueError):
        parse_permutation("1224")


@pytest.mark.parametrize("n", range(1, 9))
def test_min_representative_roundtrip(n):
    ps = partitions_of(n)
    for lam in ps[:4]:
        for mu in ps[-4:]:
            if count_tables(lam, mu) > 3000:
                continue
            for t in enumerate_tables(lam, mu):
                assert permutation_to_table(min_coset_representative(t), lam, mu) == t


@pytest.mark.parametrize("n", range(2, 9))
def test_majorization_orders_pmf(n):
    # tables with the same multiset of entries are tied, so compare classes
    from coset_chains.partitions import majorizes
    for lam in partitions_of(n):
        for mu in partitions_of(n):
            if mu > lam:
                continue
            classes = {}
            for t in enumerate_tables(lam, mu):
                key = tuple(sorted(t.flat(), reverse=True))
                assert classes.setdefault(key, fisher_yates_pmf(t)) == fisher_yates_pmf(t)
            for a, pa in classes.items():
                for b, pb in classes.items():
                    if a != b and majorizes(b, a):
                        assert pa > pb


def test_tied_tables_share_pmf():
    a, b = T([[1, 0], [0, 1]]), T([[0, 1], [1, 0]])
    assert table_majorizes(a, b) and table_majorizes(b, a)
    assert fisher_yates_pmf(a) == fisher_yates_pmf(b)


def test_table_majorizes_examples():
    assert table_majorizes(T([[2, 2], [2, 2]]), T([[3, 1], [1, 3]]))
    assert table_majorizes(T([[3, 1], [1, 3]]), T([[4, 0], [0, 4]]))
    assert table_majorizes(T([[3, 1], [1, 3]]), T([[3, 1], [1, 3]]))
    assert not table_majorizes(T([[4, 0], [0, 4]]), T([[2, 2], [2, 2]]))


def test_uniform_table_is_modal():
    tables = enumerate_tables((3, 3, 3), (3, 3, 3))
    pmf = fisher_yates_distribution(tables)
    top = max(range(len(tables)), key=lambda k: pmf[k])
    assert tables[top] == T([[1, 1, 1]] * 3)
    assert sorted(pmf)[-1] > sorted(pmf)[-2]


def test_sampler_single_state():
    rng = make_rng(0)
    for _ in range(5):
        assert sample_fisher_yates((5,), (2, 2, 1), rng) == T([[2, 2, 1]])


def test_sampler_two_by_two():
    draws = sample_fisher_yates_many((2, 1), (2, 1), 60_000, make_rng(3))
    freq = np.mean(draws[:, 0, 0] == 1)
    p = float(fisher_yates_pmf(T([[1, 1], [1, 0]])))
    assert p == pytest.approx(2 / 3)
    assert abs(freq - p) < 4 * math.sqrt(p * (1 - p) / 60_000)


def test_sampler_goodness_of_fit():
    tables = enumerate_tables(*EXAMPLE)
    index = {t.flat(): k for k, t in enumerate(tables)}
    draws = sample_fisher_yates_many(*EXAMPLE, 100_000, make_rng(11))
    counts = np.bincount([index[tuple(d.ravel())] for d in draws], minlength=len(tables))
    expected = np.array([float(p) for p in fisher_yates_distribution(tables)]) * 100_000
    assert chisquare(counts, expected).pvalue > 1e-3


def test_single_sampler_matches_pmf():
    rng = make_rng(5)
    tables = enumerate_tables(*EXAMPLE)
    index = {t: k for k, t in enumerate(tables)}
    counts = np.zeros(len(tables))
    for _ in range(20_000):
        counts[index[sample_fisher_yates(*EXAMPLE, rng)]] += 1
    expected = np.array([float(p) for p in fisher_yates_distribution(tables)]) * 20_000
    assert chisquare(counts, expected).pvalue > 1e-3


def test_sampler_is_deterministic():
    a = sample_fisher_yates_many(*EXAMPLE, 50, make_rng(7))
    b = sample_fisher_yates_many(*EXAMPLE, 50, make_rng(7))
    assert np.array_equal(a, b)


def test_expected_entry():
    assert expected_entry((3, 2), (2, 2, 1), 0, 0) == Fraction(6, 5)


def test_cross_moments_against_enumeration():
    tables = enumerate_tables(*EXAMPLE)
    pmf = fisher_yates_distribution(tables)
    cells = [(i, j) for i in range(2) for j in range(3)]
    for a in cells:
        assert expected_entry(*EXAMPLE, *a) == sum(p * t[a] for t, p in zip(tables, pmf))
        for b in cells:
            direct = sum(p * t[a] * t[b] for t, p in zip(tables, pmf))
            assert cross_moment(*EXAMPLE, a, b) == direct


def test_same_cell_second_moment_form():
    lam, mu = (4, 3, 2), (5, 4)
    n = 9
    for i in range(3):
        for j in range(2):
            li, mj = lam[i], mu[j]
            expected = Fraction(li ** 2 * mj ** 2, n * n) + Fraction(li * mj * (n - li) * (n - mj), n * n * (n - 1))
            assert cross_moment(lam, mu, (i, j), (i, j)) == expected


@given(margins(n_max=6))
def test_factorial_moments_against_enumeration(m):
    rows, cols = m
    tables = enumerate_tables(rows, cols)
    pmf = fisher_yates_distribution(tables)
    powers = {(0, 0): 2, (len(rows) - 1, len(cols) - 1): 1}
    if (0, 0) == (len(rows) - 1, len(cols) - 1):
        powers = {(0, 0): 3}

    def falling(x, k):
        return math.prod(x - s for s in range(k))

    direct = sum(p * math.prod(falling(t[c], k) for c, k in powers.items()) for t, p in zip(tables, pmf))
    assert factorial_moment(rows, cols, powers) == direct


def test_chi_square_statistic():
    assert chi_square_statistic(T([[2, 4], [1, 2]])) == 0
    t = T([[3, 0], [0, 3]])
    assert chi_square_statistic(t) == 6


def test_q_weight_limits():
    t = T([[2, 1], [0, 2]])
    theta = 1 - 1e-6
    assert q_coset_weight(t, theta) / (1 - theta) ** t.n == pytest.approx(coset_size(t), rel=1e-3)
    one = T([[3]])
    th = Fraction(1, 2)
    assert q_coset_weight(one, th) == th ** -9 * (1 - th) ** 3 * (1 * (1 + th) * (1 + th + th * th))
    with pytest.raises(ValueError):
        q_coset_weight(t, 0)


def test_q_weight_ratio_fixture():
    # independent evaluation at theta = 1/2 for the two (2,1) x (2,1) tables
    th = Fraction(1, 2)
    a, b = T([[2, 0], [0, 1]]), T([[1, 1], [1, 0]])
    fact = lambda m: math.prod(sum(th ** s for s in range(k)) for k in range(1, m + 1))
    wa = th ** (2 - 9) * (1 - th) ** 3 * fact(2) ** 2 / fact(2)
    wb = th ** (0 - 9) * (1 - th) ** 3 * fact(2) ** 2
    assert q_coset_weight(a, th) == wa
    assert q_coset_weight(b, th) == wb
    assert q_coset_weight(b, th) / q_coset_weight(a, th) == wb / wa


def test_three_way_enumeration_and_pmf():
    tabs = list(iter_three_way((2, 1), (2, 1), (1, 1, 1)))
    assert len(set(tabs)) == len(tabs)
    for t in tabs:
        assert t.margins() == ((2, 1), (2, 1), (1, 1, 1))
    assert sum(three_way_pmf(t) for t in tabs) == 1
    assert three_way_pmf(ThreeWayTable((((3,),),))) == 1


def test_json_csv_roundtrip(tmp_path):
    t = T([[2, 1, 0], [0, 1, 1]])
    assert table_from_json(table_to_json(t)) == t
    assert table_from_csv(table_to_csv(t)) == t
    for name in ("t.json", "t.csv"):
        save_table(t, tmp_path / name)
        assert load_table(tmp_path / name) == t


def test_loader_errors():
    with pytest.raises(ValueError, match="ragged"):
        table_from_csv("1,2\n3\n")
    with pytest.raises(ValueError, match="negative"):
        table_from_csv("1,-2\n")
    with pytest.raises(ValueError, match="row sums"):
        table_from_json('{"rows": [[1, 2]], "row_sums": [4]}')
    with pytest.raises(ValueError, match="non-integer"):
        table_from_json('{"rows": [[1, 2.5]]}')
    with pytest.raises(ValueError, match="non-integer"):
        table_from_csv("1,x\n")


@given(margins(n_max=8), st.integers(0, 2 ** 32 - 1))
def test_sampled_tables_have_margins(m, seed):
    rows, cols = m
    draws = sample_fisher_yates_many(rows, cols, 5, make_rng(seed))
    assert (draws.sum(axis=2) == np.array(rows)).all()
    assert (draws.sum(axis=1) == np.array(cols)).all()
