import cmath
import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from waringlab.singular_series import (
    MainTermParams,
    SeriesTables,
    complete_exp_sum,
    complete_exp_sums,
    get_tables,
    local_density,
    local_solution_count,
    main_term,
    main_terms,
    series_term_A,
    singular_series_truncated,
)


def naive_A(q, n, s, k):
    total = 0j
    for a in range(1, q + 1):
        if math.gcd(a, q) != 1:
            continue
        S = sum(cmath.exp(2j * math.pi * a * pow(r, k, q) / q) for r in range(q))
        total += (S / q) ** s * cmath.exp(-2j * math.pi * a * n / q)
    return total


def test_exp_sum_trivial():
    assert complete_exp_sum(7, 0, 3) == pytest.approx(7)
    # cubes mod 7 are {0, 1, 6}; S(7,1) = 1 + 3 e(1/7) + 3 e(6/7)
    want = 1 + 6 * math.cos(2 * math.pi / 7)
    assert complete_exp_sum(7, 1, 3) == pytest.approx(want)


@pytest.mark.parametrize("q", [9, 64, 255, 257, 300, 512])
def test_vector_route_matches_scalar(q):
    v = complete_exp_sums(q, 3)
    for a in (0, 1, 2, q - 1, q // 3):
        assert abs(v[a] - complete_exp_sum(q, a, 3)) < 1e-9


@pytest.mark.parametrize("q,n,s,k", [(4, 3, 5, 3), (9, 7, 7, 3), (7, 2, 6, 4), (12, 5, 5, 3), (25, 11, 9, 5)])
def test_term_matches_naive(q, n, s, k):
    got = series_term_A(q, n, s, k)
    want = naive_A(q, n, s, k)
    assert abs(got.value - want.real) < 1e-10
    assert abs(want.imag) < 1e-10


def test_term_q1_and_bound():
    assert series_term_A(1, 5, 7, 3).value == 1.0
    t = series_term_A(9, 4, 7, 3)
    assert abs(t.value) <= t.termBound + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 60), st.integers(2, 60), st.integers(0, 500), st.sampled_from([3, 4, 5]))
def test_multiplicative(q1, q2, n, k):
    if math.gcd(q1, q2) != 1:
        return
    a = series_term_A(q1 * q2, n, 6, k).value
    b = series_term_A(q1, n, 6, k).value * series_term_A(q2, n, 6, k).value
    assert abs(a - b) < 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 10**6), st.integers(2, 300))
def test_tables_match_direct(n, q):
    tab = get_tables(7, 3, 300)
    got = float(tab.residue_table(q)[n % q]) if q in set(tab.active) else 0.0
    assert abs(got - series_term_A(q, n, 7, 3).value) < 1e-10


def test_inactive_moduli_vanish():
    # A(p^h, n) = 0 for k=3 once h is large enough, so those q are skipped
    tab = get_tables(7, 3, 2000)
    for q in range(2, 2001):
        if q not in set(tab.active):
            assert series_term_A(q, 12345, 7, 3).value == 0.0
            break


@pytest.mark.parametrize("p,h", [(2, 3), (3, 2), (5, 2), (7, 1), (13, 2)])
def test_local_global(p, h):
    n, s, k = 100, 7, 3
    dens = local_density(p, n, s, k, h)
    partial = sum(series_term_A(p**j, n, s, k).value for j in range(1, h + 1))
    assert abs(dens - (1 + partial)) < 1e-9


def test_local_count_bruteforce():
    m, s, k = 9, 3, 3
    for n in range(m):
        want = sum(1 for x in np.ndindex(m, m, m) if sum(v**k for v in x) % m == n)
        assert local_solution_count(m, n, s, k) == want


def test_local_density_guards():
    with pytest.raises(ValueError):
        local_density(4, 1, 7, 3, 2)


def test_series_five_cubes():
    ev = singular_series_truncated(100, 5, 3, 1000)
    assert ev.value == pytest.approx(1.1554, abs=1e-3)
    assert 0.1 < ev.value < 10
    assert 0 < ev.tailEstimate < math.inf
    assert "tail_large" in ev.warnings
    assert ev.terms[0].q == 1 and len(ev.terms) == 1000
    assert abs(math.fsum(t.value for t in ev.terms) - ev.value) < 1e-9


def test_series_seven_cubes_local_product():
    ev = singular_series_truncated(100, 7, 3, 2000)
    prod = 1.0
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47):
        h = max(1, int(math.log(600) / math.log(p)))
        prod *= local_density(p, 100, 7, 3, h)
    assert ev.value == pytest.approx(prod, rel=2e-3)
    assert ev.tailEstimate < 0.05
    assert ev.warnings == ()


@pytest.mark.xfail(strict=True, reason="the envelope over the computed terms is about 1.4 here; five cubes converge too slowly")
def test_five_cubes_tail_below_one_percent():
    assert singular_series_truncated(100, 5, 3, 1000).tailEstimate < 1e-2


@settings(max_examples=15, deadline=None)
@given(st.lists(st.integers(1, 10**6), min_size=5, max_size=40), st.sampled_from([(6, 200), (7, 300), (8, 150)]))
def test_tail_envelope_covers_doubling(ns, sQ):
    s, Q = sQ
    v1, t1 = get_tables(s, 3, Q).evaluate_many(ns)
    v2, _ = get_tables(s, 3, 2 * Q).evaluate_many(ns)
    assert np.all(np.abs(v2 - v1) <= t1)


def test_series_warnings_and_json():
    ev = singular_series_truncated(10, 4, 3, 50)
    assert "not_absolutely_convergent" in ev.warnings
    d = ev.to_dict(max_terms=10)
    assert d["terms"] is None
    assert '"n": 10' in ev.to_json()


def test_many_matches_single():
    tab = SeriesTables(6, 3, 400)
    ns = np.array([1, 2, 17, 100, 9999, 123456])
    vals, tails = tab.evaluate_many(ns, workers=3)
    for n, v in zip(ns, vals):
        assert v == pytest.approx(tab.evaluate(int(n), ledger=False).value, abs=1e-13)


def test_main_terms_agree():
    ev = singular_series_truncated(1000, 7, 3, 500)
    single = main_term(1000, 7, 3, ev)
    vec = main_terms([1000], 7, 3, [ev.value])[0]
    assert single == pytest.approx(vec, rel=1e-14)
    g = math.gamma(4 / 3) ** 7 / math.gamma(7 / 3)
    assert MainTermParams(7, 3).gammaFactor == pytest.approx(g)
    assert MainTermParams(7, 3).exponent == Fraction(4, 3)
    with pytest.raises(ValueError):
        main_term(999, 7, 3, ev)
