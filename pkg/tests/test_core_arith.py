import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from waringlab._util import iroot, euler_phi, is_prime, primes_upto
from waringlab.core_arith import (
    RepParams,
    RepTable,
    _shift_accumulate,
    block_set,
    convolve_counts,
    count_tuples_upto,
    dyadic_dissection,
    kth_power_table,
    rep_count_all,
    rep_count_direct,
    smooth_set,
)


def brute_reps(n, s, k):
    P = iroot(n, k)
    if s == 1:
        return int(P**k == n and P >= 1)
    return sum(brute_reps(n - x**k, s - 1, k) for x in range(1, P + 1) if n - x**k >= 1)


def test_params_root():
    assert RepParams(2, 3, 100).P == 4
    assert RepParams(3, 2, 99).P == 9
    with pytest.raises(ValueError):
        RepParams(0, 3, 10)


def test_power_table_promotes():
    assert kth_power_table(5, 3).tolist() == [1, 8, 27, 64, 125]
    big = kth_power_table(3, 50)
    assert big.dtype == object and big[-1] == 3**50


@pytest.mark.parametrize(
    "n,s,k,want",
    [(9, 2, 3, 2), (2, 2, 3, 1), (1729, 2, 3, 4), (3, 2, 3, 0), (5, 2, 2, 2), (3, 3, 3, 1), (1, 1, 5, 1)],
)
def test_direct_known(n, s, k, want):
    assert rep_count_direct(n, s, k) == want


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 400), st.integers(1, 4), st.integers(2, 4))
def test_direct_matches_bruteforce(n, s, k):
    assert rep_count_direct(n, s, k) == brute_reps(n, s, k)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(2, 5), st.integers(1, 600), st.integers(1, 4))
def test_table_matches_direct(s, k, N, workers):
    table = rep_count_all(RepParams(s, k, N), workers)
    assert table[0] == 0
    assert table.as_ints()[1:] == [rep_count_direct(n, s, k) for n in range(1, N + 1)]


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.integers(2, 4), st.integers(1, 3000))
def test_total_counts_tuples(s, k, N):
    assert rep_count_all(RepParams(s, k, N)).total() == count_tuples_upto(N, s, k)


def test_convolve_tables():
    a = rep_count_all(RepParams(2, 3, 2000))
    b = rep_count_all(RepParams(3, 3, 2000))
    assert a.convolve(b).equals(rep_count_all(RepParams(5, 3, 2000)))
    with pytest.raises(ValueError):
        a.convolve(rep_count_all(RepParams(2, 4, 2000)))


def test_workers_do_not_change_counts():
    p = RepParams(4, 3, 50000)
    assert rep_count_all(p, 1).equals(rep_count_all(p, 7))


def test_overflow_promotes_to_python_ints():
    prev = np.array([0, 2**62, 2**62, 0], dtype=np.int64)
    out = _shift_accumulate(prev, [0, 1], 3)
    assert out.dtype == object
    assert [int(v) for v in out] == [0, 2**62, 2**63, 2**62]


def test_convolve_counts_object_route():
    a = np.array([0, 2**40, 0], dtype=np.int64)
    b = np.array([0, 2**40, 1], dtype=np.int64)
    out = convolve_counts(a, b, 2)
    assert [int(v) for v in out] == [0, 0, 2**80]


def test_smooth_set_small():
    A = smooth_set(30, 5)
    assert A.members.tolist() == [1, 2, 3, 4, 5, 6, 8, 9, 10, 12, 15, 16, 18, 20, 24, 25, 27, 30]
    assert math.isclose(A.eta, math.log(5) / math.log(30))
    assert smooth_set(10, 1).members.tolist() == [1]
    assert len(smooth_set(4, 4)) == 4


def test_block_set_real_Q():
    B = block_set(Fraction(31, 2), 3)
    assert B.members.tolist() == [8, 9, 12]
    assert block_set(16, 16).members.tolist() == list(range(9, 17))


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 3000), st.integers(1, 60))
def test_dissection_partitions(P, R):
    blocks, rest = dyadic_dissection(P, R)
    pieces = [b.members for b in blocks] + [rest.members]
    merged = np.sort(np.concatenate(pieces))
    assert merged.tolist() == smooth_set(P, R).members.tolist()
    assert len(blocks) == int(math.floor(0.5 * math.log2(P))) + 1


def test_number_theory_helpers():
    assert primes_upto(30).tolist() == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert [euler_phi(q) for q in (1, 9, 12, 97)] == [1, 6, 4, 96]
    assert is_prime(2**61 - 1) and not is_prime(561)
    assert iroot(10**18, 3) == 10**6 and iroot(10**18 - 1, 3) == 10**6 - 1
