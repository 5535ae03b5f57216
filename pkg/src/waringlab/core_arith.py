"""Exact integer foundations: power tables, representation counts, smooth sets.

Counts are exact integers throughout. Arrays are int64 while a cheap a-priori
bound proves no entry can overflow; otherwise they are promoted to object
arrays of Python ints (arbitrary precision), never wrapped.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from ._util import INT64_MAX, CapacityError, iroot, primes_upto, run_parallel


@dataclass(frozen=True)
class RepParams:
    s: int
    k: int
    N: int
    P: int = field(init=False)

    def __post_init__(self):
        if self.s < 1 or self.k < 2 or self.N < 1:
            raise ValueError(f"need s >= 1, k >= 2, N >= 1 (got s={self.s}, k={self.k}, N={self.N})")
        object.__setattr__(self, "P", iroot(self.N, self.k))


@dataclass(frozen=True, eq=False)
class RepTable:
    """counts[n] = R_{s,k}(n) for 0 <= n <= N (counts[0] is always 0)."""

    params: RepParams
    counts: np.ndarray

    def __getitem__(self, n):
        return self.counts[n]

    def total(self) -> int:
        return exact_total(self.counts)

    def as_ints(self) -> list[int]:
        return [int(c) for c in self.counts]

    def equals(self, other: "RepTable") -> bool:
        return self.params == other.params and self.as_ints() == other.as_ints()

    def convolve(self, other: "RepTable") -> "RepTable":
        """Table for s1 + s2 summands from tables for s1 and s2 (same k and N)."""
        a, b = self.params, other.params
        if (a.k, a.N) != (b.k, b.N):
            raise ValueError("tables must share k and N")
        counts = convolve_counts(self.counts, other.counts, a.N)
        return RepTable(RepParams(a.s + b.s, a.k, a.N), counts)


def exact_total(arr: np.ndarray) -> int:
    """Sum of a count array as a Python int; an int64 sum is only trusted when it cannot wrap."""
    if arr.dtype == object:
        return sum(int(x) for x in arr)
    if float(np.abs(arr).sum(dtype=np.float64)) < 2.0**62:
        return int(arr.sum())
    return int(arr.astype(object).sum())


def kth_power_table(P: int, k: int) -> np.ndarray:
    """Entry x-1 holds x**k for 1 <= x <= P."""
    if P < 1 or k < 1:
        raise ValueError("need P >= 1 and k >= 1")
    if P**k <= INT64_MAX:
        return np.arange(1, P + 1, dtype=np.int64) ** k
    return np.array([x**k for x in range(1, P + 1)], dtype=object)


def rep_count_direct(n: int, s: int, k: int) -> int:
    """R_{s,k}(n) by enumerating nondecreasing tuples, each weighted by its
    number of distinct orderings."""
    if n < 1 or s < 1:
        raise ValueError("need n >= 1 and s >= 1")
    powers = [x**k for x in range(1, iroot(n, k) + 1)]
    where = {v: i for i, v in enumerate(powers)}
    fact_s = math.factorial(s)

    def rec(start, rem, left, last, run, denom):
        if left == 1:
            j = where.get(rem)
            if j is None or j < start:
                return 0
            r = run + 1 if j == last else 1
            return fact_s // (denom * r)
        total = 0
        for j in range(start, len(powers)):
            v = powers[j]
            if v * left > rem:
                break
            r = run + 1 if j == last else 1
            total += rec(j, rem - v, left - 1, j, r, denom * r)
        return total

    return rec(0, n, s, -1, 0, 1)


def count_tuples_upto(N: int, s: int, k: int) -> int:
    """Number of ordered s-tuples of positive integers with x_1^k + ... + x_s^k <= N,
    by multiset enumeration (independent of the convolution route)."""
    powers = [x**k for x in range(1, iroot(N, k) + 1)]
    fact_s = math.factorial(s)

    def rec(start, rem, left, last, run, denom):
        if left == 1:
            hi = bisect.bisect_right(powers, rem)
            if hi <= start:
                return 0
            cnt = hi - start
            total = 0
            if start == last:
                total += fact_s // (denom * (run + 1))
                cnt -= 1
            return total + cnt * (fact_s // denom)
        total = 0
        for j in range(start, len(powers)):
            v = powers[j]
            if v * left > rem:
                break
            r = run + 1 if j == last else 1
            total += rec(j, rem - v, left - 1, j, r, denom * r)
        return total

    if s == 0:
        return 1
    return rec(0, N, s, -1, 0, 1)


def _shift_accumulate(prev: np.ndarray, shifts, N: int, workers: int = 1) -> np.ndarray:
    """out[n] = sum over shifts d of prev[n - d], truncated to 0..N."""
    bound = exact_total(prev) * len(shifts)
    if bound > INT64_MAX:
        prev = prev.astype(object)
        out = np.zeros(N + 1, dtype=object)
        out[:] = 0
    else:
        prev = prev.astype(np.int64, copy=False)
        out = np.zeros(N + 1, dtype=np.int64)
    shifts = [int(d) for d in shifts if d <= N]
    nchunks = max(1, workers)
    edges = np.linspace(0, N + 1, nchunks + 1).astype(int)

    def work(i):
        lo, hi = edges[i], edges[i + 1]
        view = out[lo:hi]
        for d in shifts:
            start = max(lo, d)
            if start >= hi:
                continue
            view[start - lo :] += prev[start - d : hi - d]

    run_parallel(work, range(nchunks), workers)
    return out


def convolve_counts(a: np.ndarray, b: np.ndarray, N: int) -> np.ndarray:
    """c[n] = sum_i a[i] b[n - i] for 0 <= n <= N, exact."""
    if len(np.flatnonzero(a)) > len(np.flatnonzero(b)):
        a, b = b, a
    total_a = exact_total(a)
    total_b = exact_total(b)
    exact64 = total_a * total_b <= INT64_MAX
    dtype = np.int64 if exact64 else object
    out = np.zeros(N + 1, dtype=dtype)
    if not exact64:
        out[:] = 0
    b = b.astype(dtype)
    for i in np.flatnonzero(a):
        i = int(i)
        if i > N:
            break
        out[i:] += b[: N + 1 - i] * (int(a[i]) if not exact64 else a[i])
    return out


def rep_count_all(params: RepParams, workers: int = 1) -> RepTable:
    """All R_{s,k}(n), n <= N, by s-1 truncated convolutions with the k-th power indicator."""
    N, P = params.N, params.P
    powers = kth_power_table(P, params.k)
    table = np.zeros(N + 1, dtype=np.int64)
    table[np.asarray(powers, dtype=np.int64)] = 1
    for _ in range(params.s - 1):
        table = _shift_accumulate(table, powers, N, workers)
    if table.dtype == object and any(int(c) < 0 for c in table):
        raise CapacityError("negative count: arithmetic failure")
    return RepTable(params, table)


@dataclass(frozen=True, eq=False)
class SmoothSet:
    """A(P, R): integers in [1, P] all of whose prime factors are <= R."""

    P: int
    R: float
    members: np.ndarray

    def __len__(self):
        return len(self.members)

    @property
    def eta(self) -> float:
        """Exponent e with R = P^e (records how smooth the set is)."""
        if self.P <= 1:
            return float("nan")
        return math.log(max(self.R, 1.0)) / math.log(self.P)


@dataclass(frozen=True, eq=False)
class BlockSet:
    """B(Q, R) = A(Q, R) minus A(Q/2, R), i.e. the R-smooth integers in (Q/2, Q]."""

    Q: Fraction
    R: float
    members: np.ndarray

    def __len__(self):
        return len(self.members)


@lru_cache(maxsize=64)
def _largest_prime_factor(P: int) -> np.ndarray:
    lpf = np.ones(P + 1, dtype=np.int64)
    for p in primes_upto(P):
        lpf[p::p] = p
    return lpf


def smooth_set(P, R) -> SmoothSet:
    Pi = math.floor(P)
    if Pi < 1 or R < 1:
        raise ValueError("need P >= 1 and R >= 1")
    lpf = _largest_prime_factor(Pi)
    members = np.flatnonzero(lpf[1:] <= R) + 1
    members.setflags(write=False)
    return SmoothSet(Pi, float(R), members)


def block_set(Q, R) -> BlockSet:
    Qf = Q if isinstance(Q, Fraction) else Fraction(Q)
    if Qf < 1 or R < 1:
        raise ValueError("need Q >= 1 and R >= 1")
    top = smooth_set(math.floor(Qf), R).members
    lo = math.floor(Qf / 2)
    members = top[top > lo]
    members.setflags(write=False)
    return BlockSet(Qf, float(R), members)


def dyadic_dissection(P: int, R) -> tuple[list[BlockSet], SmoothSet]:
    """Blocks B(P/2^l, R) for 0 <= l <= L = floor(log2(P)/2) and the leftover
    A(P/2^(L+1), R); together they partition A(P, R)."""
    L = int(math.floor(0.5 * math.log2(P))) if P > 1 else 0
    blocks = [block_set(Fraction(P, 2**l), R) for l in range(L + 1)]
    rest_top = Fraction(P, 2 ** (L + 1))
    if rest_top >= 1:
        rest = smooth_set(math.floor(rest_top), R)
    else:
        rest = SmoothSet(0, float(R), np.zeros(0, dtype=np.int64))
    return blocks, rest
