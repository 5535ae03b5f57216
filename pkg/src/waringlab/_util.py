"""Shared plumbing: error types, budgets, compensated sums, small number theory helpers."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np

INT64_MAX = 2**63 - 1
DEFAULT_MEMORY_BUDGET = 4 * 2**30


class BudgetError(RuntimeError):
    """A requested computation would exceed the configured resource budget."""

    def __init__(self, message: str, predicted: int | None = None):
        super().__init__(message)
        self.predicted = predicted


class CapacityError(ArithmeticError):
    """Exact arithmetic cannot be guaranteed for the requested parameters."""


class InsufficientDataError(ValueError):
    pass


def memory_budget() -> int:
    env = os.environ.get("WARINGLAB_BUDGET")
    if env:
        return int(float(env))
    return DEFAULT_MEMORY_BUDGET


def check_budget(predicted_bytes: int, budget: int | None, what: str) -> None:
    budget = memory_budget() if budget is None else budget
    if predicted_bytes > budget:
        raise BudgetError(
            f"{what}: predicted {predicted_bytes} bytes exceeds budget {budget} bytes",
            predicted=predicted_bytes,
        )


def iroot(n: int, k: int) -> int:
    """Largest integer x with x**k <= n."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n < 2:
        return n
    x = int(round(n ** (1.0 / k)))
    while x**k > n:
        x -= 1
    while (x + 1) ** k <= n:
        x += 1
    return x


def primes_upto(n: int) -> np.ndarray:
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return np.flatnonzero(sieve).astype(np.int64)


def smallest_prime_factors(n: int) -> np.ndarray:
    spf = np.zeros(n + 1, dtype=np.int64)
    for p in primes_upto(n)[::-1]:
        spf[p::p] = p
    return spf


def factorize_small(q: int, spf: np.ndarray) -> list[tuple[int, int]]:
    out = []
    while q > 1:
        p = int(spf[q])
        h = 0
        while q % p == 0:
            q //= p
            h += 1
        out.append((p, h))
    return out


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def euler_phi(q: int) -> int:
    result, m, p = q, q, 2
    while p * p <= m:
        if m % p == 0:
            while m % p == 0:
                m //= p
            result -= result // p
        p += 1
    if m > 1:
        result -= result // m
    return result


def neumaier_add(total, comp, value):
    """One step of Neumaier's compensated summation; works on scalars and arrays alike."""
    t = total + value
    big = np.abs(total) >= np.abs(value)
    comp = comp + np.where(big, (total - t) + value, (value - t) + total)
    return t, comp


def compensated_sum(values) -> float:
    total, comp = 0.0, 0.0
    for v in values:
        total, comp = neumaier_add(total, comp, float(v))
    return float(total + comp)


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    return Fraction(float(x))


def run_parallel(fn, jobs, workers: int):
    """Map fn over jobs; results come back in job order whatever the pool size."""
    jobs = list(jobs)
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))
