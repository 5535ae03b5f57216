"""Complete exponential sums, the singular series and its local densities, and the main term.

Two evaluation routes for the terms A(q, n):

* ``series_term_A`` evaluates the defining a-sum for one modulus directly.
* ``SeriesTables`` precomputes A(p^h, r) for every prime power p^h <= Q and
  every residue r, then assembles A(q, n) multiplicatively. This is what the
  truncated series and the audit use; the direct route is its oracle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np

from ._util import (
    BudgetError,
    factorize_small,
    is_prime,
    neumaier_add,
    primes_upto,
    run_parallel,
    smallest_prime_factors,
)

ZERO_CUTOFF = 1e-14
IMAG_RAISE = 1e-9
EXACT_PHASE_MAX_Q = 256
CHUNK = 1 << 15


@lru_cache(maxsize=512)
def _roots(q: int) -> np.ndarray:
    """e(j/q) for 0 <= j < q, from the exactly reduced phase j/q."""
    return np.exp(2j * np.pi * (np.arange(q) / q))


def power_residues(q: int, k: int) -> np.ndarray:
    """r^k mod q for r = 0..q-1, in exact integer arithmetic."""
    r = np.arange(q, dtype=np.int64)
    acc = np.ones(q, dtype=np.int64) % q
    for _ in range(k):
        acc = acc * r % q
    return acc


def power_residue_histogram(q: int, k: int) -> np.ndarray:
    return np.bincount(power_residues(q, k), minlength=q)


def complete_exp_sum(q: int, a: int, k: int) -> complex:
    """S(q, a) = sum_{r=1}^{q} e(a r^k / q)."""
    if q < 1:
        raise ValueError("q must be positive")
    idx = (a % q) * power_residues(q, k) % q
    z = _roots(q)[idx]
    return complex(math.fsum(z.real), math.fsum(z.imag))


def complete_exp_sums(q: int, k: int) -> np.ndarray:
    """S(q, a) for every a in [0, q)."""
    hist = power_residue_histogram(q, k)
    if q <= EXACT_PHASE_MAX_Q:
        j = np.flatnonzero(hist)
        idx = np.outer(np.arange(q), j) % q
        return (_roots(q)[idx] * hist[j]).sum(axis=1)
    # sum_j hist_j e(a j / q) is an inverse DFT of the exact histogram
    return q * np.fft.ifft(hist)


@dataclass(frozen=True)
class SeriesTerm:
    q: int
    value: float
    termBound: float
    imag: float = 0.0


def _coprime_mask(q: int) -> np.ndarray:
    a = np.arange(q)
    return np.gcd(a, q) == 1


def series_term_A(q: int, n: int, s: int, k: int) -> SeriesTerm:
    """A(q, n) = sum over (a, q) = 1 of (S(q, a)/q)^s e(-a n / q), straight from the definition."""
    if q < 1:
        raise ValueError("q must be positive")
    if q == 1:
        return SeriesTerm(1, 1.0, 1.0, 0.0)
    a = np.flatnonzero(_coprime_mask(q))
    c = (complete_exp_sums(q, k)[a] / q) ** s
    z = c * _roots(q)[(-a * (n % q)) % q]
    re, im = math.fsum(z.real), math.fsum(z.imag)
    if abs(im) > IMAG_RAISE:
        raise ArithmeticError(f"A({q},{n}) has imaginary residue {im:.3g}")
    if abs(re) < ZERO_CUTOFF:
        re = 0.0
    return SeriesTerm(q, re, math.fsum(np.abs(c)), abs(im))


def _prime_power_table(m: int, p: int, s: int, k: int) -> tuple[np.ndarray, float]:
    """A(m, r) for all residues r, plus the a-priori bound sum |S/m|^s."""
    c = (complete_exp_sums(m, k) / m) ** s
    c[np.arange(m) % p == 0] = 0
    table = np.fft.fft(c)
    if np.max(np.abs(table.imag)) > IMAG_RAISE:
        raise ArithmeticError(f"prime power table {m} is not real")
    out = table.real.copy()
    out[np.abs(out) < ZERO_CUTOFF] = 0.0
    return out, float(np.abs(c).sum())


@dataclass
class SeriesEvaluation:
    n: int
    s: int
    k: int
    Q: int
    value: float
    tailEstimate: float
    terms: list[SeriesTerm] | None = None
    warnings: tuple[str, ...] = ()

    def to_dict(self, max_terms: int | None = None) -> dict:
        d = {
            "n": self.n,
            "s": self.s,
            "k": self.k,
            "Q": self.Q,
            "value": self.value,
            "tailEstimate": self.tailEstimate if math.isfinite(self.tailEstimate) else None,
            "warnings": list(self.warnings),
        }
        if self.terms is not None and (max_terms is None or len(self.terms) <= max_terms):
            d["terms"] = [{"q": t.q, "value": t.value} for t in self.terms]
        else:
            d["terms"] = None
        return d

    def to_json(self, max_terms: int | None = None) -> str:
        return json.dumps(self.to_dict(max_terms), sort_keys=True)


class SeriesTables:
    """Prime-power tables for one (s, k, Q), shared across every n."""

    def __init__(self, s: int, k: int, Q: int):
        if Q < 1:
            raise ValueError("Q must be >= 1")
        self.s, self.k, self.Q = s, k, Q
        self.spf = smallest_prime_factors(max(Q, 2))
        self.pp_tables: dict[int, np.ndarray] = {}
        self.pp_bounds: dict[int, float] = {}
        for p in primes_upto(Q):
            p = int(p)
            m = p
            while m <= Q:
                self.pp_tables[m], self.pp_bounds[m] = _prime_power_table(m, p, s, k)
                m *= p
        self.factors = {q: factorize_small(q, self.spf) for q in range(2, Q + 1)}
        self.active = [
            q for q in range(2, Q + 1) if all(self.pp_tables[p**h].any() for p, h in self.factors[q])
        ]
        self._residue_tables: dict[int, np.ndarray] = {}
        self.top_span = Q - Q // 2

    def residue_table(self, q: int) -> np.ndarray:
        tab = self._residue_tables.get(q)
        if tab is None:
            r = np.arange(q)
            tab = np.ones(q)
            for p, h in self.factors[q]:
                m = p**h
                tab = tab * self.pp_tables[m][r % m]
            tab[np.abs(tab) < ZERO_CUTOFF] = 0.0
            self._residue_tables[q] = tab
        return tab

    def term_bound(self, q: int) -> float:
        if q == 1:
            return 1.0
        return math.prod(self.pp_bounds[p**h] for p, h in self.factors[q])

    def _evaluate_chunk(self, n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Series values (compensated, ascending q) and tail estimates.

        The tail fits log|A(q, n)| = log c + b log q by least squares over the
        nonzero terms with q >= 2, lifts the line by its largest residual so it
        bounds every computed term, integrates c q^b over q > Q and scales by
        the fraction of nonzero terms seen in (Q/2, Q]. Infinite when the fit
        has fewer than 3 points or does not decay faster than 1/q.
        """
        size = len(n)
        total = np.ones(size)
        comp = np.zeros(size)
        cnt = np.zeros(size)
        sx = np.zeros(size)
        sxx = np.zeros(size)
        sy = np.zeros(size)
        sxy = np.zeros(size)
        top = np.zeros(size)
        for q in self.active:
            v = self.residue_table(q)[n % q]
            total, comp = neumaier_add(total, comp, v)
            nz = v != 0
            x = math.log(q)
            y = np.log(np.abs(v), where=nz, out=np.zeros(size))
            cnt += nz
            sx += nz * x
            sxx += nz * (x * x)
            sy += y
            sxy += y * x
            if 2 * q > self.Q:
                top += nz
        den = cnt * sxx - sx * sx
        ok = (cnt >= 3) & (den > 1e-12 * np.maximum(cnt * sxx, 1.0))
        safe = np.where(ok, den, 1.0)
        slope = np.where(ok, (cnt * sxy - sx * sy) / safe, 0.0)
        logc = np.where(ok, (sy - slope * sx) / np.maximum(cnt, 1.0), 0.0)
        lift = np.full(size, -np.inf)
        for q in self.active:
            v = self.residue_table(q)[n % q]
            nz = v != 0
            y = np.log(np.abs(v), where=nz, out=np.zeros(size))
            r = np.where(nz, y - slope * math.log(q) - logc, -np.inf)
            np.maximum(lift, r, out=lift)
        decays = ok & (slope < -1)
        expo = np.where(decays, slope + 1, -1.0)
        density = top / self.top_span
        tail = density * np.exp(logc + np.where(decays, lift, 0.0)) * np.power(float(self.Q), expo) / -expo
        return total + comp, np.where(decays, tail, np.inf)

    def evaluate_many(self, ns, workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
        """Truncated series values and tail estimates for every n in ns."""
        ns = np.asarray(ns, dtype=np.int64)
        chunks = [ns[i : i + CHUNK] for i in range(0, len(ns), CHUNK)]
        parts = run_parallel(self._evaluate_chunk, chunks, workers)
        if not parts:
            return np.zeros(0), np.zeros(0)
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])

    def evaluate(self, n: int, ledger: bool = True) -> SeriesEvaluation:
        values, tails = self.evaluate_many([n])
        value, tail = float(values[0]), float(tails[0])
        terms = None
        if ledger:
            active = set(self.active)
            terms = [SeriesTerm(1, 1.0, 1.0)]
            for q in range(2, self.Q + 1):
                v = float(self.residue_table(q)[n % q]) if q in active else 0.0
                terms.append(SeriesTerm(q, v, self.term_bound(q)))
        warnings = []
        if self.s < max(5, self.k + 2):
            warnings.append("not_absolutely_convergent")
        if not tail <= 0.1 * abs(value):
            warnings.append("tail_large")
        if abs(value) < 1e-3:
            warnings.append("near_zero")
        return SeriesEvaluation(n, self.s, self.k, self.Q, value, tail, terms, tuple(warnings))


@lru_cache(maxsize=16)
def get_tables(s: int, k: int, Q: int) -> SeriesTables:
    return SeriesTables(s, k, Q)


def singular_series_truncated(n: int, s: int, k: int, Q: int, ledger: bool = True) -> SeriesEvaluation:
    """Sum of A(q, n) over q <= Q, with a ledger and an empirical tail estimate."""
    return get_tables(s, k, Q).evaluate(n, ledger=ledger)


def _cyclic_product(a: list[int], b: list[int], m: int) -> list[int]:
    """Exact cyclic convolution mod m via Kronecker substitution into big integers."""
    bits = (sum(a) * sum(b)).bit_length() + 1
    width = (bits + 7) // 8

    def pack(v):
        return int.from_bytes(b"".join(int(c).to_bytes(width, "little") for c in v), "little")

    raw = (pack(a) * pack(b)).to_bytes(width * (2 * m), "little")
    out = [0] * m
    for i in range(2 * m - 1):
        c = int.from_bytes(raw[i * width : (i + 1) * width], "little")
        if c:
            out[i % m] += c
    return out


def local_solution_count(m: int, n: int, s: int, k: int) -> int:
    """#{x mod m : x_1^k + ... + x_s^k = n mod m}, counted exactly."""
    hist = [int(c) for c in power_residue_histogram(m, k)]
    result, base, e = None, hist, s
    while e:
        if e & 1:
            result = base if result is None else _cyclic_product(result, base, m)
        e >>= 1
        if e:
            base = _cyclic_product(base, base, m)
    return result[n % m]


def local_density(p: int, n: int, s: int, k: int, h: int, budget: int = 10**6) -> float:
    """M(p^h) / p^(h(s-1)), the level-h approximation to the p-adic density."""
    if not is_prime(p) or h < 1:
        raise ValueError("need p prime and h >= 1")
    m = p**h
    if m > budget:
        raise BudgetError(f"modulus {m} exceeds local density budget {budget}", predicted=m)
    return float(Fraction(local_solution_count(m, n, s, k), m ** (s - 1)))


@dataclass(frozen=True)
class MainTermParams:
    s: int
    k: int
    gammaFactor: float = field(init=False)

    def __post_init__(self):
        g = math.gamma(1 + 1 / self.k) ** self.s / math.gamma(self.s / self.k)
        object.__setattr__(self, "gammaFactor", g)

    @property
    def exponent(self) -> Fraction:
        return Fraction(self.s, self.k) - 1


def main_term(n: int, s: int, k: int, seriesEval: SeriesEvaluation) -> float:
    """Gamma(1+1/k)^s / Gamma(s/k) * S(n) * n^(s/k - 1)."""
    if (seriesEval.n, seriesEval.s, seriesEval.k) != (n, s, k):
        raise ValueError("series evaluation belongs to different (n, s, k)")
    g = MainTermParams(s, k).gammaFactor
    with mpmath.workdps(30):
        power = mpmath.power(n, mpmath.mpf(s) / k - 1)
        return float(g * seriesEval.value * power)


def main_terms(ns, s: int, k: int, series_values) -> np.ndarray:
    """Vectorised main terms; the power is taken in long double."""
    g = MainTermParams(s, k).gammaFactor
    ns = np.asarray(ns, dtype=np.longdouble)
    expo = np.longdouble(s) / np.longdouble(k) - 1
    return (g * np.asarray(series_values, dtype=np.longdouble) * np.power(ns, expo)).astype(np.float64)
