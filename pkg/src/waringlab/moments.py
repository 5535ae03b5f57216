"""Exact even moments of Weyl sums, the Hua ladder, and the two-dimensional moments Theta.

Every moment here is an integral of |trigonometric polynomial|^2 over a torus,
so orthogonality turns it into a count of solutions of a Diophantine system.
Counts are assembled from frequency tables (value -> number of tuples) built
by meet-in-the-middle; all arithmetic is exact.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from ._util import INT64_MAX, CapacityError, check_budget
from .circle_arcs import SumSpec
from .core_arith import dyadic_dissection, exact_total, smooth_set

SHARDS = 16
ROW_BLOCK = 1 << 22


@dataclass(frozen=True, eq=False)
class FreqTable:
    """Sorted distinct keys with exact multiplicities."""

    keys: np.ndarray
    counts: np.ndarray

    def __len__(self):
        return len(self.keys)

    def total(self) -> int:
        return exact_total(self.counts)

    def lookup(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=np.int64)
        pos = np.searchsorted(self.keys, values)
        pos = np.minimum(pos, max(len(self.keys) - 1, 0))
        if len(self.keys) == 0:
            return np.zeros(values.shape, dtype=np.int64)
        hit = self.keys[pos] == values
        return np.where(hit, self.counts[pos], 0)

    def get(self, v: int) -> int:
        return int(self.lookup([v])[0])

    def as_dict(self) -> dict[int, int]:
        return {int(k): int(c) for k, c in zip(self.keys, self.counts)}

    def sum_of_squares(self) -> int:
        c = self.counts
        if c.dtype != object and len(c) and int(c.max()) * self.total() <= INT64_MAX:
            return int(np.dot(c, c))
        return sum(int(x) * int(x) for x in c)


def table_from_values(values) -> FreqTable:
    keys, counts = np.unique(np.asarray(values, dtype=np.int64), return_counts=True)
    return FreqTable(keys, counts.astype(np.int64))


def _multiplier(seed: int) -> np.uint64:
    rng = np.random.default_rng(seed)
    return np.uint64(int(rng.integers(1, 2**62)) * 2 + 1)


def _reduce(keys: np.ndarray, counts: np.ndarray, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Aggregate duplicate keys. Keys are sharded by a seeded multiplicative hash and
    each shard is counted on its own; any seed must give the same table."""
    if len(keys) == 0:
        return keys, counts
    with np.errstate(over="ignore"):
        shard = ((keys.view(np.uint64) * _multiplier(seed)) >> np.uint64(60)) % np.uint64(SHARDS)
    out_k, out_c = [], []
    for sh in range(SHARDS):
        sel = shard == sh
        if not sel.any():
            continue
        u, inv = np.unique(keys[sel], return_inverse=True)
        agg = np.zeros(len(u), dtype=np.int64)
        np.add.at(agg, inv, counts[sel])
        out_k.append(u)
        out_c.append(agg)
    k = np.concatenate(out_k)
    c = np.concatenate(out_c)
    order = np.argsort(k, kind="stable")
    return k[order], c[order]


def combine(a: FreqTable, b: FreqTable, sign: int = 1, seed: int = 0, workers: int = 1, budget=None) -> FreqTable:
    """Table of u + sign*v over pairs (u from a, v from b), multiplicities multiplied."""
    if len(a) == 0 or len(b) == 0:
        return FreqTable(np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))
    if a.total() * b.total() > INT64_MAX:
        raise CapacityError("frequency table total exceeds 64-bit exact range")
    bk = b.keys if sign > 0 else -b.keys[::-1]
    bc = b.counts if sign > 0 else b.counts[::-1]
    lo = int(a.keys[0]) + int(bk[0])
    hi = int(a.keys[-1]) + int(bk[-1])
    span = hi - lo + 1
    pairs = len(a) * len(b)
    dense = span <= max(4 * pairs, 1 << 20)
    if dense:
        check_budget(8 * span, budget, "dense frequency table")
    else:
        check_budget(48 * pairs, budget, "sparse frequency table")
    rows = max(1, ROW_BLOCK // len(b))
    starts = list(range(0, len(a), rows))
    np.random.default_rng(seed).shuffle(starts)

    def block(i):
        ka = a.keys[i : i + rows, None] + bk[None, :]
        ca = a.counts[i : i + rows, None] * bc[None, :]
        return _reduce(ka.ravel(), ca.ravel(), seed)

    acc_dense = np.zeros(span, dtype=np.int64) if dense else None
    parts = []
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        for j in range(0, len(starts), max(1, workers)):
            for k, c in pool.map(block, starts[j : j + max(1, workers)]):
                if dense:
                    acc_dense[k - lo] += c
                else:
                    parts.append((k, c))
    if dense:
        nz = np.flatnonzero(acc_dense)
        return FreqTable(nz.astype(np.int64) + lo, acc_dense[nz])
    k, c = _reduce(np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]), seed)
    return FreqTable(k, c)


def power_sum_table(spec: SumSpec, t: int, seed: int = 0, workers: int = 1, budget=None) -> FreqTable:
    """Distribution of x_1^k + ... + x_t^k over ordered t-tuples from the index set."""
    if t < 1:
        raise ValueError("t must be >= 1")
    base = table_from_values(spec.powers)
    if t == 1:
        return base
    half = power_sum_table(spec, t // 2, seed, workers, budget)
    rest = half if t % 2 == 0 else power_sum_table(spec, t - t // 2, seed, workers, budget)
    return combine(half, rest, 1, seed, workers, budget)


@dataclass(frozen=True)
class MomentSpec:
    """The integral over [0,1) of prod_i |sum_i(alpha)|^(exponent_i)."""

    factors: tuple[tuple[SumSpec, int], ...]

    def __post_init__(self):
        if not self.factors:
            raise ValueError("empty moment")
        for _, e in self.factors:
            if e <= 0 or e % 2:
                raise ValueError("exponents must be even and positive")
        if len({spec.k for spec, _ in self.factors}) != 1:
            raise ValueError("all factors must share the power k")

    @classmethod
    def single(cls, spec: SumSpec, exponent: int) -> "MomentSpec":
        return cls(((spec, exponent),))

    @property
    def half_degree(self) -> int:
        return sum(e // 2 for _, e in self.factors)


def even_moment_exact(spec: MomentSpec, seed: int = 0, workers: int = 1, budget=None) -> int:
    """Number of solutions of (positive-side power sum) = (negative-side power sum)."""
    table = None
    for s, e in spec.factors:
        part = power_sum_table(s, e // 2, seed, workers, budget)
        table = part if table is None else combine(table, part, 1, seed, workers, budget)
    return table.sum_of_squares()


def even_moment_quadrature(spec: MomentSpec, nodes: int = 10**6) -> float:
    """Mean of the integrand over nodes j/M; exact (up to rounding) whenever
    M exceeds the largest frequency present."""
    integrand = np.ones(nodes)
    for s, e in spec.factors:
        hist = np.bincount(np.asarray(spec_powers_mod(s, nodes)), minlength=nodes).astype(float)
        vals = nodes * np.fft.ifft(hist)
        integrand *= np.abs(vals) ** e
    return float(math.fsum(integrand) / nodes)


def spec_powers_mod(spec: SumSpec, m: int) -> np.ndarray:
    p = spec.powers
    if p.dtype == object:
        return np.array([int(v) % m for v in p], dtype=np.int64)
    return p % m


@dataclass(frozen=True)
class BenchmarkConstants:
    tau: float
    xi: float
    referenceExponents: dict = field(default_factory=dict)

    @classmethod
    def compute(cls) -> "BenchmarkConstants":
        with mpmath.workdps(40):
            tau = (213 - 4 * mpmath.sqrt(2833)) / 164
            xi = mpmath.mpf(1) / 4 - tau
            refs = {
                "smooth_sixth_moment": float(mpmath.mpf(13) / 4 - tau),
                "theta_twelfth_moment": float(mpmath.mpf(49) / 8 - 3 * tau / 2),
                "mixed_g2_h4": float(3 + xi),
                "hua_cubic_eighth": 5.0,
                "cube_E_third_moment": float(mpmath.mpf(35) / 12),
                "hooley_pointwise": float(mpmath.mpf(11) / 6),
                "weyl_minor_arc_cubic": 0.75,
            }
            return cls(float(tau), float(xi), refs)

    def to_dict(self) -> dict:
        return {"tau": self.tau, "xi": self.xi, "referenceExponents": dict(sorted(self.referenceExponents.items()))}


CONSTANTS = BenchmarkConstants.compute()


@dataclass(frozen=True)
class LadderRow:
    P: int
    R: float | None
    count: int

    @property
    def log2count(self) -> float:
        return math.log2(self.count)


@dataclass
class HuaLadder:
    family: str
    k: int
    exponent: int
    rows: list[LadderRow]
    slope: float
    intercept: float
    residuals: list[float]
    referenceExponent: float | None
    referenceLabel: str | None


def _ladder_reference(family: str, k: int, exponent: int):
    if family == "full" and exponent == 2**k:
        return float(2**k - k), "2^k - k (Hua)"
    if family == "smooth" and exponent == 6:
        return CONSTANTS.referenceExponents["smooth_sixth_moment"], "13/4 - tau"
    return None, None


def hua_ladder(
    family: str,
    k: int,
    exponent: int,
    P_values,
    R=None,
    R_exponent: float | None = None,
    seed: int = 0,
    workers: int = 1,
    budget=None,
) -> HuaLadder:
    """Exact moments along a ladder of P and the least-squares slope of log2 count on log2 P."""
    from .exceptional_audit import slope_fit

    P_values = list(P_values)
    if len(P_values) < 4:
        raise ValueError("a ladder needs at least 4 values of P")
    rows = []
    for P in P_values:
        r = None
        if family in ("smooth", "block"):
            r = R if R is not None else float(P) ** R_exponent
        spec = SumSpec(family, P=P, k=k, R=r, Q=P if family == "block" else None)
        rows.append(LadderRow(P, r, even_moment_exact(MomentSpec.single(spec, exponent), seed, workers, budget)))
    fit = slope_fit([(row.P, row.count) for row in rows])
    ref, label = _ladder_reference(family, k, exponent)
    return HuaLadder(family, k, exponent, rows, fit.slope, fit.intercept, fit.residuals, ref, label)


@dataclass(frozen=True)
class LinearFormSystem:
    """Two integer linear forms c.nu and d.nu in three unknowns, plus the primitive kernel vector."""

    c: tuple[int, int, int]
    d: tuple[int, int, int]
    kernelVector: tuple[int, int, int] = field(init=False)

    def __post_init__(self):
        c, d = tuple(int(x) for x in self.c), tuple(int(x) for x in self.d)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)
        if len(c) != 3 or len(d) != 3:
            raise ValueError("c and d must have three entries")
        if self.minors_product() == 0:
            raise ValueError(f"degenerate system c={c}, d={d}")
        m = (c[1] * d[2] - c[2] * d[1], c[2] * d[0] - c[0] * d[2], c[0] * d[1] - c[1] * d[0])
        g = math.gcd(*m)
        m = tuple(x // g for x in m)
        if m[0] < 0:
            m = tuple(-x for x in m)
        object.__setattr__(self, "kernelVector", m)

    def minors_product(self) -> int:
        c, d = self.c, self.d
        return (c[0] * d[1] - c[1] * d[0]) * (c[0] * d[2] - c[2] * d[0]) * (c[1] * d[2] - c[2] * d[1])


@dataclass(frozen=True, eq=False)
class DifferenceTable:
    """R(nu) = #{nu = x^3 - x'^3 + y^3 - y'^3 : x, x' dyadic in (P/2, P]; y, y' in A(P, R)}."""

    P: int
    R: float
    table: FreqTable

    def __getitem__(self, nu: int) -> int:
        return self.table.get(nu)


def _difference_of(spec: SumSpec, seed, workers, budget) -> FreqTable:
    base = table_from_values(spec.powers)
    return combine(base, base, -1, seed, workers, budget)


def difference_table(P: int, R, subset=None, seed: int = 0, workers: int = 1, budget=None) -> DifferenceTable:
    g = SumSpec("dyadic", P=P, subset=subset)
    h = SumSpec("smooth", P=P, R=R)
    check_budget(16 * g.size**2 * h.size**2, budget, "difference table")
    dg = _difference_of(g, seed, workers, budget)
    dh = _difference_of(h, seed, workers, budget)
    return DifferenceTable(P, float(R), combine(dg, dh, 1, seed, workers, budget))


def _triple_products(r1, r2, r3) -> int:
    r1, r2, r3 = (np.asarray(r, dtype=np.int64) for r in (r1, r2, r3))
    if not len(r1):
        return 0
    top = max(int(r1.max()), int(r2.max()), int(r3.max()), 1)
    if top**3 * len(r1) <= INT64_MAX:
        return int((r1 * r2 * r3).sum())
    return sum(int(a) * int(b) * int(c) for a, b, c in zip(r1, r2, r3) if a and b and c)


def cramer_sum(table: FreqTable, system: LinearFormSystem) -> int:
    """Sum of R(nu1) R(nu2) R(nu3) over integer solutions of c.nu = d.nu = 0.

    Runs over nu1 in the support and solves the 2x2 system for (nu2, nu3)
    exactly, without using the kernel vector.
    """
    (c1, c2, c3), (d1, d2, d3) = system.c, system.d
    det = c2 * d3 - c3 * d2
    nu1 = table.keys
    num2 = -nu1 * (c1 * d3 - c3 * d1)
    num3 = nu1 * (c1 * d2 - c2 * d1)
    ok = (num2 % det == 0) & (num3 % det == 0)
    nu1, num2, num3 = nu1[ok], num2[ok] // det, num3[ok] // det
    return _triple_products(table.counts[ok], table.lookup(num2), table.lookup(num3))


def bruteforce_sum(table: FreqTable, system: LinearFormSystem) -> int:
    """Same sum by looping over every (nu1, nu2) pair and solving for nu3; small tables only."""
    (c1, c2, c3), (d1, d2, d3) = system.c, system.d
    keys, counts = table.keys, table.counts
    total = 0
    for nu1, r1 in zip(keys.tolist(), counts.tolist()):
        a = c1 * nu1 + c2 * keys
        b = d1 * nu1 + d2 * keys
        if c3 != 0:
            ok = a % c3 == 0
            nu3 = np.where(ok, -a // c3, 0)
            ok &= d3 * nu3 + b == 0
        else:
            ok = b % d3 == 0
            nu3 = np.where(ok, -b // d3, 0)
            ok &= a == 0
        if ok.any():
            total += r1 * sum(int(x) * int(y) for x, y in zip(counts[ok], table.lookup(nu3[ok])))
    return total


def kernel_sum(table: FreqTable, system: LinearFormSystem, bound: int) -> int:
    """Sum over integers t with |m_i t| <= bound of R(m1 t) R(m2 t) R(m3 t)."""
    m = system.kernelVector
    T = bound // max(abs(x) for x in m)
    t = np.arange(-T, T + 1, dtype=np.int64)
    return _triple_products(*(table.lookup(mi * t) for mi in m))


def theta_direct(P: int, R, system: LinearFormSystem, subset=None, table: DifferenceTable | None = None, **kw) -> int:
    table = table or difference_table(P, R, subset, **kw)
    return cramer_sum(table.table, system)


def theta_via_kernel(P: int, R, system: LinearFormSystem, subset=None, table: DifferenceTable | None = None, **kw) -> int:
    table = table or difference_table(P, R, subset, **kw)
    return kernel_sum(table.table, system, 2 * P**3)


def smooth_fourfold_table(P: int, R, seed: int = 0, workers: int = 1, budget=None) -> FreqTable:
    """Distribution of y1^3 + y2^3 - y3^3 - y4^3 over A(P, R)^4."""
    spec = SumSpec("smooth", P=P, R=R)
    check_budget(16 * spec.size**4, budget, "four-fold smooth table")
    two = power_sum_table(spec, 2, seed, workers, budget)
    return combine(two, two, -1, seed, workers, budget)


def twelfth_moment_smooth(P: int, R, system: LinearFormSystem, seed: int = 0, workers: int = 1, budget=None) -> int:
    """The double integral of |h(l1) h(l2) h(l3)|^4 as an exact solution count."""
    table = smooth_fourfold_table(P, R, seed, workers, budget)
    return kernel_sum(table, system, 2 * P**3)


def block_recount_table(P: int, R, seed: int = 0, workers: int = 1, budget=None) -> FreqTable:
    """The four-fold smooth table rebuilt from the dyadic pieces of A(P, R):
    pairwise sums over every ordered pair of pieces, merged, then differenced."""
    blocks, rest = dyadic_dissection(P, R)
    pieces = [table_from_values(b.members.astype(np.int64) ** 3) for b in blocks if len(b)]
    if len(rest):
        pieces.append(table_from_values(rest.members.astype(np.int64) ** 3))
    merged: dict[int, int] = {}
    for u in pieces:
        for v in pieces:
            uv = combine(u, v, 1, seed, workers, budget)
            for key, cnt in zip(uv.keys.tolist(), uv.counts.tolist()):
                merged[key] = merged.get(key, 0) + cnt
    keys = np.array(sorted(merged), dtype=np.int64)
    two = FreqTable(keys, np.array([merged[x] for x in keys.tolist()], dtype=np.int64))
    return combine(two, two, -1, seed, workers, budget)


def twelfth_moment_block_recount(P: int, R, system: LinearFormSystem, **kw) -> int:
    return cramer_sum(block_recount_table(P, R, **kw), system)


def smooth_set_size(P: int, R) -> int:
    return len(smooth_set(P, R))
