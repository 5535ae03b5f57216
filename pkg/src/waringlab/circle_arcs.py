"""Weyl sums over the four index families, major/minor arc tests, major-arc quadrature."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from ._util import BudgetError, INT64_MAX, as_fraction, iroot
from .core_arith import block_set, kth_power_table, smooth_set

FAMILIES = ("full", "dyadic", "smooth", "block")
GUARD = 2.0**-40


@dataclass(frozen=True, eq=False)
class SumSpec:
    """Index set of a Weyl sum sum_x e(alpha x^k).

    full: 1..P; dyadic: (P/2, P] (or a caller subset of it); smooth: A(P, R);
    block: B(Q, R).
    """

    family: str
    P: int = 0
    k: int = 3
    R: float | None = None
    Q: Fraction | int | None = None
    subset: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.family != "full" and self.k != 3:
            raise ValueError(f"family {self.family} is defined for cubes only")
        if self.family in ("smooth", "block") and self.R is None:
            raise ValueError(f"family {self.family} needs R")
        if self.family == "block" and self.Q is None:
            raise ValueError("block family needs Q")

    @cached_property
    def indices(self) -> np.ndarray:
        if self.family == "full":
            return np.arange(1, self.P + 1, dtype=np.int64)
        if self.family == "dyadic":
            full = np.arange(self.P // 2 + 1, self.P + 1, dtype=np.int64)
            if self.subset is None:
                return full
            sub = np.unique(np.asarray(self.subset, dtype=np.int64))
            if sub.size and (2 * sub.min() < self.P or sub.max() > self.P):
                raise ValueError("subset must lie in [P/2, P]")
            return sub
        if self.family == "smooth":
            return smooth_set(self.P, self.R).members.astype(np.int64)
        return block_set(self.Q, self.R).members.astype(np.int64)

    @cached_property
    def powers(self) -> np.ndarray:
        x = self.indices
        if x.size == 0:
            return x
        if int(x[-1]) ** self.k <= INT64_MAX:
            return x**self.k
        return np.array([int(v) ** self.k for v in x], dtype=object)

    @property
    def size(self) -> int:
        return int(self.indices.size)


def _phases_rational(powers, a: int, q: int) -> np.ndarray:
    """(a x^k mod q)/q exactly reduced, returned as floats in [0, 1)."""
    if powers.dtype != object and q < 2**31:
        red = (powers % q) * (a % q) % q
        return red / q
    return np.array([(a * int(v)) % q / q for v in powers], dtype=float)


def _phases_float(powers, alpha: float) -> np.ndarray:
    """frac(alpha x^k) computed exactly from the binary expansion of alpha."""
    fr = Fraction(alpha)
    m, e = fr.numerator, fr.denominator.bit_length() - 1
    if e <= 64 and powers.dtype != object and int(powers.max(initial=0)) < 2**63:
        mask = np.uint64((1 << e) - 1) if e < 64 else np.uint64(2**64 - 1)
        red = powers.astype(np.uint64) & mask
        with np.errstate(over="ignore"):
            prod = (red * np.uint64(m % (1 << e) if e else 0)) & mask
        return prod.astype(np.float64) / float(2**e)
    return _phases_rational(powers, m, 1 << e)


def weyl_sum(spec: SumSpec, alpha) -> complex:
    """sum over the SumSpec index set of e(alpha x^k); alpha a float or Fraction."""
    if spec.size == 0:
        return 0j
    if isinstance(alpha, Fraction):
        ph = _phases_rational(spec.powers, alpha.numerator, alpha.denominator)
    else:
        alpha = float(alpha)
        ph = _phases_float(spec.powers, alpha - math.floor(alpha))
    z = np.exp(2j * np.pi * ph)
    return complex(math.fsum(z.real), math.fsum(z.imag))


def weyl_sum_grid(spec: SumSpec, a: int, q: int, betas: np.ndarray) -> np.ndarray:
    """Weyl sums at alpha = a/q + beta for small offsets beta (vectorised)."""
    ph0 = _phases_rational(spec.powers, a, q)
    base = np.exp(2j * np.pi * ph0)
    pw = spec.powers.astype(np.float64)
    out = np.empty(len(betas), dtype=complex)
    step = max(1, (1 << 22) // max(1, spec.size))
    for i in range(0, len(betas), step):
        b = betas[i : i + step]
        out[i : i + step] = np.exp(2j * np.pi * np.outer(b, pw)) @ base
    return out


@dataclass(frozen=True)
class ArcSystem:
    """Major arcs written uniformly as: some q <= qmax with ||q alpha|| <= delta.

    waring(k, N): qmax = P_k/(2k), delta = P_k/(2kN) with P_k = floor(N^(1/k)).
    cubic5(P):    qmax = P^(3/4), delta = P^(-9/4).
    """

    kind: str
    k: int = 3
    N: int = 0
    P: Fraction = Fraction(0)
    Pk: int = field(default=0, compare=False)

    @classmethod
    def waring(cls, k: int, N: int) -> "ArcSystem":
        return cls("waring", k=k, N=N, Pk=iroot(N, k))

    @classmethod
    def cubic5(cls, P) -> "ArcSystem":
        return cls("cubic5", k=3, P=as_fraction(P))

    def q_ok(self, q: int) -> bool:
        if self.kind == "waring":
            return 2 * self.k * q <= self.Pk
        return Fraction(q) ** 4 <= self.P**3

    def dist_ok(self, d: Fraction) -> bool:
        if self.kind == "waring":
            return 2 * self.k * self.N * d <= self.Pk
        return d**4 * self.P**9 <= 1

    @property
    def qmax(self) -> int:
        if self.kind == "waring":
            return self.Pk // (2 * self.k)
        q = int(float(self.P) ** 0.75) + 2
        while q > 0 and not self.q_ok(q):
            q -= 1
        return q

    @property
    def delta(self) -> float:
        if self.kind == "waring":
            return self.Pk / (2 * self.k * self.N)
        return float(self.P) ** -2.25

    def measure(self) -> float:
        """Total length of the major arcs when they do not overlap."""
        return sum(_phi(q) * 2 * self.delta / q for q in range(1, self.qmax + 1))


def _phi(q: int) -> int:
    return sum(1 for a in range(1, q + 1) if math.gcd(a, q) == 1)


@dataclass(frozen=True)
class ArcDecision:
    isMajor: bool
    witness: tuple[int, int] | None
    ambiguous: bool = False


def convergent_denominators(alpha: Fraction):
    """Yield (p_j, q_j) for the continued-fraction convergents of alpha."""
    p0, q0, p1, q1 = 0, 1, 1, 0
    x = alpha
    while True:
        a = math.floor(x)
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        yield p1, q1
        frac = x - a
        if frac == 0:
            return
        x = 1 / frac


def arc_membership(system: ArcSystem, alpha) -> ArcDecision:
    """Major/minor classification with the smallest-q witness.

    Some q <= qmax has ||q alpha|| <= delta iff a convergent denominator does,
    so only convergents are tested. Fractions are decided exactly; a float is
    decided exactly as the dyadic rational it is, and flagged ambiguous when
    a perturbation of 2^-40 in alpha could flip a tested inequality.
    """
    is_float = not isinstance(alpha, Fraction)
    a = as_fraction(alpha)
    if not 0 <= a < 1:
        raise ValueError("alpha must lie in [0, 1)")
    ambiguous = False
    delta = system.delta
    for _, q in convergent_denominators(a):
        if not system.q_ok(q):
            break
        near = round(q * a)
        d = abs(q * a - near)
        if is_float and abs(float(d) - delta) <= q * GUARD:
            ambiguous = True
        if system.dist_ok(d):
            g = math.gcd(near, q)
            return ArcDecision(True, (q // g, near // g), ambiguous)
    return ArcDecision(False, None, ambiguous)


def major_mask(system: ArcSystem, alphas: np.ndarray) -> np.ndarray:
    """Brute-force membership over every q <= qmax (float arithmetic)."""
    alphas = np.asarray(alphas, dtype=float)
    hit = np.zeros(alphas.shape, dtype=bool)
    for q in range(1, system.qmax + 1):
        x = q * alphas
        hit |= np.abs(x - np.rint(x)) <= system.delta
    return hit


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    error: float
    nodes: int


def _arc_intervals(system: ArcSystem):
    """Arcs (a, q, lo, hi) around a/q on the circle, with overlaps merged into the first arc."""
    arcs = []
    for q in range(1, system.qmax + 1):
        w = system.delta / q
        for a in range(q):
            if math.gcd(a, q) == 1:
                arcs.append((Fraction(a, q), w))
    arcs.sort()
    merged = []
    for c, w in arcs:
        if merged:
            c0, lo, hi = merged[-1]
            if float(c - c0) - w <= hi:
                merged[-1] = (c0, lo, max(hi, float(c - c0) + w))
                continue
        merged.append((c, -w, w))
    if len(merged) > 1:
        c0, lo, hi = merged[0]
        cl, llo, lhi = merged[-1]
        if float(cl - 1 - c0) + lhi >= lo:
            merged[0] = (cl - 1, llo, max(lhi, float(c0 - cl + 1) + hi))
            merged.pop()
    return merged


def major_arc_quadrature(
    n: int,
    s: int,
    k: int,
    P: int,
    mesh: float = 0.1,
    system: ArcSystem | None = None,
    budget: int = 2 * 10**8,
) -> QuadratureResult:
    """Trapezoidal approximation of the integral of f(alpha)^s e(-n alpha) over the major arcs.

    The step keeps the phase of the integrand moving by at most ``mesh``
    radians: h = mesh / (2 pi (s P^k + n)). The value is the run at mesh/2;
    the error is half the change from the mesh run, floored at rounding level.
    """
    if system is None:
        system = ArcSystem.cubic5(P) if k == 3 else ArcSystem.waring(k, P**k)
    spec = SumSpec("full", P=P, k=k)
    arcs = _arc_intervals(system)
    h = mesh / (2 * math.pi * (s * P**k + n))
    cost = sum(int(math.ceil((hi - lo) / h)) + 1 for _, lo, hi in arcs) * 3 * P
    if cost > budget:
        raise BudgetError(f"quadrature needs about {cost} phase evaluations (budget {budget})", cost)

    def run(step):
        total, absmass, nodes = 0j, 0.0, 0
        for c, lo, hi in arcs:
            m = max(2, int(math.ceil((hi - lo) / step)))
            betas = lo + (hi - lo) * np.arange(m + 1) / m
            f = weyl_sum_grid(spec, c.numerator, c.denominator, betas)
            a, q = c.numerator, c.denominator
            shift = np.exp(2j * np.pi * (((-n * a) % q) / q)) * np.exp(-2j * np.pi * n * betas)
            vals = f**s * shift
            w = np.full(m + 1, (hi - lo) / m)
            w[[0, -1]] *= 0.5
            total += complex(np.dot(w, vals))
            absmass += float(np.dot(w, np.abs(vals)))
            nodes += m + 1
        return total, absmass, nodes

    coarse, _, _ = run(h)
    fine, absmass, nodes = run(h / 2)
    err = max(abs(fine - coarse) / 2, 1e-12 * absmass)
    return QuadratureResult(fine, err, nodes)
