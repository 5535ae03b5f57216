"""Per-n error terms, E-moments, psi-threshold exceptional counts and slope fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats

from ._util import InsufficientDataError
from .core_arith import RepParams, RepTable, rep_count_all
from .singular_series import MainTermParams, get_tables, main_terms


@dataclass(frozen=True)
class PsiFunction:
    """psi(t) = (log t)^c, t^delta or the constant A (natural log)."""

    kind: str = "logPower"
    param: float = 1.0

    def __post_init__(self):
        if self.kind not in ("logPower", "smallPower", "constant"):
            raise ValueError(f"unknown psi kind {self.kind!r}")
        if self.param < 0:
            raise ValueError("psi parameter must be nonnegative")

    @classmethod
    def log_power(cls, c: float = 1.0):
        return cls("logPower", c)

    @classmethod
    def small_power(cls, delta: float = 0.01):
        return cls("smallPower", delta)

    @classmethod
    def constant(cls, A: float):
        return cls("constant", A)

    @classmethod
    def parse(cls, text: str) -> "PsiFunction":
        """'log', 'log:2', 'power:0.01', 'const:3'."""
        name, _, arg = text.partition(":")
        if name == "log":
            return cls.log_power(float(arg) if arg else 1.0)
        if name == "power":
            return cls.small_power(float(arg) if arg else 0.01)
        if name == "const":
            return cls.constant(float(arg))
        raise ValueError(f"bad psi value {text!r}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "logPower":
            return np.log(t) ** self.param
        if self.kind == "smallPower":
            return t**self.param
        return np.full(t.shape, float(self.param))

    def label(self) -> str:
        return {"logPower": "log", "smallPower": "power", "constant": "const"}[self.kind] + f":{self.param:g}"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "param": self.param}


@dataclass(frozen=True, eq=False)
class AuditTable:
    """Rows n = 0..N of exact R, truncated series value, its tail estimate, main term and E = R - main."""

    params: RepParams
    seriesQ: int
    R: np.ndarray
    series: np.ndarray
    tail: np.ndarray
    main: np.ndarray
    E: np.ndarray

    @property
    def N(self) -> int:
        return self.params.N

    def row(self, n: int) -> dict:
        return {
            "n": n,
            "R": int(self.R[n]),
            "series": float(self.series[n]),
            "mainTerm": float(self.main[n]),
            "E": float(self.E[n]),
        }


def build_audit(params: RepParams, seriesQ: int = 2000, reps: RepTable | None = None, workers: int = 1) -> AuditTable:
    if reps is None:
        reps = rep_count_all(params, workers)
    elif reps.params != params:
        raise ValueError("representation table does not match the audit parameters")
    ns = np.arange(1, params.N + 1, dtype=np.int64)
    values, tails = get_tables(params.s, params.k, seriesQ).evaluate_many(ns, workers)
    series = np.concatenate([[0.0], values])
    tail = np.concatenate([[0.0], tails])
    main = np.concatenate([[0.0], main_terms(ns, params.s, params.k, values)])
    R = np.asarray(reps.as_ints(), dtype=object) if reps.counts.dtype == object else reps.counts.astype(np.int64)
    E = R.astype(np.float64) - main
    E[0] = 0.0
    return AuditTable(params, seriesQ, R, series, tail, main, E)


def _block(N: int) -> slice:
    return slice(N // 2 + 1, N + 1)


def moment_sum(audit: AuditTable, h: float, N: int | None = None) -> float:
    """sum over N/2 < n <= N of |E(n)|^h."""
    if not h > 0:
        raise ValueError("h must be > 0")
    N = audit.N if N is None else N
    if N > audit.N:
        raise ValueError(f"audit covers n <= {audit.N}, block needs {N}")
    return math.fsum(np.abs(audit.E[_block(N)]) ** h)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    residuals: list[float]
    stderr: float
    confidence: tuple[float, float]
    level: float = 0.95


def slope_fit(points, level: float = 0.95) -> SlopeFit:
    """Ordinary least squares of log2 Z on log2 N, with a t-based confidence interval."""
    pts = [(float(n), float(z)) for n, z in points if z > 0]
    if len(pts) < 3:
        raise InsufficientDataError(f"need at least 3 points with positive value, got {len(pts)}")
    x = np.log2([p[0] for p in pts])
    y = np.log2([p[1] for p in pts])
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    dof = len(x) - 2
    sxx = float(((x - x.mean()) ** 2).sum())
    if dof > 0:
        se = math.sqrt(float((resid**2).sum()) / dof / sxx)
        half = float(stats.t.ppf(0.5 + level / 2, dof)) * se
    else:
        se, half = 0.0, 0.0
    return SlopeFit(float(slope), float(intercept), [float(r) for r in resid], se, (slope - half, slope + half), level)


@dataclass(frozen=True)
class ExponentEntry:
    exponent: Fraction
    psiPower: int
    source: str


@dataclass(frozen=True)
class ExponentRange:
    k: int
    s_lo: int
    s_hi: int
    base: Fraction
    offset: int
    denom: int
    psiPower: int
    source: str

    def at(self, s: int) -> Fraction:
        return self.base - Fraction(s - self.offset, self.denom)


# exponent = base - (s - offset)/denom on s_lo <= s <= s_hi
THEOREM_RANGES = (
    ExponentRange(3, 7, 7, Fraction(1, 3), 7, 1, 4, "Theorem 1.1"),
    ExponentRange(4, 13, 13, Fraction(5, 8), 13, 1, 4, "Theorem 1.2"),
    ExponentRange(4, 14, 14, Fraction(1, 2), 14, 1, 4, "Theorem 1.2"),
    ExponentRange(5, 25, 28, Fraction(4, 5), 24, 20, 4, "Theorem 1.3"),
    ExponentRange(6, 44, 51, Fraction(5, 6), 43, 48, 4, "Theorem 1.4"),
    ExponentRange(7, 85, 100, Fraction(6, 7), 84, 112, 4, "Theorem 1.5"),
    ExponentRange(8, 171, 180, Fraction(7, 8), 168, 192, 4, "Theorem 1.6"),
    ExponentRange(8, 181, 196, Fraction(7, 8), 164, 256, 4, "Theorem 1.6"),
)

# Earlier bounds for comparison only; psi enters squared and some need slower-growing psi.
CONTEXT_RANGES = (
    ExponentRange(3, 4, 7, Fraction(1), 4, 6, 2, "external:classical"),
    ExponentRange(3, 7, 7, Fraction(4, 9), 7, 1, 0, "external:earlier-slim"),
    ExponentRange(4, 15, 15, Fraction(7, 16), 15, 1, 2, "external:earlier-slim"),
    ExponentRange(4, 8, 16, Fraction(1), 8, 16, 2, "external:classical"),
    ExponentRange(5, 29, 29, Fraction(23, 40), 29, 1, 2, "external:earlier-slim"),
    ExponentRange(5, 30, 30, Fraction(11, 20), 30, 1, 2, "external:earlier-slim"),
    ExponentRange(5, 31, 31, Fraction(3, 8), 31, 1, 2, "external:earlier-slim"),
    ExponentRange(5, 16, 32, Fraction(1), 16, 40, 2, "external:classical"),
    ExponentRange(6, 52, 55, Fraction(2, 3), 51, 96, 2, "external:earlier-slim"),
    ExponentRange(6, 28, 31, Fraction(1), 28, 72, 2, "external:heath-brown-boklan"),
    ExponentRange(6, 32, 55, Fraction(1), 27, 96, 2, "external:heath-brown-boklan"),
    ExponentRange(7, 101, 108, Fraction(5, 7), 100, 224, 2, "external:earlier-slim"),
    ExponentRange(7, 109, 111, Fraction(4, 7), 108, 224, 2, "external:earlier-slim"),
    ExponentRange(7, 56, 68, Fraction(1), 56, 168, 2, "external:heath-brown-boklan"),
    ExponentRange(7, 69, 111, Fraction(1), 52, 224, 2, "external:heath-brown-boklan"),
    ExponentRange(8, 197, 212, Fraction(3, 4), 196, 512, 2, "external:earlier-slim"),
    ExponentRange(8, 213, 220, Fraction(5, 8), 212, 512, 2, "external:earlier-slim"),
    ExponentRange(8, 221, 223, Fraction(1, 2), 220, 512, 2, "external:earlier-slim"),
    ExponentRange(8, 112, 148, Fraction(1), 112, 384, 2, "external:heath-brown-boklan"),
    ExponentRange(8, 149, 223, Fraction(1), 100, 512, 2, "external:heath-brown-boklan"),
)


def s0(k: int) -> int:
    return 5 * 2**k // 8 + (k + 1) // 2


def s1(k: int) -> int:
    return 3 * 2**k // 4 + (k + 1) // 2


def l0(k: int) -> int:
    return 17 if k == 8 else 1


def omega(s: int, k: int) -> Fraction:
    """1 - 1/k - (s - s0)/(k 2^(k-3)), valid for s0 + l0 <= s <= s1 when 6 <= k <= 8."""
    return 1 - Fraction(1, k) - Fraction(s - s0(k), k * 2 ** (k - 3))


def classical_exponent(s: int, k: int) -> Fraction:
    """1 - (s 2^(2-k) - 2)/k, the Bessel-inequality bound for 2^(k-1) <= s <= 2^k."""
    return 1 - (Fraction(s * 4, 2**k) - 2) / k


@dataclass(frozen=True)
class TheoremExponentTable:
    entries: dict = field(default_factory=dict)
    context: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)

    @classmethod
    def build(cls) -> "TheoremExponentTable":
        entries, context = {}, {}
        for r in THEOREM_RANGES:
            for s in range(r.s_lo, r.s_hi + 1):
                entries[(s, r.k)] = ExponentEntry(r.at(s), r.psiPower, r.source)
        for r in CONTEXT_RANGES:
            for s in range(r.s_lo, r.s_hi + 1):
                context.setdefault((s, r.k), []).append(ExponentEntry(r.at(s), r.psiPower, r.source))
        thresholds = {k: {"s0": s0(k), "s1": s1(k), "l0": l0(k)} for k in (6, 7, 8)}
        return cls(entries, context, thresholds)

    def rows(self):
        for (s, k), e in sorted(self.entries.items(), key=lambda kv: (kv[0][1], kv[0][0])):
            yield s, k, e


EXPONENTS = TheoremExponentTable.build()


def theorem_exponent(s: int, k: int) -> tuple[Fraction, int] | None:
    """(exponent, psi power) of the proven bound for (s, k), or None when not covered."""
    if not 3 <= k <= 8:
        raise ValueError("k must lie in 3..8")
    e = EXPONENTS.entries.get((s, k))
    return None if e is None else (e.exponent, e.psiPower)


def theorem_source(s: int, k: int) -> str | None:
    e = EXPONENTS.entries.get((s, k))
    return None if e is None else e.source


@dataclass(frozen=True)
class BlockCount:
    N: int
    total: int
    exceptional: int
    low: int
    high: int
    uncertain: int

    @property
    def fraction(self) -> float:
        return self.exceptional / self.total if self.total else 0.0


@dataclass
class ExceptionalReport:
    s: int
    k: int
    N: int
    seriesQ: int
    psi: PsiFunction
    blocks: list[BlockCount]
    thresholdExponent: Fraction
    fit: SlopeFit | None
    fitNote: str | None
    theoremExponent: Fraction | None
    psiPower: int | None
    theoremSource: str | None

    def to_dict(self) -> dict:
        fit = None
        if self.fit is not None:
            fit = {
                "slope": self.fit.slope,
                "intercept": self.fit.intercept,
                "stderr": self.fit.stderr,
                "confidence": list(self.fit.confidence),
                "level": self.fit.level,
                "residuals": self.fit.residuals,
            }
        return {
            "s": self.s,
            "k": self.k,
            "N": self.N,
            "seriesQ": self.seriesQ,
            "psi": self.psi.to_dict(),
            "thresholdExponent": str(self.thresholdExponent),
            "blocks": [
                {
                    "N": b.N,
                    "total": b.total,
                    "exceptional": b.exceptional,
                    "low": b.low,
                    "high": b.high,
                    "uncertain": b.uncertain,
                    "fraction": b.fraction,
                }
                for b in self.blocks
            ],
            "fit": fit,
            "fitNote": self.fitNote,
            "theoremExponent": None if self.theoremExponent is None else str(self.theoremExponent),
            "theoremExponentValue": None if self.theoremExponent is None else float(self.theoremExponent),
            "psiPower": self.psiPower,
            "theoremSource": self.theoremSource,
        }

    def csv_rows(self):
        header = ["blockN", "Z", "Z_low", "Z_high", "total", "threshold_exponent", "fitted_slope", "theorem_exponent"]
        slope = None if self.fit is None else self.fit.slope
        theo = None if self.theoremExponent is None else str(self.theoremExponent)
        rows = [
            [b.N, b.exceptional, b.low, b.high, b.total, str(self.thresholdExponent), slope, theo] for b in self.blocks
        ]
        return header, rows


def default_blocks(N: int, smallest: int = 16) -> list[int]:
    out, b = [], smallest
    while b <= N:
        out.append(b)
        b *= 2
    if not out or out[-1] != N:
        out.append(N)
    return out


def classify_rows(audit: AuditTable, psi: PsiFunction, N: int) -> tuple[np.ndarray, np.ndarray]:
    """For N/2 < n <= N: (violates with the stored E, decision could flip within the series tail)."""
    sl = _block(N)
    n = np.arange(sl.start, sl.stop, dtype=float)
    s, k = audit.params.s, audit.params.k
    scale = n ** (s / k - 1)
    with np.errstate(divide="ignore"):
        threshold = scale / psi(n)
    absE = np.abs(audit.E[sl])
    # the series value is known to within its tail estimate; the main term inherits that error
    slack = MainTermParams(s, k).gammaFactor * audit.tail[sl] * scale
    point = absE > threshold
    uncertain = np.isfinite(threshold) & ~(np.abs(absE - threshold) > slack)
    return point, uncertain


def violation_counts(audit: AuditTable, psi: PsiFunction, N: int) -> BlockCount:
    point, uncertain = classify_rows(audit, psi, N)
    low = int((point & ~uncertain).sum())
    high = int((point | uncertain).sum())
    return BlockCount(N, len(point), int(point.sum()), low, high, int(uncertain.sum()))


def exceptional_scan(audit: AuditTable, psi: PsiFunction, blocks=None) -> ExceptionalReport:
    s, k = audit.params.s, audit.params.k
    blocks = default_blocks(audit.N) if blocks is None else list(blocks)
    counts = [violation_counts(audit, psi, N) for N in blocks]
    fit, note = None, None
    try:
        fit = slope_fit([(b.N, b.exceptional) for b in counts])
    except InsufficientDataError as exc:
        note = str(exc)
    theo = theorem_exponent(s, k) if 3 <= k <= 8 else None
    return ExceptionalReport(
        s,
        k,
        audit.N,
        audit.seriesQ,
        psi,
        counts,
        Fraction(s, k) - 1,
        fit,
        note,
        None if theo is None else theo[0],
        None if theo is None else theo[1],
        theorem_source(s, k) if theo else None,
    )
