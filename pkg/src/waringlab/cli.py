"""Command-line entry point.

Exit status: 0 success, 1 usage or input error, 2 budget/capacity rejection.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from ._util import BudgetError, CapacityError, DEFAULT_MEMORY_BUDGET
from .circle_arcs import ArcSystem, arc_membership
from .core_arith import RepParams, rep_count_all
from .exceptional_audit import EXPONENTS, PsiFunction, build_audit, exceptional_scan, theorem_exponent
from .moments import (
    CONSTANTS,
    LinearFormSystem,
    MomentSpec,
    difference_table,
    even_moment_exact,
    hua_ladder,
    theta_direct,
    theta_via_kernel,
    twelfth_moment_smooth,
)
from .circle_arcs import SumSpec
from .reports import (
    audit_csv,
    emit_report,
    fmt_float,
    load_reps,
    read_audit_binary,
    write_audit_binary,
    write_manifest,
    write_rep_binary,
    write_rep_csv,
    _write_bytes,
)
from .singular_series import get_tables, main_terms, singular_series_truncated

log = logging.getLogger("waringlab")

# flags that do not change artifact bytes
NON_PARAMS = {"command", "out", "workers", "func", "audit_in", "reps_in"}


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.stderr.write(f"remedy: run '{self.prog} --help' to see the accepted flags and their formats\n")
        raise SystemExit(1)


def _triple(text: str) -> tuple[int, int, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated integers, got {text!r}")
    return tuple(int(p) for p in parts)


def _int_list(text: str) -> list[int]:
    return [int(p) for p in text.split(",") if p]


def _real(text: str) -> float:
    return float(Fraction(text)) if "/" in text else float(text)


def _alpha(text: str):
    return Fraction(text) if "/" in text else float(text)


def _out_path(path: str | None) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    base = os.environ.get("WARINGLAB_OUTDIR")
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def _fmt_for(path: Path, explicit: str | None, default: str = "csv") -> str:
    if explicit:
        return explicit
    suffix = path.suffix.lower().lstrip(".")
    return suffix if suffix in ("csv", "json", "bin") else default


def _params(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in NON_PARAMS and v is not None}


def _finish(args, out: Path | None, inputs=()) -> None:
    if out is not None:
        write_manifest(out, args.command, _params(args), inputs)
        log.info("wrote %s", out)


def cmd_reps(args):
    params = RepParams(args.s, args.k, args.N)
    log.info("counting representations s=%d k=%d N=%d", args.s, args.k, args.N)
    table = rep_count_all(params, args.workers)
    out = _out_path(args.out)
    if out is None:
        for n in range(1, args.N + 1):
            print(f"{n},{int(table[n])}")
        return
    fmt = _fmt_for(out, args.format)
    if fmt == "bin":
        write_rep_binary(table, out)
    elif fmt == "csv":
        write_rep_csv(table, out)
    else:
        raise UsageError("--format for reps must be csv or bin")
    _finish(args, out)


def cmd_series(args):
    if args.n is not None:
        ev = singular_series_truncated(args.n, args.s, args.k, args.Q)
        from .singular_series import main_term

        report = ev.to_dict(max_terms=args.max_terms)
        report["mainTerm"] = main_term(args.n, args.s, args.k, ev)
        out = _out_path(args.out)
        if out is None:
            print(f"series {fmt_float(ev.value)} tail {fmt_float(ev.tailEstimate)} main {fmt_float(report['mainTerm'])}")
            for w in ev.warnings:
                print(f"warning {w}")
            return
        emit_report(report, _fmt_for(out, args.format, "json"), out)
        _finish(args, out)
        return
    if args.range is None:
        raise UsageError("give --n or --range A:B")
    lo, _, hi = args.range.partition(":")
    ns = np.arange(int(lo), int(hi) + 1, dtype=np.int64)
    if len(ns) == 0 or ns[0] < 1:
        raise UsageError("--range needs 1 <= A <= B")
    vals, tails = get_tables(args.s, args.k, args.Q).evaluate_many(ns, args.workers)
    mains = main_terms(ns, args.s, args.k, vals)
    header = ["n", "series", "tail", "mainTerm"]
    rows = [[int(n), v, t, m] for n, v, t, m in zip(ns, vals, tails, mains)]
    out = _out_path(args.out)
    if out is None:
        from .reports import csv_text

        sys.stdout.write(csv_text(header, rows))
        return
    emit_report((header, rows), "csv", out)
    _finish(args, out)


def _audit_from_args(args):
    if getattr(args, "audit_in", None):
        return read_audit_binary(args.audit_in), [args.audit_in]
    if args.s is None or args.k is None:
        raise UsageError("give --s and --k (and --N or --reps)")
    inputs = []
    reps = None
    if getattr(args, "reps_in", None):
        reps = load_reps(args.reps_in, args.s, args.k)
        inputs.append(args.reps_in)
        if args.N is not None and args.N != reps.params.N:
            raise UsageError(f"--N {args.N} disagrees with the table in {args.reps_in} (N={reps.params.N})")
        params = reps.params
    elif args.N is None:
        raise UsageError("give --N or --reps")
    else:
        params = RepParams(args.s, args.k, args.N)
    log.info("building audit s=%d k=%d N=%d Q=%d", params.s, params.k, params.N, args.Q)
    return build_audit(params, args.Q, reps, args.workers), inputs


def cmd_audit(args):
    audit, inputs = _audit_from_args(args)
    out = _out_path(args.out)
    if out is None:
        sys.stdout.write(audit_csv(audit))
        return
    fmt = _fmt_for(out, args.format, "bin")
    if fmt == "bin":
        write_audit_binary(audit, out)
    elif fmt == "csv":
        _write_bytes(out, audit_csv(audit).encode())
    else:
        raise UsageError("--format for audit must be csv or bin")
    _finish(args, out, inputs)


def cmd_scan(args):
    audit, inputs = _audit_from_args(args)
    psi = PsiFunction.parse(args.psi)
    report = exceptional_scan(audit, psi)
    out = _out_path(args.out)
    if out is None:
        for b in report.blocks:
            print(f"N={b.N} Z={b.exceptional} [{b.low},{b.high}] of {b.total}")
        if report.fit is not None:
            lo, hi = report.fit.confidence
            print(f"slope {fmt_float(report.fit.slope)} CI [{fmt_float(lo)}, {fmt_float(hi)}]")
        else:
            print(f"slope unavailable: {report.fitNote}")
        if report.theoremExponent is not None:
            print(f"theorem exponent {report.theoremExponent} psi^{report.psiPower} ({report.theoremSource})")
        return
    emit_report(report, _fmt_for(out, args.format, "json"), out)
    _finish(args, out, inputs)


def cmd_moments(args):
    Ps = _int_list(args.P)
    if args.R is not None and args.R_exp is not None:
        raise UsageError("give at most one of --R and --R-exp")
    if len(Ps) >= 4:
        ladder = hua_ladder(
            args.family, args.k, args.exponent, Ps, R=args.R, R_exponent=args.R_exp,
            seed=args.seed, workers=args.workers, budget=args.budget,
        )
        rows = [[args.family, args.exponent, r.P, r.R, r.count, r.log2count] for r in ladder.rows]
        summary = {
            "family": args.family,
            "k": args.k,
            "degree": args.exponent,
            "rows": [{"P": r.P, "R": r.R, "count": str(r.count), "log2count": r.log2count} for r in ladder.rows],
            "fittedSlope": ladder.slope,
            "intercept": ladder.intercept,
            "residuals": ladder.residuals,
            "referenceExponent": ladder.referenceExponent,
            "referenceLabel": ladder.referenceLabel,
            "constants": CONSTANTS.to_dict(),
        }
    else:
        if args.family in ("smooth", "block") and args.R is None and args.R_exp is None:
            raise UsageError(f"family {args.family} needs --R or --R-exp")
        rows, summary = [], {"family": args.family, "k": args.k, "degree": args.exponent, "rows": []}
        for P in Ps:
            R = args.R if args.R is not None else (P**args.R_exp if args.R_exp is not None else None)
            spec = SumSpec(args.family, P=P, k=args.k, R=R, Q=P if args.family == "block" else None)
            count = even_moment_exact(MomentSpec.single(spec, args.exponent), args.seed, args.workers, args.budget)
            rows.append([args.family, args.exponent, P, R, count, float(np.log2(count)) if count else None])
            summary["rows"].append({"P": P, "R": R, "count": str(count)})
        summary["constants"] = CONSTANTS.to_dict()
    header = ["family", "degree", "P", "R", "count", "log2count"]
    out = _out_path(args.out)
    if out is None:
        from .reports import csv_text

        sys.stdout.write(csv_text(header, rows))
        if "fittedSlope" in summary:
            ref = summary["referenceExponent"]
            print(f"slope {fmt_float(summary['fittedSlope'])}", end="")
            print(f" reference {summary['referenceLabel']} = {fmt_float(ref)}" if ref is not None else "")
        return
    fmt = _fmt_for(out, args.format)
    emit_report(summary if fmt == "json" else (header, rows), fmt, out)
    _finish(args, out)


def cmd_theta(args):
    try:
        system = LinearFormSystem(args.c, args.d)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    subset = tuple(_int_list(args.subset)) if args.subset else None
    R = args.R
    table = difference_table(args.P, R, subset, seed=args.seed, workers=args.workers, budget=args.budget)
    direct = theta_direct(args.P, R, system, table=table)
    kernel = theta_via_kernel(args.P, R, system, table=table)
    header = ["P", "R", "c", "d", "m", "direct", "kernel"]
    row = [args.P, R, system.c, system.d, system.kernelVector, direct, kernel]
    if args.twelfth:
        header.append("twelfth")
        row.append(twelfth_moment_smooth(args.P, R, system, args.seed, args.workers, args.budget))
    out = _out_path(args.out)
    if out is None:
        print(f"direct {direct}")
        print(f"kernel {kernel}")
        if args.twelfth:
            print(f"twelfth {row[-1]}")
        print(f"kernelVector {' '.join(map(str, system.kernelVector))}")
        return
    emit_report((header, [row]), "csv", out)
    _finish(args, out)


def cmd_arcs(args):
    if args.system == "waring":
        if args.N is None:
            raise UsageError("--system waring needs --N")
        system = ArcSystem.waring(args.k, args.N)
    else:
        if args.P is None:
            raise UsageError("--system cubic5 needs --P")
        system = ArcSystem.cubic5(Fraction(args.P) if "/" in args.P else float(args.P))
    header = ["alpha", "major", "q", "a", "ambiguous"]
    rows = []
    for text in args.alpha.split(","):
        alpha = _alpha(text)
        dec = arc_membership(system, alpha)
        q, a = dec.witness if dec.witness else (None, None)
        rows.append([text, dec.isMajor, q, a, dec.ambiguous])
    out = _out_path(args.out)
    if out is None:
        from .reports import csv_text

        sys.stdout.write(csv_text(header, rows))
        return
    emit_report((header, rows), "csv", out)
    _finish(args, out)


def cmd_exponents(args):
    if (args.s is None) != (args.k is None):
        raise UsageError("give both --s and --k, or neither to list the table")
    if args.s is not None:
        if not 3 <= args.k <= 8:
            raise UsageError("--k must lie in 3..8")
        hit = theorem_exponent(args.s, args.k)
        if hit is None:
            print(f"not covered for s={args.s}, k={args.k}")
        else:
            e, pw = hit
            print(f"{e} psi^{pw} ({EXPONENTS.entries[(args.s, args.k)].source})")
        if args.context:
            for c in EXPONENTS.context.get((args.s, args.k), []):
                print(f"context {c.exponent} psi^{c.psiPower} ({c.source})")
        return
    header = ["s", "k", "exponent", "psiPower", "source"]
    rows = [[s, k, e.exponent, e.psiPower, e.source] for s, k, e in EXPONENTS.rows()]
    out = _out_path(args.out)
    if out is None:
        from .reports import csv_text

        sys.stdout.write(csv_text(header, rows))
        return
    emit_report((header, rows), "csv", out)
    _finish(args, out)


def build_parser() -> Parser:
    p = Parser(prog="waringlab", description="Exact counts and circle-method diagnostics for Waring's problem.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=Parser, required=True)

    def common(sp, seed=False, budget=False):
        sp.add_argument("--out", help="output file (relative paths honour WARINGLAB_OUTDIR)")
        sp.add_argument("--format", choices=["csv", "json", "bin"])
        sp.add_argument("--workers", type=int, default=1)
        if seed:
            sp.add_argument("--seed", type=int, default=0, help="hash seed for frequency tables")
        if budget:
            env = os.environ.get("WARINGLAB_BUDGET")
            sp.add_argument("--budget", type=int, default=int(float(env)) if env else DEFAULT_MEMORY_BUDGET,
                            help="memory budget in bytes")

    sp = sub.add_parser("reps", help="build a representation-count table")
    sp.add_argument("--s", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--N", type=int, required=True)
    common(sp)
    sp.set_defaults(func=cmd_reps)

    sp = sub.add_parser("series", help="truncated singular series")
    sp.add_argument("--s", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--Q", type=int, default=1000)
    sp.add_argument("--n", type=int)
    sp.add_argument("--range", help="A:B")
    sp.add_argument("--max-terms", type=int, default=50)
    common(sp)
    sp.set_defaults(func=cmd_series)

    for name, fn in (("audit", cmd_audit), ("scan", cmd_scan)):
        sp = sub.add_parser(name, help="error-term audit" if name == "audit" else "exceptional-set scan")
        sp.add_argument("--s", type=int)
        sp.add_argument("--k", type=int)
        sp.add_argument("--N", type=int)
        sp.add_argument("--Q", type=int, default=2000)
        sp.add_argument("--reps", dest="reps_in", help="precomputed table (binary or csv)")
        if name == "scan":
            sp.add_argument("--audit", dest="audit_in", help="precomputed audit binary")
            sp.add_argument("--psi", default="log", help="log[:c] | power[:delta] | const:A")
        common(sp)
        sp.set_defaults(func=fn)

    sp = sub.add_parser("moments", help="exact even moments and ladders")
    sp.add_argument("--family", choices=["full", "dyadic", "smooth", "block"], default="full")
    sp.add_argument("--k", type=int, default=3)
    sp.add_argument("--exponent", type=int, required=True, help="even exponent 2t")
    sp.add_argument("--P", required=True, help="one value or a comma list (4+ values gives a ladder)")
    sp.add_argument("--R", type=_real)
    sp.add_argument("--R-exp", type=_real, help="R = P^x")
    common(sp, seed=True, budget=True)
    sp.set_defaults(func=cmd_moments)

    sp = sub.add_parser("theta", help="two-dimensional moment, direct and kernel routes")
    sp.add_argument("--P", type=int, required=True)
    sp.add_argument("--R", type=_real, required=True)
    sp.add_argument("--c", type=_triple, required=True)
    sp.add_argument("--d", type=_triple, required=True)
    sp.add_argument("--subset", help="explicit dyadic subset, comma list")
    sp.add_argument("--twelfth", action="store_true", help="also count the smooth twelfth moment")
    common(sp, seed=True, budget=True)
    sp.set_defaults(func=cmd_theta)

    sp = sub.add_parser("arcs", help="major/minor arc membership")
    sp.add_argument("--system", choices=["waring", "cubic5"], default="waring")
    sp.add_argument("--k", type=int, default=3)
    sp.add_argument("--N", type=int)
    sp.add_argument("--P")
    sp.add_argument("--alpha", required=True, help="comma list of a/b fractions or decimals")
    common(sp)
    sp.set_defaults(func=cmd_arcs)

    sp = sub.add_parser("exponents", help="proven exceptional-set exponents")
    sp.add_argument("--s", type=int)
    sp.add_argument("--k", type=int)
    sp.add_argument("--context", action="store_true", help="also list earlier external bounds")
    common(sp)
    sp.set_defaults(func=cmd_exponents)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="waringlab: %(message)s", stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "workers", 1) < 1:
        sys.stderr.write("waringlab: error: --workers must be >= 1\nremedy: pass --workers 1 or more\n")
        return 1
    try:
        args.func(args)
    except (BudgetError, CapacityError, OverflowError) as exc:
        sys.stderr.write(f"waringlab: rejected: {exc}\n")
        if isinstance(exc, BudgetError):
            sys.stderr.write("remedy: raise --budget / WARINGLAB_BUDGET or shrink the problem\n")
        return 2
    except UsageError as exc:
        sys.stderr.write(f"waringlab {args.command}: error: {exc}\nremedy: see 'waringlab {args.command} --help'\n")
        return 1
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"waringlab {args.command}: error: {exc}\nremedy: check the flag values and paths\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
