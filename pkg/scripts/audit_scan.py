"""Error-term audit and exceptional-set scan for one (s, k).

    python scripts/audit_scan.py --s 8 --k 3 --N 1048576
"""
import argparse
import time

import numpy as np

from waringlab.core_arith import RepParams
from waringlab.exceptional_audit import PsiFunction, build_audit, exceptional_scan


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--s", type=int, default=7)
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--N", type=int, default=2**20)
    ap.add_argument("--Q", type=int, default=2000)
    ap.add_argument("--psi", default="log")
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()

    t0 = time.time()
    audit = build_audit(RepParams(args.s, args.k, args.N), args.Q, workers=args.workers)
    print(f"audit built in {time.time() - t0:.1f}s")

    half = slice(args.N // 2 + 1, args.N + 1)
    ratio = audit.E[half] / audit.main[half]
    print(f"top block: mean E/main {ratio.mean():+.4f}, |E| < 0.3 main for {np.mean(np.abs(ratio) < 0.3):.4f}")
    print(f"largest tail estimate in top block {audit.tail[half].max():.3g}")

    rep = exceptional_scan(audit, PsiFunction.parse(args.psi))
    for b in rep.blocks:
        print(f"N={b.N:>9}  exceptional {b.exceptional:>7} / {b.total:<8} uncertain {b.uncertain:<5} fraction {b.fraction:.5f}")
    if rep.fit is not None:
        lo, hi = rep.fit.confidence
        print(f"fitted slope {rep.fit.slope:.3f}  95% CI [{lo:.3f}, {hi:.3f}]")
    else:
        print(f"no fit: {rep.fitNote}")
    if rep.theoremExponent is not None:
        print(f"proven exponent {rep.theoremExponent} with psi^{rep.psiPower} ({rep.theoremSource})")


if __name__ == "__main__":
    main()
