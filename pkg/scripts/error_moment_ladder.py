"""Growth of sum_{N/2 < n <= N} |E(n)|^h for dyadic N.

Default: five cubes, h = 3, N = 2^12 .. 2^17; the slope is compared with 35/12.
"""
import argparse

from waringlab.core_arith import RepParams
from waringlab.exceptional_audit import build_audit, moment_sum, slope_fit


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--s", type=int, default=5)
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--h", type=float, default=3.0)
    ap.add_argument("--lo", type=int, default=12)
    ap.add_argument("--hi", type=int, default=17)
    ap.add_argument("--Q", type=int, default=1000)
    ap.add_argument("--reference", type=float, default=35 / 12)
    args = ap.parse_args()

    audit = build_audit(RepParams(args.s, args.k, 2**args.hi), args.Q, workers=4)
    points = []
    for e in range(args.lo, args.hi + 1):
        m = moment_sum(audit, args.h, 2**e)
        points.append((2**e, m))
        print(f"N=2^{e:<3} moment {m:.6g}")
    fit = slope_fit(points)
    lo, hi = fit.confidence
    print(f"slope {fit.slope:.4f}  95% CI [{lo:.4f}, {hi:.4f}]  reference {args.reference:.4f}")


if __name__ == "__main__":
    main()
