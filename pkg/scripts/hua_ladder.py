"""Moment ladders: log-log slope of exact even moments against P.

    python scripts/hua_ladder.py                  # smooth |h|^6, R = P^(1/2)
    python scripts/hua_ladder.py --family full --exponent 8 --P 16,32,64,128
"""
import argparse

from waringlab.moments import hua_ladder


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--family", default="smooth")
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--exponent", type=int, default=6)
    ap.add_argument("--P", default="32,64,128,256")
    ap.add_argument("--R-exp", type=float, default=0.5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()

    Ps = [int(x) for x in args.P.split(",")]
    R_exp = args.R_exp if args.family in ("smooth", "block") else None
    lad = hua_ladder(args.family, args.k, args.exponent, Ps, R_exponent=R_exp, seed=args.seed, workers=args.workers)
    for row in lad.rows:
        print(f"P={row.P:>5}  count {row.count:>16}  log2 {row.log2count:.4f}")
    print(f"slope {lad.slope:.4f}")
    if lad.referenceExponent is not None:
        print(f"reference {lad.referenceLabel} = {lad.referenceExponent:.6f}")


if __name__ == "__main__":
    main()
