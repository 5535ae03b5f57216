"""Major-arc quadrature against the singular-series main term and the exact count."""
import argparse

from waringlab.circle_arcs import major_arc_quadrature
from waringlab.core_arith import rep_count_direct
from waringlab.singular_series import main_term, singular_series_truncated


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--s", type=int, default=5)
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--P", type=int, default=22)
    ap.add_argument("--n", default="2000,5000,10000,10648")
    ap.add_argument("--Q", type=int, default=1000)
    args = ap.parse_args()

    for n in (int(x) for x in args.n.split(",")):
        res = major_arc_quadrature(n, args.s, args.k, args.P)
        ev = singular_series_truncated(n, args.s, args.k, args.Q, ledger=False)
        main = main_term(n, args.s, args.k, ev)
        exact = rep_count_direct(n, args.s, args.k)
        print(f"n={n:>6}  major arcs {res.value.real:10.4f} +- {res.error:.1e}  main term {main:10.4f}  exact {exact}")


if __name__ == "__main__":
    main()
