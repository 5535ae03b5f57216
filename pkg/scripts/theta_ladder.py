"""Two-dimensional moment on difference tables: direct and kernel routes side by side."""
import argparse
import math
import time

from waringlab.exceptional_audit import slope_fit
from waringlab.moments import LinearFormSystem, difference_table, theta_direct, theta_via_kernel


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--P", default="16,32,64,128")
    ap.add_argument("--R-exp", type=float, default=1.0)
    ap.add_argument("--c", default="1,2,0")
    ap.add_argument("--d", default="0,1,3")
    args = ap.parse_args()

    system = LinearFormSystem(tuple(int(x) for x in args.c.split(",")), tuple(int(x) for x in args.d.split(",")))
    print("kernel vector", *system.kernelVector)
    points = []
    for P in (int(x) for x in args.P.split(",")):
        R = P**args.R_exp
        t0 = time.time()
        table = difference_table(P, R)
        direct = theta_direct(P, R, system, table=table)
        kernel = theta_via_kernel(P, R, system, table=table)
        flag = "" if direct == kernel else "  MISMATCH"
        print(f"P={P:>4} R={R:8.2f}  direct {direct}  kernel {kernel}  ({time.time() - t0:.2f}s){flag}")
        points.append((P, direct))
    if len(points) >= 3:
        fit = slope_fit(points)
        print(f"log2 slope {fit.slope:.4f}  (P^{math.log2(points[-1][1]) / math.log2(points[-1][0]):.3f} at the top)")


if __name__ == "__main__":
    main()
