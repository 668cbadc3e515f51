"""Fitted small-angle orders of zeta(s) - sum l**(-s) P_l(cos theta)."""
import argparse

import numpy as np

from spherefield.special import sum_poly_asymptotic_check


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--s", type=float, nargs="+", default=[1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0])
    ap.add_argument("--theta-min", type=float, default=1e-4)
    ap.add_argument("--theta-max", type=float, default=1e-2)
    ap.add_argument("--points", type=int, default=16)
    args = ap.parse_args()
    theta = np.geomspace(args.theta_min, args.theta_max, args.points)
    print("s,case,predicted_order,fitted_slope,residual")
    for s in args.s:
        rep = sum_poly_asymptotic_check(s, theta)
        print(f"{s},{rep.case},{rep.predicted_order},{rep.fitted_slope:.5f},{rep.residual:.3g}")


if __name__ == "__main__":
    main()
