"""Ratio of the variogram to rho_alpha^2 over small angles for several spectral indices."""
import argparse

import numpy as np

from spherefield.spectra import Envelope, PowerSpectrum
from spherefield.variogram import sandwich_report


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alphas", type=float, nargs="+", default=[2.5, 3.0, 3.5, 4.0, 5.0])
    ap.add_argument("--l-max", type=int, default=4096)
    ap.add_argument("--theta-min", type=float, default=1e-4)
    ap.add_argument("--theta-max", type=float, default=0.05)
    ap.add_argument("--points", type=int, default=32)
    ap.add_argument("--oscillating", action="store_true", help="use G(l) = 1 + sin(log l)/2")
    args = ap.parse_args()
    theta = np.geomspace(args.theta_min, args.theta_max, args.points)
    env = Envelope("oscillating") if args.oscillating else Envelope()
    print("alpha,tail,min_ratio,max_ratio,spread,log_slope,c1")
    for a in args.alphas:
        rep = sandwich_report(PowerSpectrum(a, args.l_max, env), theta)
        print(f"{a},{rep.tail_mode},{rep.ratios.min():.6g},{rep.ratios.max():.6g},"
              f"{rep.spread:.6g},{rep.log_slope:.4f},{rep.c1:.6g}")


if __name__ == "__main__":
    main()
