"""Minimum conditional-variance ratios as the conditioning radius shrinks."""
import argparse

import numpy as np

from spherefield.slnd import GEOMETRIES, slnd_scan


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=3.0)
    ap.add_argument("--n", type=int, default=6)
    ap.add_argument("--geometry", choices=GEOMETRIES, default="random-cap")
    ap.add_argument("--eps", type=float, nargs="+", default=[0.1, 0.05, 0.025, 0.0125])
    ap.add_argument("--replicates", type=int, default=200)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    scan = slnd_scan(args.alpha, args.eps, args.n, args.geometry, args.replicates, args.seed,
                     exploratory=args.alpha >= 4, threads=args.threads)
    print("epsilon,min_ratio_c2,min_ratio_nd")
    for e, c2, nd in zip(scan.epsilons, scan.min_ratio_c2, scan.min_ratio_nd):
        print(f"{e},{c2:.6g},{nd:.6g}")
    print(f"# slope {scan.slope:.4f}  certifying {scan.certifying}  "
          f"collapsed {list(scan.collapsed)}  spread {np.ptp(np.log(scan.min_ratio_c2)):.3f}")


if __name__ == "__main__":
    main()
