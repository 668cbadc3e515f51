"""Bump concentration: eps^2 delta_eps(0) against the integral constant, plus a radial profile."""
import argparse

import numpy as np

from spherefield.bump import SmoothingKernel, c3_check, delta_eval, make_profile


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--order", type=int, default=2, help="convolution order of the kernel")
    ap.add_argument("--eps", type=float, nargs="+", default=[0.2, 0.1, 0.05, 0.025])
    ap.add_argument("--l-max", type=int, default=4096)
    ap.add_argument("--profile-eps", type=float, default=0.1)
    ap.add_argument("--points", type=int, default=11)
    args = ap.parse_args()
    kernel = SmoothingKernel(args.order)
    rep = c3_check(kernel, args.eps, args.l_max)
    print(f"# reference constant {rep.reference:.12g}")
    print("epsilon,delta0,eps2_delta0,ratio")
    for e, d, s, r in zip(rep.epsilon, rep.delta0, rep.scaled, rep.ratios):
        print(f"{e},{d:.10g},{s:.10g},{r:.8f}")
    prof = make_profile(args.profile_eps, args.l_max, kernel)
    theta = np.linspace(0, 3 * args.profile_eps, args.points)
    values = delta_eval(prof, theta, include_monopole=True).value
    print("\ntheta_over_eps,delta")
    for t, v in zip(theta, values):
        print(f"{t / args.profile_eps:.3f},{v:.8g}")


if __name__ == "__main__":
    main()
