"""Median sup-ratio statistic across dyadic scales for one spectral index."""
import argparse
import warnings

from spherefield.errors import ResolutionWarning
from spherefield.modulus import KINDS, ModulusExperiment, run_modulus_experiment
from spherefield.spectra import PowerSpectrum


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=3.0)
    ap.add_argument("--l-max", type=int, default=1024)
    ap.add_argument("--levels", type=int, nargs="+", default=[4, 5, 6, 7])
    ap.add_argument("--kind", choices=KINDS, default="rho_form")
    ap.add_argument("--replicates", type=int, default=50)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    exp = ModulusExperiment(PowerSpectrum(args.alpha, args.l_max), tuple(2.0 ** -j for j in args.levels),
                            args.replicates, kind=args.kind, seed=args.seed)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ResolutionWarning)
        res = run_modulus_experiment(exp, threads=args.threads)
    for w in caught:
        print(f"# warning: {w.message}")
    print("scale,resolved,median,max,witness_median")
    for i, s in enumerate(exp.scales):
        print(f"{s},{bool(res.resolved[i])},{res.medians[i]:.6g},{res.maxima[i]:.6g},"
              f"{float(sorted(res.witness[i])[len(res.witness[i]) // 2]):.6g}")
    print(f"# stability {res.stability:.4f}")


if __name__ == "__main__":
    main()
