"""Command-line front end.

Every subcommand writes a self-describing table: CSV with a ``# key: value``
header block echoing the full configuration, or JSON with the same content.
Configuration may come from a flat ``key = value`` file (``--config``);
command-line flags override it.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import warnings
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .bump import SmoothingKernel, c3_reference, delta_at_center, delta_eval, make_profile
from .errors import DomainError, SphereFieldError
from .field import evaluate, pseudo_diff, realize
from .geometry import from_angles
from .modulus import KINDS, ModulusExperiment, run_modulus_experiment
from .slnd import GEOMETRIES, slnd_scan
from .special import (legendre_p, legendre_power_deficit, mehler_dirichlet_p, polylog,
                      riemann_zeta, sum_poly_asymptotic_check, sum_poly_case)
from .spectra import Envelope, PowerSpectrum, derived_spectrum, total_variance
from .variogram import sandwich_report

OUTPUT_DIR_ENV = "SPHEREFIELD_OUTPUT_DIR"
EXIT_USAGE, EXIT_VALIDATION, EXIT_RESOURCE, EXIT_NUMERICAL = 2, 3, 4, 5
STOCHASTIC = ("slnd", "modulus", "synth")
NOT_ECHOED = ("threads", "output", "config", "command")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _add_common(p: argparse.ArgumentParser, stochastic: bool = False) -> None:
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--output", help=f"output path (default: ${OUTPUT_DIR_ENV}/<command>.<format> or stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    if stochastic:
        p.add_argument("--seed", type=int, help="master seed (required)")
        p.add_argument("--threads", type=int, default=1, help="worker threads; never changes the output")


def _add_spectrum(p: argparse.ArgumentParser, l_max: int | None = 256, alpha: float | None = None) -> None:
    p.add_argument("--alpha", type=float, default=alpha, required=False)
    if l_max is not None:
        p.add_argument("--l-max", type=int, default=l_max)
        p.add_argument("--c0", type=float, default=None)
    p.add_argument("--envelope", choices=("constant", "oscillating", "table"), default="constant")
    p.add_argument("--envelope-value", type=float, default=1.0)
    p.add_argument("--envelope-amplitude", type=float, default=0.5)
    p.add_argument("--envelope-table", default="")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spherefield", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"spherefield {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("spectrum", help="tabulate a power spectrum")
    _add_spectrum(p)
    p.add_argument("--k", type=int, default=0, help="derivative order of the tabulated spectrum")
    _add_common(p)

    p = sub.add_parser("special", help="special-function checks")
    p.add_argument("--check", choices=("sumpoly", "legendre", "polylog", "zeta"), default="sumpoly")
    p.add_argument("--s", type=float, default=2.0)
    p.add_argument("--theta", type=_floats, default=None, help="comma-separated angles")
    p.add_argument("--theta-min", type=float, default=1e-4)
    p.add_argument("--theta-max", type=float, default=1e-2)
    p.add_argument("--points", type=int, default=16)
    p.add_argument("--ell", type=_ints, default=[1, 10, 50, 200])
    p.add_argument("--psi", type=_floats, default=[0.1, 0.5, 1.0, 2.0, 3.0])
    _add_common(p)

    p = sub.add_parser("variogram", help="variogram against rho_alpha^2")
    _add_spectrum(p, l_max=4096)
    p.add_argument("--theta-min", type=float, default=1e-4)
    p.add_argument("--theta-max", type=float, default=0.05)
    p.add_argument("--points", type=int, default=64)
    p.add_argument("--tail", choices=("auto", "bound", "resum"), default="auto")
    _add_common(p)

    p = sub.add_parser("bump", help="bump-function coefficients or profile")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--l-max", type=int, default=4096)
    p.add_argument("--order", type=int, default=2, help="number of triangle factors in the kernel")
    p.add_argument("--table", choices=("coefficients", "profile"), default="coefficients")
    p.add_argument("--points", type=int, default=512)
    _add_common(p)

    p = sub.add_parser("slnd", help="conditional-variance scan")
    _add_spectrum(p, l_max=None, alpha=3.0)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--geometry", choices=GEOMETRIES, default="ring")
    p.add_argument("--eps", type=_floats, default=[0.1, 0.05, 0.025])
    p.add_argument("--replicates", type=int, default=100)
    p.add_argument("--exploratory", action="store_true")
    _add_common(p, stochastic=True)

    p = sub.add_parser("modulus", help="modulus-of-continuity experiment")
    _add_spectrum(p, l_max=1024, alpha=3.0)
    p.add_argument("--k", type=int, default=0, help="derivative order")
    p.add_argument("--kind", choices=KINDS, default=None)
    p.add_argument("--scales", type=_ints, default=[4, 5, 6, 7], help="dyadic levels j of the scales 2^-j")
    p.add_argument("--replicates", type=int, default=4)
    p.add_argument("--pairs-per-scale", type=int, default=256)
    p.add_argument("--rings", type=int, default=4)
    _add_common(p, stochastic=True)

    p = sub.add_parser("synth", help="sample a field and evaluate it on a grid")
    _add_spectrum(p, l_max=64, alpha=3.0)
    p.add_argument("--k", type=int, default=0, help="derivative order")
    p.add_argument("--replicate", type=int, default=0)
    p.add_argument("--ntheta", type=int, default=16)
    p.add_argument("--nphi", type=int, default=32)
    p.add_argument("--table", choices=("values", "coefficients"), default="values")
    _add_common(p, stochastic=True)
    return parser


def read_config_file(path: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _parse(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError("a subcommand is required")
    if getattr(args, "config", None):
        cfg = read_config_file(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in sub._actions}
        flags = []
        for key, value in cfg.items():
            if key in NOT_ECHOED or key not in known:
                raise UsageError(f"unknown configuration key {key!r} for {args.command}")
            action = known[key]
            opt = action.option_strings[-1]
            if isinstance(action, argparse._StoreTrueAction):
                if value.lower() in ("1", "true", "yes"):
                    flags.append(opt)
            else:
                flags += [opt, value]
        args = parser.parse_args([args.command] + flags + list(argv[1:]))
    return args


def _spectrum(args, alpha=None, l_max=None) -> PowerSpectrum:
    alpha = args.alpha if alpha is None else alpha
    if alpha is None:
        raise DomainError("--alpha is required")
    table = tuple(_floats(args.envelope_table)) if args.envelope_table else ()
    env = Envelope(kind=args.envelope, value=args.envelope_value, amplitude=args.envelope_amplitude, table=table)
    return PowerSpectrum(alpha=alpha, l_max=args.l_max if l_max is None else l_max, envelope=env, c0=args.c0)


def _envelope(args) -> Envelope:
    table = tuple(_floats(args.envelope_table)) if args.envelope_table else ()
    return Envelope(kind=args.envelope, value=args.envelope_value, amplitude=args.envelope_amplitude, table=table)


def _theta_grid(args) -> np.ndarray:
    if getattr(args, "theta", None):
        return np.asarray(args.theta, dtype=float)
    if args.points < 1 or not 0 < args.theta_min <= args.theta_max:
        raise DomainError("need 0 < theta-min <= theta-max and points >= 1")
    return np.geomspace(args.theta_min, args.theta_max, args.points)


# Each command returns (columns, rows, summary).
Table = tuple[list[str], list[list[Any]], dict[str, Any]]


def cmd_spectrum(args) -> Table:
    spec = _spectrum(args)
    vals = spec.values()
    summary = {"total_variance": total_variance(spec).value, "tail_bound": total_variance(spec).tail_bound,
               "c0": spec.c0}
    if args.k:
        derived = derived_spectrum(spec, args.k, allow_divergent=True)
        vals = derived.values
        summary.update(c6=derived.c6, effective_alpha=derived.effective_alpha, divergent=derived.divergent)
    ell = np.arange(1, spec.l_max + 1)
    env = spec.envelope(ell)
    cum = np.cumsum((2 * ell + 1) / (4 * math.pi) * vals[1:])
    rows = [[int(l), vals[l], env[l - 1], cum[l - 1]] for l in ell]
    return ["ell", "C_ell", "G_ell", "cumulative_variance"], rows, summary


def cmd_special(args) -> Table:
    if args.check == "sumpoly":
        theta = _theta_grid(args)
        deficit = np.array([legendre_power_deficit(args.s, t).value for t in theta])
        case, order = sum_poly_case(args.s)
        slope = math.nan
        summary: dict[str, Any] = {"case": case}
        if theta.size >= 8 and theta.max() <= 0.1 and theta.max() / theta.min() >= 10:
            report = sum_poly_asymptotic_check(args.s, theta)
            slope = report.fitted_slope
            summary["fit_residual"] = report.residual
        zeta = riemann_zeta(args.s)
        rows = [[args.s, t, zeta - d, d, order, slope, d / math.sin(t / 2)] for t, d in zip(theta, deficit)]
        return ["s", "theta", "sum", "deficit", "predicted_order", "fitted_slope", "ratio"], rows, summary
    if args.check == "legendre":
        theta = _theta_grid(args)
        rows = []
        for ell in args.ell:
            for t in theta:
                rec = legendre_p(ell, math.cos(t))
                md = mehler_dirichlet_p(ell, t)
                rows.append([ell, t, rec, md, abs(rec - md)])
        return ["ell", "theta", "recurrence", "mehler_dirichlet", "abs_diff"], rows, {}
    if args.check == "polylog":
        vals = polylog(args.s, np.asarray(args.psi))
        rows = [[args.s, p, v.real, v.imag] for p, v in zip(args.psi, np.atleast_1d(vals))]
        return ["s", "psi", "re", "im"], rows, {}
    return ["s", "zeta"], [[args.s, riemann_zeta(args.s)]], {}


def cmd_variogram(args) -> Table:
    spec = _spectrum(args)
    theta = _theta_grid(args)
    prof = sandwich_report(spec, theta, tail=args.tail)
    rows = [list(r) for r in zip(prof.theta, prof.values, prof.rho_sq, prof.ratios, prof.tail_bounds)]
    summary = {"c1": prof.c1, "log_slope": prof.log_slope, "bounded": prof.bounded, "tail_mode": prof.tail_mode}
    return ["theta", "variogram", "rho_sq", "ratio", "tail_bound"], rows, summary


def cmd_bump(args) -> Table:
    kernel = SmoothingKernel(args.order)
    prof = make_profile(args.epsilon, args.l_max, kernel)
    summary = {"delta0": delta_at_center(prof), "tail_bound": prof.tail_bound(),
               "c3_reference": c3_reference(kernel)}
    if args.table == "coefficients":
        return ["ell", "b_ell"], [[l, b] for l, b in enumerate(prof.b)], summary
    theta = np.linspace(0.0, math.pi, args.points)
    delta = delta_eval(prof, theta).value
    return ["theta", "delta"], [[t, d] for t, d in zip(theta, delta)], summary


def cmd_slnd(args) -> Table:
    scan = slnd_scan(args.alpha, args.eps, args.n, args.geometry, args.replicates, args.seed,
                     envelope=_envelope(args), exploratory=args.exploratory, threads=args.threads)
    summary = {"slope": scan.slope, "certifying": scan.certifying, scan.estimate.name: scan.estimate.value,
               "min_ratio_c2": ",".join(repr(float(v)) for v in scan.min_ratio_c2),
               "collapsed": ",".join(repr(v) for v in scan.collapsed)}
    return ["epsilon", "replicate", "min_dist", "var", "ratio_c2", "ratio_nd"], [list(r) for r in scan.rows], summary


def cmd_modulus(args) -> Table:
    spec = _spectrum(args)
    kind = args.kind or ("derivative_form" if args.k else "rho_form")
    exp = ModulusExperiment(spec, tuple(2.0 ** (-j) for j in args.scales), args.replicates, kind=kind,
                            derivative_order=args.k, pairs_per_scale=args.pairs_per_scale,
                            n_rings=args.rings, seed=args.seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = run_modulus_experiment(exp, threads=args.threads)
    summary = {"stability": res.stability, res.estimate.name: res.estimate.value,
               "medians": ",".join(repr(float(v)) for v in res.medians), "warnings": " | ".join(res.warnings)}
    rows = [[s, r, v, int(flag)] for s, r, v, flag in res.rows()]
    return ["scale", "replicate", "statistic", "resolved_flag"], rows, summary


def cmd_synth(args) -> Table:
    spec = _spectrum(args)
    real = realize(spec, args.seed, args.replicate)
    if args.k:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            real = pseudo_diff(real, args.k)
    if args.table == "coefficients":
        return ["ell", "m", "re", "im"], [list(r) for r in real.coefficients.to_rows()], {}
    if args.ntheta < 1 or args.nphi < 1:
        raise DomainError("grid sizes must be positive")
    theta = (np.arange(args.ntheta) + 0.5) * math.pi / args.ntheta
    phi = np.arange(args.nphi) * 2 * math.pi / args.nphi
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    values = evaluate(real, from_angles(tt.ravel(), pp.ravel()))
    return ["theta", "phi", "value"], [list(r) for r in zip(tt.ravel(), pp.ravel(), values)], {}


COMMANDS: dict[str, Callable[[argparse.Namespace], Table]] = {
    "spectrum": cmd_spectrum, "special": cmd_special, "variogram": cmd_variogram, "bump": cmd_bump,
    "slnd": cmd_slnd, "modulus": cmd_modulus, "synth": cmd_synth,
}


def _fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple)):
        return ",".join(_fmt(x) for x in v)
    return "" if v is None else str(v)


def _jsonable(v: Any) -> Any:
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else repr(f)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def echoed_config(args: argparse.Namespace) -> dict[str, Any]:
    return {k: v for k, v in sorted(vars(args).items()) if k not in NOT_ECHOED}


def render(args, columns, rows, summary) -> str:
    config = echoed_config(args)
    if args.format == "json":
        doc = {"artifact": "spherefield", "version": __version__, "command": args.command,
               "config": {k: _jsonable(v) for k, v in config.items()},
               "summary": {k: _jsonable(v) for k, v in summary.items()},
               "columns": columns, "rows": [[_jsonable(x) for x in r] for r in rows]}
        return json.dumps(doc, indent=1) + "\n"
    buf = io.StringIO()
    buf.write(f"# artifact: spherefield {__version__}\n# command: {args.command}\n")
    for k, v in config.items():
        buf.write(f"# config.{k}: {_fmt(v)}\n")
    for k, v in summary.items():
        buf.write(f"# summary.{k}: {_fmt(v)}\n")
    buf.write(",".join(columns) + "\n")
    for r in rows:
        buf.write(",".join(_fmt(x) for x in r) + "\n")
    return buf.getvalue()


def read_table(text: str) -> tuple[dict[str, str], list[str], list[list[str]]]:
    """Split CSV output into its header mapping, column names and rows."""
    header, body = {}, []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            header[key] = value
        elif line:
            body.append(line.split(","))
    return header, body[0], body[1:]


def _error(kind: str, exc: BaseException, code: int) -> int:
    record = {"error": kind, "type": type(exc).__name__, "message": str(exc), "exit_code": code}
    sys.stderr.write(json.dumps(record) + "\n")
    return code


def run(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _parse(argv)
        if args.command in STOCHASTIC and args.seed is None:
            raise UsageError(f"--seed is required for {args.command}")
        if args.command in STOCHASTIC and args.threads < 1:
            raise UsageError("--threads must be positive")
    except UsageError as exc:
        return _error("usage", exc, EXIT_USAGE)
    except OSError as exc:
        return _error("resource", exc, EXIT_RESOURCE)
    target = args.output
    if target is None and os.environ.get(OUTPUT_DIR_ENV):
        target = str(Path(os.environ[OUTPUT_DIR_ENV]) / f"{args.command}.{args.format}")
    try:
        if target is not None:
            parent = Path(target).resolve().parent
            parent.mkdir(parents=True, exist_ok=True)
            if not os.access(parent, os.W_OK) or Path(target).is_dir():
                raise PermissionError(f"cannot write to {target}")
    except OSError as exc:
        return _error("resource", exc, EXIT_RESOURCE)
    try:
        columns, rows, summary = COMMANDS[args.command](args)
    except (DomainError, ValueError, argparse.ArgumentTypeError) as exc:
        return _error("validation", exc, EXIT_VALIDATION)
    except (SphereFieldError, ArithmeticError) as exc:
        return _error("numerical", exc, EXIT_NUMERICAL)
    text = render(args, columns, rows, summary)
    try:
        if target is None:
            sys.stdout.write(text)
        else:
            Path(target).write_text(text)
    except OSError as exc:
        return _error("resource", exc, EXIT_RESOURCE)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
