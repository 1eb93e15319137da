"""Command-line entry point.

Exit codes: 0 success, 1 verdict failure (certification or check failed),
2 usage or input error.
"""

import argparse
import os
import sys

import numpy as np

from . import _kernels
from .band import sample_function
from .errors import OpwaveError, ScaleRejected
from .experiments import (NoiseSpec, approx_order_fit, decorrelation_curve,
                          discrete_sum_bounds, sample_sparse_process, sparsity_report)
from .io import read_pyramid, read_signal, write_field, write_pyramid, write_report, \
    write_signal
from .lattice import frequency_grid, parse_dilation
from .localization import make_localization
from .splines import bspline_spectrum, interpolant_spectrum, m_function
from .symbols import parse_operator
from .transform import analyze, build_system, signal_spacing, synthesize
from .wavelets import riesz_basis_test, wavelet_spectrum

DEFAULT_TOL = 1e-10
DEFAULT_GRID = 256


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _common(p):
    p.add_argument("--tol", type=float, default=DEFAULT_TOL,
                   help="lattice-sum / CG tolerance (default 1e-10)")
    p.add_argument("--grid", type=int, default=DEFAULT_GRID,
                   help="frequency grid points per axis (default 256)")
    p.add_argument("--threads", type=int, default=0,
                   help="worker ceiling (default: all cores; OPWAVE_THREADS overrides)")
    p.add_argument("--out", help="output path")


def _system_args(p, scales=True):
    p.add_argument("--operator", required=True, help="e.g. matern:nu=1, laplacian:m=1")
    p.add_argument("--dilation", required=True, help="2, 2I, quincunx or matrix:[[..]]")
    p.add_argument("--dim", type=int, help="dimension for aI dilations (default 2)")
    if scales:
        p.add_argument("--jmin", type=int, required=True)
        p.add_argument("--jmax", type=int, required=True)


def build_parser():
    parser = _Parser(prog="opwave", description="Operator-like wavelet toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("filters", help="write B-spline/interpolant/wavelet/m spectra")
    _system_args(p, scales=False)
    p.add_argument("--scale", type=int, required=True)
    p.add_argument("--kind", choices=("bspline", "interpolant", "wavelet", "m"),
                   default="wavelet")
    _common(p)

    p = sub.add_parser("riesz", help="Riesz-basis certification of one scale")
    _system_args(p, scales=False)
    p.add_argument("--scale", type=int, required=True)
    _common(p)

    p = sub.add_parser("analyze", help="wavelet pyramid of a raw signal")
    _system_args(p)
    p.add_argument("--signal", required=True, help="raw float64 file with .json sidecar")
    _common(p)

    p = sub.add_parser("synthesize", help="CG inversion of a pyramid")
    _system_args(p, scales=False)
    p.add_argument("--pyramid", required=True, help="pyramid directory")
    _common(p)

    p = sub.add_parser("approx-order", help="approximation-order slope fit")
    _system_args(p, scales=False)
    p.add_argument("--signal", help="raw signal (default: Gaussian on a generated box)")
    p.add_argument("--scales", type=_ints, default=[0, -1, -2, -3])
    p.add_argument("--n", type=int, default=1024, help="box samples per axis for the Gaussian")
    p.add_argument("--spacing", type=float, default=1 / 16)
    p.add_argument("--method", choices=("projection", "multiplier"), default="projection")
    _common(p)

    p = sub.add_parser("decorrelate", help="decorrelation curve (CSV or JSON by extension)")
    _system_args(p, scales=False)
    p.add_argument("--scale", type=int, default=0)
    p.add_argument("--offset", type=_ints, required=True, help="lattice offset k, e.g. 1,0")
    p.add_argument("--nmax", type=int, default=16)
    _common(p)

    p = sub.add_parser("sparsity", help="per-scale coefficient statistics")
    p.add_argument("--pyramid", help="existing pyramid directory")
    p.add_argument("--operator")
    p.add_argument("--dilation")
    p.add_argument("--dim", type=int)
    p.add_argument("--jmin", type=int)
    p.add_argument("--jmax", type=int)
    p.add_argument("--noise", default="gaussian",
                   choices=("gaussian", "laplace", "student_t", "compound_poisson"))
    p.add_argument("--rate", type=float, default=1.0)
    p.add_argument("--dof", type=float, default=5.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=256)
    _common(p)

    p = sub.add_parser("check-sums", help="discrete-sum bound ratios across spacings")
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--mode", choices=("lower", "upper"), default="lower")
    p.add_argument("--spacings", type=_floats, default=[1.0, 0.5, 0.25, 0.125])
    _common(p)
    return parser


def _operator(args):
    D = parse_dilation(args.dilation, args.dim)
    return parse_operator(args.operator, D.d), D


def _require_out(args):
    if not args.out:
        raise UsageError("--out is required")
    return args.out


def _cmd_filters(args):
    op, D = _operator(args)
    grid = frequency_grid(D, args.scale, args.grid)
    if args.kind == "bspline":
        f = bspline_spectrum(op, make_localization(op, D, args.scale), grid)
    elif args.kind == "interpolant":
        f = interpolant_spectrum(op, D, args.scale, grid, args.tol)
    elif args.kind == "wavelet":
        f = wavelet_spectrum(op, D, args.scale, grid, args.tol)
    else:
        f = m_function(op, D, args.scale, 1, grid, args.tol)
    write_field(f, _require_out(args), operator=args.operator)
    return 0


def _cmd_riesz(args):
    op, D = _operator(args)
    rep = riesz_basis_test(op, D, args.scale, N=args.grid, tol=args.tol)
    out = rep.to_dict()
    out["operator"] = args.operator
    out["dilation"] = D.label()
    if not rep.passed:
        out["failing_scale"] = rep.j
    if args.out:
        write_report(out, args.out)
    print(f"scale {rep.j}: {rep.verdict}" + (f" ({', '.join(rep.reasons)})" if rep.reasons else ""))
    return 0 if rep.passed else 1


def _cmd_analyze(args):
    op, D = _operator(args)
    sig = read_signal(args.signal)
    system = build_system(op, D, args.jmin, args.jmax, N=min(args.grid, 64), tol=args.tol)
    write_pyramid(analyze(sig, system), _require_out(args))
    return 0


def _cmd_synthesize(args):
    op, D = _operator(args)
    p = read_pyramid(args.pyramid)
    system = build_system(op, D, p.j_min, p.j_max, N=min(args.grid, 64), tol=args.tol)
    s = synthesize(p, system, tol=args.tol)
    write_signal(s, _require_out(args))
    print(f"converged in {s.meta['iterations']} iterations, residual {s.meta['residual']:.3g}")
    return 0


def _cmd_approx(args):
    op, D = _operator(args)
    if args.signal:
        f = read_signal(args.signal)
    else:
        f = sample_function(lambda x: np.exp(-0.5 * np.sum(x * x, axis=1)), args.n,
                            args.spacing, D.d)
    res = approx_order_fit(op, D, f, args.scales, args.method, args.tol)
    res["expected_order"] = op.order
    if args.out:
        write_report(res, args.out)
    print(f"slope {res['slope']:.6g} (order {op.order:g})")
    return 0


def _cmd_decorrelate(args):
    op, D = _operator(args)
    vals = decorrelation_curve(op, D, args.scale, args.offset, args.nmax,
                               N=min(args.grid, 128), tol=args.tol)
    out = _require_out(args)
    if out.endswith(".csv"):
        write_report(list(vals), out, "csv")
    else:
        write_report({"offset": args.offset, "scale": args.scale,
                      "values": [v.real for v in vals],
                      "max_imag": float(np.max(np.abs(np.imag(vals))))}, out)
    return 0


def _cmd_sparsity(args):
    if args.pyramid:
        p = read_pyramid(args.pyramid)
    else:
        for flag in ("operator", "dilation", "jmin", "jmax"):
            if getattr(args, flag) is None:
                raise UsageError(f"--{flag} is required without --pyramid")
        op, D = _operator(args)
        system = build_system(op, D, args.jmin, args.jmax, N=min(args.grid, 64), tol=args.tol)
        params = {"rate": args.rate} if args.noise == "compound_poisson" else \
            {"dof": args.dof} if args.noise == "student_t" else {}
        s = sample_sparse_process(op, NoiseSpec(args.noise, params, args.seed), args.n,
                                  signal_spacing(system))
        p = analyze(s, system)
    rep = sparsity_report(p)
    write_report({str(j): v for j, v in rep.items()}, _require_out(args))
    return 0


def _cmd_check_sums(args):
    rows = [discrete_sum_bounds(h, args.r, args.dim, args.mode, tol=args.tol)
            for h in args.spacings]
    ratios = [r["bound_ratio"] for r in rows]
    drift = max(abs(v - ratios[0]) for v in ratios) / abs(ratios[0])
    ok = drift < 1e-10
    if args.out:
        write_report({"rows": rows, "max_relative_drift": drift, "h_invariant": ok}, args.out)
    print(f"ratio {ratios[0]:.12g}, drift {drift:.3g}")
    return 0 if ok else 1


_COMMANDS = {"filters": _cmd_filters, "riesz": _cmd_riesz, "analyze": _cmd_analyze,
             "synthesize": _cmd_synthesize, "approx-order": _cmd_approx,
             "decorrelate": _cmd_decorrelate, "sparsity": _cmd_sparsity,
             "check-sums": _cmd_check_sums}


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"opwave: error: {exc}", file=sys.stderr)
        return 2
    threads = os.environ.get("OPWAVE_THREADS") or args.threads
    try:
        _kernels.set_threads(int(threads) if threads else 0)
        return _COMMANDS[args.command](args)
    except ScaleRejected as exc:
        print(f"opwave: {exc}", file=sys.stderr)
        return 1
    except (UsageError, OpwaveError, OSError, ValueError) as exc:
        print(f"opwave: error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())
