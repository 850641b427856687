"""pasv-lab: Wigner grids, Mandel Q curves, threshold times and the validation suite.

Exit codes: 0 success, 1 validation failure, 2 usage error,
3 numerical-contract failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import pasv_core as pc
from . import scan
from . import thermal_channel as tc
from . import validation
from .errors import DomainError, ExportError, PasvError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

# defaults follow the single-photon figures: r = 0.3, nbar = 1
DEFAULT_R = 0.3
DEFAULT_M = 1
DEFAULT_NBAR = 1.0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _state_flags(p: argparse.ArgumentParser, r_default=DEFAULT_R) -> None:
    p.add_argument("--r", "--squeezing", dest="r", type=float, default=r_default, help="squeezing parameter r")
    p.add_argument("--m", "--photons-added", dest="m", type=int, default=DEFAULT_M, help="photons added m")


def _channel_flags(p: argparse.ArgumentParser, kt_default=0.0) -> None:
    p.add_argument("--kt", "--decay-time", dest="kt", type=float, default=kt_default, help="decay time kappa*t")
    p.add_argument("--nbar", "--thermal-nbar", dest="nbar", type=float, default=DEFAULT_NBAR, help="bath mean photon number")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pasv-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    w = sub.add_parser("wigner", help="evaluate W on a grid and write it with a negativity report")
    _state_flags(w)
    _channel_flags(w)
    w.add_argument("--half-width", type=float, default=4.0, help="square grid [-L, L]^2")
    w.add_argument("--points", type=int, default=201, help="points per axis")
    w.add_argument("--q-range", type=float, nargs=2, metavar=("MIN", "MAX"))
    w.add_argument("--p-range", type=float, nargs=2, metavar=("MIN", "MAX"))
    w.add_argument("--out", type=Path, default=Path("wigner.csv"), help="grid file (.csv or .json)")
    w.add_argument("--format", choices=("csv", "json"))

    q = sub.add_parser("qparam", help="Mandel Q over a range of r, with sign-change roots")
    q.add_argument("--m", "--photons-added", dest="m", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    q.add_argument("--r", "--squeezing", dest="r", type=float, help="single r value instead of a range")
    q.add_argument("--r-min", type=float, default=0.0)
    q.add_argument("--r-max", type=float, default=1.5)
    q.add_argument("--points", type=int, default=151)
    q.add_argument("--out", type=Path, help="CSV path (default: standard output)")

    t = sub.add_parser("threshold", help="decay time at which W stops being negative")
    t.add_argument("--m", "--photons-added", dest="m", type=int, default=DEFAULT_M)
    t.add_argument("--r", "--squeezing", dest="r", type=float, default=DEFAULT_R)
    t.add_argument("--nbar", "--thermal-nbar", dest="nbar", type=float, default=DEFAULT_NBAR)
    t.add_argument("--numeric", action="store_true", help="also bisect the grid minimum")
    t.add_argument("--tol", type=float, default=1e-8, help="bisection tolerance in kt")

    v = sub.add_parser("validate", help="run the oracle and identity checks")
    v.add_argument("--quick", action="store_true", help="m <= 2 and a single r")
    v.add_argument("--report", type=Path, help="write the JSON report here")
    for key, default in validation.DEFAULT_TOLERANCES.items():
        v.add_argument(f"--tol-{key.replace('_', '-')}", dest=f"tol_{key}", type=float, metavar="TOL",
                       help=f"default {default:g}")
    return parser


def _grid_spec(args) -> scan.GridSpec:
    hw = args.half_width
    q_lo, q_hi = args.q_range or (-hw, hw)
    p_lo, p_hi = args.p_range or (-hw, hw)
    return scan.GridSpec(q_lo, q_hi, p_lo, p_hi, args.points, args.points)


def cmd_wigner(args) -> int:
    s = pc.PasvParams(args.r, args.m)
    ch = tc.ChannelParams(args.kt, args.nbar)
    spec = _grid_spec(args)
    meta = {"r": s.r, "m": s.m, "kt": ch.kt, "nbar": ch.nbar}
    grid = scan.evaluate_grid(lambda q, p: tc.wigner_evolved(s, ch, q, p), spec, metadata=meta)
    report = scan.negativity(grid)
    scan.export(grid, args.out, args.format)
    report_path = args.out.with_name(args.out.stem + ".negativity.json")
    scan.export(report, report_path)
    print(f"wrote {args.out} ({spec.nq}x{spec.n_p}) and {report_path}")
    print(
        f"min W = {report.min_value:.10g} at (q, p) = ({report.argmin_q:g}, {report.argmin_p:g}); "
        f"negative volume = {report.negative_volume:.6g}; integral = {report.total_integral:.10g}"
    )
    return EXIT_OK


def cmd_qparam(args) -> int:
    if args.r is not None:
        rs = np.array([args.r])
    else:
        if not 0 <= args.r_min < args.r_max or args.points < 2:
            raise UsageError("need 0 <= --r-min < --r-max and --points >= 2")
        rs = np.linspace(args.r_min, args.r_max, args.points)
    lines = ["r,m,Q"]
    roots = []
    for m in args.m:
        for r in rs:
            try:
                q = pc.mandel_q(pc.PasvParams(float(r), m))
            except ArithmeticError:
                q = math.nan
            lines.append(f"{r:.17g},{m},{q:.17g}")
        if len(rs) > 1:
            try:
                roots.append((m, pc.q_sign_change(m, (max(rs[0], 1e-6), rs[-1]))))
            except PasvError:
                pass
    lines += [f"# sign-change m={m} r={root:.12f}" for m, root in roots]
    text = "\n".join(lines) + "\n"
    if args.out:
        try:
            args.out.write_text(text)
        except OSError as err:
            raise ExportError(f"{args.out}: {err}") from err
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_threshold(args) -> int:
    s = pc.PasvParams(args.r, args.m)
    closed = None
    if s.m == 1:
        closed = tc.threshold_time_m1(args.nbar)
        print(f"closed form kt_c = {closed:.12f}  (m=1, nbar={args.nbar:g})")
    elif not args.numeric:
        raise UsageError(f"no closed form for m={s.m}; pass --numeric")
    else:
        print(f"no closed form for m={s.m}; numeric scan only")
    if args.numeric:
        kt = tc.threshold_time_numeric(s, args.nbar, tol=args.tol)
        print(f"numeric kt* = {kt:.12f}  (grid minimum sign change, r={s.r:g})")
        if closed is not None:
            print(f"delta = {abs(kt - closed):.3e}")
    return EXIT_OK


def cmd_validate(args) -> int:
    overrides = tuple(
        (key, getattr(args, f"tol_{key}"))
        for key in validation.DEFAULT_TOLERANCES
        if getattr(args, f"tol_{key}") is not None
    )
    cfg = validation.SuiteConfig(quick=args.quick, tolerances=overrides)
    results = validation.run_suite(cfg, on_result=lambda r: print(r.line(), flush=True))
    failed = [r.name for r in results if not r.passed]
    payload = {
        "quick": args.quick,
        "tolerances": dict(validation.DEFAULT_TOLERANCES, **dict(overrides)),
        "passed": not failed,
        "checks": [r.to_dict() for r in results],
    }
    if args.report:
        try:
            args.report.write_text(json.dumps(payload, indent=2, default=repr) + "\n")
        except OSError as err:
            raise ExportError(f"{args.report}: {err}") from err
    if failed:
        print("failed: " + "; ".join(failed), file=sys.stderr)
        return EXIT_VALIDATION
    print(f"all {len(results)} checks passed")
    return EXIT_OK


COMMANDS = {"wigner": cmd_wigner, "qparam": cmd_qparam, "threshold": cmd_threshold, "validate": cmd_validate}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as err:
        print(err, file=sys.stderr)
        return EXIT_USAGE
    except DomainError as err:
        # invalid flag values surface as precondition failures
        print(f"pasv-lab: invalid argument: {err}", file=sys.stderr)
        return EXIT_USAGE
    except ExportError as err:
        print(f"pasv-lab: {err}", file=sys.stderr)
        return EXIT_USAGE
    except PasvError as err:
        print(f"pasv-lab: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
