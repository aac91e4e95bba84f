"""Command-line entry point: parameter sweeps, criteria, moments and Monte Carlo runs.

Exit codes: 0 success, 1 usage or invalid input, 2 I/O failure, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import classical, estimation, psf as psf_mod, qfi
from .errors import (
    CoherentQfiError,
    DegenerateCriterionError,
    DegenerateStateError,
    InvalidParameterError,
    InvalidPsfError,
)

OUTDIR_ENV = "COHERENT_QFI_OUTDIR"

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3

FIG1_PHASES = "0,pi/4,pi/2,3pi/4,pi"
FIG2_PHASES = "0,pi/4,pi/2"
DEFAULT_S_RANGE = "0:6:121"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return f"{v:.9g}"


_PI_TOKEN = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)?)\*?pi(?:/(\d+\.?\d*))?$")


def parse_phase(text: str) -> float:
    """A phase in radians: a float, or forms like ``pi``, ``3pi/4``, ``-pi/2``."""
    t = text.strip().lower().replace(" ", "")
    m = _PI_TOKEN.match(t)
    if m:
        coef = m.group(1)
        k = 1.0 if coef in ("", "+") else -1.0 if coef == "-" else float(coef)
        den = float(m.group(2)) if m.group(2) else 1.0
        return k * math.pi / den
    try:
        value = float(t)
    except ValueError:
        raise UsageError(f"cannot parse phase {text!r}") from None
    if not math.isfinite(value):
        raise UsageError(f"phase must be finite, got {text!r}")
    return value


def parse_phases(text: str):
    return [parse_phase(tok) for tok in text.split(",") if tok.strip()]


def parse_s_range(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"--s-range expects start:stop:count, got {text!r}")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"--s-range expects start:stop:count, got {text!r}") from None
    if count < 2 or not start <= stop or not (math.isfinite(start) and math.isfinite(stop)):
        raise UsageError(f"invalid s range {text!r}: need count >= 2 and start <= stop")
    return np.linspace(start, stop, count)


def parse_pair(text: str, name: str):
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise UsageError(f"{name} expects lo:hi, got {text!r}") from None
    return lo, hi


def parse_floats(text: str):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse number list {text!r}") from None


def load_config(path) -> dict:
    """``key=value`` lines; ``#`` comments; keys are long option names."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (p.strip() for p in line.split("=", 1))
            out[key.lstrip("-").replace("-", "_")] = value
    return out


def build_psf(args):
    if args.psf == "gaussian":
        return psf_mod.make_gaussian_psf(args.sigma)
    if not args.psf_file:
        raise UsageError("--psf file requires --psf-file PATH")
    return psf_mod.load_grid_psf(args.psf_file)


def _coherences(args, default_incoherent=True):
    out = []
    if args.phi:
        out.extend(parse_phases(args.phi))
    if getattr(args, "incoherent", False) or (not out and default_incoherent):
        out.append("incoherent")
    return out


# --- commands -------------------------------------------------------------


def cmd_qfi_sweep(args):
    psf = build_psf(args)
    s_values = parse_s_range(args.s_range)
    phases = parse_phases(args.phi or FIG1_PHASES)
    rows = []
    for s in s_values:
        for phi in phases:
            try:
                r = qfi.qfi_coherent(psf, float(s), phi)
                rows.append({"s": s, "phi": phi, "qfi": r.value, "method": r.method})
            except DegenerateStateError:
                rows.append({"s": s, "phi": phi, "qfi": None, "method": "diverging"})
    figure = None
    if args.figure:
        from .plotting import plot_qfi_sweep

        figure = lambda path: plot_qfi_sweep(rows, path, psf.momentum_variance, psf.width)  # noqa: E731
    return ("s", "phi", "qfi", "method"), rows, figure


def cmd_total_sweep(args):
    psf = build_psf(args)
    s_values = parse_s_range(args.s_range)
    phases = parse_phases(args.phi or FIG2_PHASES)
    rows = []
    for s in s_values:
        for phi in phases:
            r = qfi.qfi_sorted_total(psf, float(s), phi)
            c = r.context
            rows.append(
                {"s": s, "phi": phi, "f_total": r.value, "w1": c["w1"], "w2": c["w2"], "f1": c["f1"], "f2": c["f2"]}
            )
    figure = None
    if args.figure:
        from .plotting import plot_total_sweep

        figure = lambda path: plot_total_sweep(rows, path, psf.momentum_variance, psf.width)  # noqa: E731
    return ("s", "phi", "f_total", "w1", "w2", "f1", "f2"), rows, figure


def cmd_classical_sweep(args):
    psf = build_psf(args)
    s_values = parse_s_range(args.s_range)
    cohs = _coherences(args)
    rows = []
    for s in s_values:
        for coh in cohs:
            try:
                value = classical.classical_fisher_s(psf, float(s), coh)
            except DegenerateStateError:
                value = None
            rows.append({"s": s, "phi": coh, "phi_or_inc": coh, "f_classical": value})
    figure = None
    if args.figure:
        from .plotting import plot_classical_sweep

        figure = lambda path: plot_classical_sweep(rows, path, psf.momentum_variance, psf.width)  # noqa: E731
    return ("s", "phi_or_inc", "f_classical"), rows, figure


def cmd_sparrow(args, out):
    psf = build_psf(args)
    coh = "incoherent" if args.incoherent or not args.phi else parse_phase(args.phi)
    try:
        root = classical.sparrow_separation(psf, coh)
    except DegenerateCriterionError as exc:
        out.write(f"degenerate-criterion: {exc}\n")
        return
    out.write(f"{fmt(root)}\n")


def cmd_moments(args, out):
    psf = build_psf(args)
    table = psf_mod.overlap_table(psf)
    c_pi, c_0 = qfi.qfi_small_s_coefficients(psf)
    lines = [("p2", table.p2), ("p4", table.p4), ("p6", table.p6), ("c_pi", c_pi), ("c_0", c_0)]
    for s in parse_s_range(args.s_range):
        lines.append((f"delta({fmt(s)})", float(table.delta(s))))
    out.write("".join(f"{k}={fmt(v)}\n" for k, v in lines))


def cmd_mc(args, out):
    psf = build_psf(args)
    cohs = _coherences(args)
    bounds = parse_pair(args.bounds, "--bounds") if args.bounds else None
    s_list = parse_floats(args.s)
    if not s_list:
        raise UsageError("--s needs at least one separation")
    reports = []
    for s in s_list:
        for coh in cohs:
            cfg = estimation.McConfig(psf, s, coh, args.n, args.trials, bounds, args.seed)
            reports.append(estimation.estimation_experiment(cfg))
    if args.format == "kv":
        out.write("\n".join(r.to_kv() for r in reports))
    else:
        out.write(estimation.EstimationReport.csv_header() + "\n")
        out.write("".join(r.csv_row() + "\n" for r in reports))


def write_csv(header, rows, out):
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(fmt(row[k]) for k in header) + "\n")


# --- parser ---------------------------------------------------------------


def _common(p, s_range=DEFAULT_S_RANGE):
    p.add_argument("--psf", choices=("gaussian", "file"), default="gaussian")
    p.add_argument("--sigma", type=float, default=1.0, help="Gaussian PSF width")
    p.add_argument("--psf-file", help="two-column 'x amplitude' text file")
    p.add_argument("--config", help="key=value file; flags override it")
    p.add_argument("--out", help=f"output path (default: ${OUTDIR_ENV}/<command>.csv, else stdout)")
    if s_range is not None:
        p.add_argument("--s-range", default=s_range, help="start:stop:count")


def build_parser():
    parser = _Parser(prog="coherent-qfi", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, help_, phases in (
        ("qfi-sweep", "QFI of the coherent superposition vs separation", FIG1_PHASES),
        ("total-sweep", "probability-weighted QFI of the sorted channels", FIG2_PHASES),
    ):
        p = sub.add_parser(name, help=help_)
        _common(p)
        p.add_argument("--phi", help=f"comma-separated phases (default {phases})")
        p.add_argument("--figure", help="also render a figure to this path")

    p = sub.add_parser("classical-sweep", help="direct-imaging Fisher information vs separation")
    _common(p)
    p.add_argument("--phi", help="comma-separated phases")
    p.add_argument("--incoherent", action="store_true", help="include the incoherent mixture")
    p.add_argument("--figure", help="also render a figure to this path")

    p = sub.add_parser("sparrow", help="Sparrow separation of the midpoint intensity")
    _common(p, s_range=None)
    p.add_argument("--phi", help="relative phase")
    p.add_argument("--incoherent", action="store_true")

    p = sub.add_parser("moments", help="momentum moments and overlap samples")
    _common(p, s_range="0:4:5")

    p = sub.add_parser("mc", help="Monte Carlo MLE bias/variance against 1/(nF)")
    _common(p, s_range=None)
    p.add_argument("--s", default="2", help="comma-separated true separations")
    p.add_argument("--phi", help="comma-separated phases")
    p.add_argument("--incoherent", action="store_true")
    p.add_argument("--n", type=int, default=10_000, help="photons per trial")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--bounds", help="search range lo:hi (default 0:s+6 widths)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("csv", "kv"), default="csv")
    return parser


_TABLES = {"qfi-sweep": cmd_qfi_sweep, "total-sweep": cmd_total_sweep, "classical-sweep": cmd_classical_sweep}
_TEXT = {"sparrow": cmd_sparrow, "moments": cmd_moments, "mc": cmd_mc}


def _apply_config(parser, argv):
    args = parser.parse_args(argv)
    if not args.config:
        return args
    values = load_config(args.config)
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, value in values.items():
        if key not in known or key in ("config", "help"):
            raise UsageError(f"{args.config}: unknown key {key!r} for {args.command}")
        action = known[key]
        if action.nargs == 0:
            defaults[key] = value.lower() in ("1", "true", "yes", "on")
        else:
            defaults[key] = value
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def _open_output(args):
    if args.out:
        return open(args.out, "w", newline="\n")
    outdir = os.environ.get(OUTDIR_ENV)
    if outdir:
        return open(Path(outdir) / f"{args.command}.csv", "w", newline="\n")
    return None


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SystemExit as exc:  # argparse usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE

    try:
        if args.command in _TABLES:
            header, rows, figure = _TABLES[args.command](args)
            fh = _open_output(args)
            try:
                write_csv(header, rows, fh or sys.stdout)
            finally:
                if fh:
                    fh.close()
            if figure is not None:
                figure(args.figure)
        else:
            fh = _open_output(args)
            try:
                _TEXT[args.command](args, fh or sys.stdout)
            finally:
                if fh:
                    fh.close()
    except (UsageError, InvalidParameterError, InvalidPsfError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (CoherentQfiError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
