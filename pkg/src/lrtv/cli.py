"""Command-line interface.

Exit codes: 0 success (or convergence), 2 usage error, 3 I/O error,
4 solver hit its iteration cap, 5 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

from . import io
from .errors import ConfigError, ImageFormatError, InvalidArgumentError, InvalidInputError, StepFailureError
from .experiment import METHODS, REPORT_COLUMNS, read_plan, run_experiment, run_solver
from .metrics import numerical_rank, psnr
from .problems import degrade
from .solver import SolverConfig
from .surrogates import surrogate_table
from .tv import difference_map

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NOT_CONVERGED = 4
EXIT_SOLVER = 5


class CommandError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _load(reader, path, what):
    try:
        return reader(path)
    except FileNotFoundError:
        raise CommandError(f"{what} not found: {path}", EXIT_IO) from None
    except (OSError, ImageFormatError, InvalidInputError) as err:
        raise CommandError(f"cannot read {what} {path}: {err}", EXIT_IO) from None


def _save(writer, value, path, what):
    try:
        writer(value, path)
    except OSError as err:
        raise CommandError(f"cannot write {what} {path}: {err}", EXIT_IO) from None


def _fmt_db(value):
    return "inf" if math.isinf(value) else f"{value:.6f}"


def cmd_degrade(args):
    X = _load(io.read_image, args.input, "input image")
    try:
        obs = degrade(
            X,
            fraction=args.fraction,
            seed=args.seed,
            noise_psnr=args.noise_psnr,
            erase_column=args.erase_column,
            erase_row=args.erase_row,
        )
    except InvalidArgumentError as err:
        raise CommandError(str(err), EXIT_USAGE) from None
    _save(io.write_image, obs.observed, args.out_image, "observation")
    _save(io.write_mask, obs.mask, args.out_mask, "mask")
    print(f"observed={int(obs.mask.sum())} total={obs.mask.size}")
    if args.noise_psnr is not None:
        print(f"psnr_db={_fmt_db(obs.achieved_psnr)}")
    return EXIT_OK


def cmd_recover(args):
    M = _load(io.read_image, args.observed, "observation")
    mask = _load(io.read_mask, args.mask, "mask")
    if args.config is not None:
        try:
            config = io.read_config(args.config)
        except FileNotFoundError:
            raise CommandError(f"config not found: {args.config}", EXIT_IO) from None
        except ConfigError as err:
            raise CommandError(f"{args.config}: {err}", EXIT_USAGE) from None
    else:
        config = SolverConfig()
    if M.shape != mask.shape:
        raise CommandError(f"observation {M.shape} and mask {mask.shape} differ in shape", EXIT_USAGE)
    if not mask.any():
        raise CommandError(f"mask {args.mask} has no observed entries", EXIT_USAGE)
    try:
        sol = run_solver(args.method, M, mask, config, args.constrained)
    except StepFailureError as err:
        if args.trace_csv and getattr(err, "trace", None) is not None:
            _save(io.write_trace_csv, err.trace, args.trace_csv, "trace")
        print(f"error: solver failed: {err}", file=sys.stderr)
        return EXIT_SOLVER
    out = sol.data_consistent if args.constrained else sol.recovered
    _save(io.write_image, out, args.out, "recovered image")
    if args.trace_csv:
        _save(io.write_trace_csv, sol.trace, args.trace_csv, "trace")
    print(f"termination={sol.termination_reason} iterations={len(sol.trace)}")
    return EXIT_OK if sol.converged else EXIT_NOT_CONVERGED


def cmd_evaluate(args):
    ref = _load(io.read_image, args.reference, "reference")
    cand = _load(io.read_image, args.candidate, "candidate")
    if ref.shape != cand.shape:
        raise CommandError(f"shape mismatch: {ref.shape} vs {cand.shape}", EXIT_USAGE)
    if args.difference_map:
        D = difference_map(cand)
        peak = D.max()
        _save(io.write_image, D / peak if peak > 0 else D, args.difference_map, "difference map")
    print(f"psnr_db={_fmt_db(psnr(ref, cand))} rank={numerical_rank(cand)}")
    return EXIT_OK


def cmd_benchmark(args):
    try:
        plan = read_plan(args.plan)
    except FileNotFoundError:
        raise CommandError(f"plan not found: {args.plan}", EXIT_IO) from None
    except ConfigError as err:
        raise CommandError(f"{args.plan}: {err}", EXIT_USAGE) from None
    try:
        rows = run_experiment(plan, args.out_dir, jobs=args.jobs)
    except (FileNotFoundError, ImageFormatError) as err:
        raise CommandError(f"cannot read plan input: {err}", EXIT_IO) from None
    failed = sum(r["status"] == "failed" for r in rows)
    print(f"rows={len(rows)} failed={failed} report={Path(args.out_dir) / 'report.csv'}")
    return EXIT_SOLVER if rows and failed == len(rows) else EXIT_OK


def cmd_surrogates(args):
    try:
        x, columns = surrogate_table(args.lam, args.gamma, args.p, args.xmax, args.steps)
    except InvalidArgumentError as err:
        raise CommandError(str(err), EXIT_USAGE) from None

    def write(_, path):
        with io.atomic_write(path, "w") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["x", *columns])
            for i, xi in enumerate(x):
                writer.writerow([repr(float(xi)), *(repr(float(c[i])) for c in columns.values())])

    _save(write, None, args.out_csv, "surrogate table")
    return EXIT_OK


def _fraction(text):
    value = float(text)
    if not 0 < value <= 1:
        raise argparse.ArgumentTypeError(f"fraction must lie in (0, 1], got {text}")
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lrtv",
        description="Low-rank plus total variation image recovery.",
        epilog="Exit codes: 0 ok, 2 usage, 3 I/O, 4 iteration cap reached, 5 solver failure.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("degrade", help="mask (and optionally add noise to) an image")
    p.add_argument("--input", required=True)
    p.add_argument("--fraction", type=_fraction, default=1.0)
    p.add_argument("--noise-psnr", type=float, default=None, help="target PSNR (dB) of the noisy observed entries")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-image", required=True, help=".pgm (quantized) or .npy (exact)")
    p.add_argument("--out-mask", required=True)
    erase = p.add_mutually_exclusive_group()
    erase.add_argument("--erase-column", type=int, default=None)
    erase.add_argument("--erase-row", type=int, default=None)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser(
        "recover",
        help="recover an image from observations",
        epilog="Trace CSV columns: " + ", ".join(io.TRACE_COLUMNS),
    )
    p.add_argument("--observed", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--config", default=None, help="key = value solver config file")
    p.add_argument("--method", choices=tuple(METHODS), default="irnn-tv")
    p.add_argument("--constrained", action="store_true", help="continuation towards exact data fit")
    p.add_argument("--out", required=True)
    p.add_argument("--trace-csv", default=None)
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("evaluate", help="print PSNR and numerical rank of a candidate")
    p.add_argument("--reference", required=True)
    p.add_argument("--candidate", required=True)
    p.add_argument("--difference-map", default=None, help="also write the candidate's normalized difference map")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser(
        "benchmark",
        help="run an experiment plan",
        epilog="Report CSV columns: " + ", ".join(REPORT_COLUMNS),
    )
    p.add_argument("--plan", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser(
        "surrogates",
        help="tabulate the rank surrogates on a grid",
        epilog="CSV columns: x, L1, Lp, Logarithm, MCP, CappedL1, ETP, Geman, Laplace",
    )
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--xmax", type=float, default=2.0)
    p.add_argument("--steps", type=int, default=201)
    p.add_argument("--out-csv", required=True)
    p.set_defaults(func=cmd_surrogates)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CommandError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.code


if __name__ == "__main__":
    sys.exit(main())
