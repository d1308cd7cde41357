"""Command-line entry point: ``atiyah verify|dihedral|inequality|fuzz``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .arith import DEFAULT_INITIAL_BITS, PrecisionPolicy
from .harness import (
    EXIT_INVALID,
    cmd_dihedral,
    cmd_fuzz,
    cmd_inequality,
    cmd_verify,
    ConfigError,
    parse_int_range,
    parse_number,
    parse_number_list,
    render,
    timed,
)
from .inequalities import LambdaGrid

log = logging.getLogger("atiyah")


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which would read as "inconclusive"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--initial-bits", type=int, default=DEFAULT_INITIAL_BITS)
    p.add_argument("--max-bits", type=int, default=None,
                   help="precision cap (default 4096; ATIYAH_MAX_BITS overrides)")
    p.add_argument("--format", choices=("json", "csv", "text"), default="json")
    p.add_argument("--output", type=Path, help="write the report here instead of stdout")
    p.add_argument("--timing", action="store_true",
                   help="include wall-clock duration (makes reports non-reproducible)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="atiyah", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("verify", help="certify linear independence for a configuration file")
    p.add_argument("--config", required=True, type=Path)
    _common(p)

    p = sub.add_parser("dihedral", help="closed-form determinant for a dihedral configuration")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--a", default="", help="comma-separated increasing axis coordinates; write --a=-1,0,2 "
                        "when the first one is negative")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--radius", default="1")
    p.add_argument("--offset", default="0")
    p.add_argument("--cross-check", action="store_true")
    _common(p)

    p = sub.add_parser("inequality", help="evaluate or sweep one inequality")
    p.add_argument("--which", required=True,
                   choices=("conj2", "spec", "spec-eq", "n3", "lambda-zero"))
    p.add_argument("--m", default="", help="m, range 1-6, or list 1,2,3")
    p.add_argument("--n", default="3", help="n, range 3-6, or list")
    p.add_argument("--lambda", dest="lambdas", default=None, help="comma-separated lambdas")
    p.add_argument("--grid", default=None,
                   help="log:LO:HI:K | random:LO:HI:K | random:K | list:v1,v2,...")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    _common(p)

    p = sub.add_parser("fuzz", help="certify seeded random configurations")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--mode", choices=("general", "dihedral"), default="general")
    p.add_argument("--min-sep", type=float, default=1e-3,
                   help="minimum pairwise distance as a fraction of the box size")
    p.add_argument("--workers", type=int, default=1)
    _common(p)
    return parser


def _dispatch(args):
    policy = PrecisionPolicy.from_env(args.initial_bits, args.max_bits)
    if args.command == "verify":
        return cmd_verify, (args.config, policy), {}
    if args.command == "dihedral":
        axis = parse_number_list(args.a)
        return cmd_dihedral, (args.m, axis, args.n, args.cross_check, policy,
                              parse_number(args.radius), parse_number(args.offset)), {}
    if args.command == "inequality":
        m_values = parse_int_range(args.m)
        lambdas = None if args.lambdas is None else parse_number_list(args.lambdas)
        if not m_values:
            m_values = [len(lambdas)] if lambdas is not None and args.which != "spec-eq" else [0]
        grid = None if args.grid is None else LambdaGrid.parse(args.grid)
        return cmd_inequality, (args.which, m_values, parse_int_range(args.n), lambdas, grid,
                                args.seed, policy, args.workers), {}
    return cmd_fuzz, (args.count, args.seed, args.n_min, args.n_max, args.mode, policy,
                      args.min_sep, 1.0, args.workers), {}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        fn, fargs, fkwargs = _dispatch(args)
    except (ConfigError, ValueError) as exc:
        print(f"atiyah: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    report = timed(fn, *fargs, **fkwargs)
    log.info("%s finished in %.3fs with exit %d", args.command, report.duration_s,
             report.exit_code)
    if not args.timing:
        report.duration_s = None
    text = render(report, args.format)
    if args.output:
        args.output.write_text(text)
    else:
        sys.stdout.write(text)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
