"""Command-line interface: run experiments, verify invariants, check expressions."""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, load_config, validate_config
from .expr import ParseError, parse_expression, to_string
from .runner import run


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="pshlab",
        description="numerical laboratory for equivariant plurisubharmonic "
                    "potentials: positivity certificates, Haar averaging, "
                    "gradient flows, moment-map degree checks")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the experiment described by a config file")
    p_run.add_argument("config", help="TOML experiment config")

    p_verify = sub.add_parser("verify", help="run the invariant suite on the "
                                             "built-in corpus")
    p_verify.add_argument("--seed", type=int, default=1)
    p_verify.add_argument("--out", default="pshlab-verify")

    p_parse = sub.add_parser("parse-check", help="parse an expression and print "
                                                 "its normal form")
    p_parse.add_argument("expression")
    p_parse.add_argument("--dim", type=int, required=True)

    args = parser.parse_args(argv)

    if args.command == "parse-check":
        try:
            e = parse_expression(args.expression, args.dim)
        except ParseError as err:
            print(f"error: {err}", file=sys.stderr)
            return 1
        print(to_string(e))
        return 0

    if args.command == "verify":
        cfg = validate_config({"kind": "verify", "seed": args.seed,
                               "output": args.out},
                              source_text=f"kind/verify seed/{args.seed}")
        report = run(cfg)
        _print_outcome(report)
        return 0 if report.passed else 1

    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    report = run(cfg)
    _print_outcome(report)
    return 0 if report.passed else 1


def _print_outcome(report):
    for r in report.results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}"
              + (f"  ({r.detail})" if r.detail else ""))
    n = sum(1 for r in report.results if r.passed)
    print(f"{report.kind}: {'PASS' if report.passed else 'FAIL'} "
          f"({n}/{len(report.results)} checks), "
          f"{len(report.artifacts)} artifact file(s)")


if __name__ == "__main__":
    sys.exit(main())
