"""Command line entry point ``twl``.

Usage::

    twl <experiment> [--config PATH] [--seed N] [--jobs N] [--out DIR]
                     [--check] [--instances N] [--set KEY=VALUE ...]

Exit codes: 0 success, 1 usage or configuration error (including an
incomplete spectrum, whose message names the required ``k_max``),
2 numerical failure, 3 acceptance threshold missed under ``--check``.
"""

import argparse
import logging
import sys

from ..exceptions import ConfigError, NumericalFailure, PreconditionError
from .config import load_config
from .experiments import RUNNERS, rows_to_csv, run, write_result

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_THRESHOLD = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="twl", description="Toeplitz spectral asymptotics experiments")
    parser.add_argument("experiment", choices=sorted(RUNNERS))
    parser.add_argument("--config", metavar="PATH", help="key = value configuration file")
    parser.add_argument("--seed", type=int, help="random seed (overrides the config)")
    parser.add_argument("--jobs", type=int, default=1, help="worker threads for block sweeps")
    parser.add_argument("--out", metavar="DIR", help="output directory (overrides output.dir)")
    parser.add_argument("--check", action="store_true",
                        help="exit 3 when the experiment misses its acceptance threshold")
    parser.add_argument("--instances", type=int, help="instances for hessian-check")
    parser.add_argument("--no-cache", action="store_true", help="do not read or write the spectrum cache")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a configuration key")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {"seed": args.seed, "output.dir": args.out, "instances": args.instances}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            print(f"twl: error: --set expects KEY=VALUE, got {item!r}", file=sys.stderr)
            return EXIT_USAGE
        overrides[key.strip()] = value.strip()
    if args.jobs < 1:
        print("twl: error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args.config, overrides)
        result = run(args.experiment, cfg, jobs=args.jobs, use_cache=not args.no_cache)
    except ConfigError as exc:
        print(f"twl: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PreconditionError as exc:
        print(f"twl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalFailure as exc:
        print(f"twl: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    csv_path, _ = write_result(result, cfg, cfg.output_dir)
    sys.stdout.write(rows_to_csv(result.rows))
    status = "PASS" if result.passed else "FAIL"
    print(f"{args.experiment}: {status} ({len(result.rows)} rows, written to {csv_path})",
          file=sys.stderr)
    if args.check and not result.passed:
        return EXIT_THRESHOLD
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
