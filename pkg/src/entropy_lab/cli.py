"""``entropy-lab`` command line.

    entropy-lab run <preset> [--out DIR] [--seed N] [--threads N] [--format csv|json|both]
    entropy-lab run --config PATH [...]
    entropy-lab list

Exit codes: 0 when every assertion passes, 1 when one fails, 2 for usage,
config or domain errors.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError, load_config
from .errors import EntropyLabError
from .experiments import run_config, write_outputs
from .presets import PRESETS, get_preset

EXIT_OK, EXIT_ASSERT, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _seed(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="entropy-lab", description="Entropy experiments with deterministic CSV/JSON output.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    run = sub.add_parser("run", help="run a preset or a config file")
    run.add_argument("preset", nargs="?", help="one of: " + ", ".join(PRESETS))
    run.add_argument("--config", help="path to a JSON experiment config")
    run.add_argument("--out", default="results", help="output directory (default: results)")
    run.add_argument("--seed", type=_seed, default=None, help="seed for sampled batteries")
    run.add_argument("--threads", type=_positive_int, default=None,
                     help="worker threads (default: $ENTROPY_LAB_THREADS or 1)")
    run.add_argument("--format", choices=("csv", "json", "both"), default="both")
    sub.add_parser("list", help="list presets")
    return p


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("ENTROPY_LAB_THREADS")
    if env is None or env == "":
        return 1
    try:
        return _positive_int(env)
    except argparse.ArgumentTypeError as exc:
        raise ConfigError("ENTROPY_LAB_THREADS", str(exc)) from None


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "list":
        for name in PRESETS:
            print(name)
        return EXIT_OK

    if (args.preset is None) == (args.config is None):
        parser.error("give exactly one of a preset name or --config")
    if args.preset is not None and args.preset not in PRESETS:
        parser.error(f"unknown preset {args.preset!r} (choose from {', '.join(PRESETS)})")

    try:
        threads = _threads(args)
        cfg = get_preset(args.preset) if args.preset else load_config(args.config)
        outcome = run_config(cfg, seed=args.seed, threads=threads)
    except ConfigError as exc:
        print(f"entropy-lab: config error at {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EntropyLabError as exc:
        print(f"entropy-lab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE

    write_outputs(outcome, args.out, args.format, threads)
    for a in outcome.assertions:
        status = "PASS" if a.passed else "FAIL"
        print(f"{status} {a.experiment}: {a.label} (value={a.value!r}, {a.bound})")
    failing = outcome.failing()
    if failing:
        names = "; ".join(f"{a.experiment}/{a.label}" for a in failing)
        print(f"entropy-lab: assertion failed: {names}", file=sys.stderr)
        return EXIT_ASSERT
    return EXIT_OK


if __name__ == "__main__":   # pragma: no cover
    sys.exit(main())
