"""Command line: ``quench-design <subcommand> [--config PATH] [flags]``."""
from __future__ import annotations

import argparse
import sys

from .errors import ConfigurationError
from .protocol import WORKERS_ENV
from .runner import EXIT_CONFIG, load_config, main_run

SUBCOMMANDS = {
    "run": None,  # experiment taken from the config file
    "sweep-ts": "sweep-ts",
    "predict": "predict",
    "oracle": "oracle",
    "haar-bench": "haar-bench",
}


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quench-design",
                                description="Frame-potential numerics for quenched random Hamiltonians.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="TOML experiment file")
        s.add_argument("--seed", type=_u64, help="master seed (overrides the file)")
        s.add_argument("--workers", type=_positive,
                       help=f"worker processes (default: file, then ${WORKERS_ENV}, then 1)")
        s.add_argument("--out", help="output directory (overrides the file)")
        s.add_argument("--resume", action="store_true",
                       help="continue from a checkpoint with the same config hash")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"seed": args.seed, "workers": args.workers, "out": args.out}
    try:
        cfg = load_config(args.config, SUBCOMMANDS[args.command], overrides)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return main_run(cfg, args.resume)


if __name__ == "__main__":
    sys.exit(main())
