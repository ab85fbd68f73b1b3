# main.py
"""
Command-line entry point.

    python main.py run <config> [--override key=value ...] [--out DIR] [--svg] [--verbose]

Exit codes: 0 success, 2 configuration or usage error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Optional

from core.exceptions import ConfigError, GridError, ReconstructionError, SolverError
from routers.run import run_command
from utils.config import load_config

logger = logging.getLogger("shallowflow")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shallowflow", description="1D well-balanced shallow-water solver")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario from a config file")
    run.add_argument("config", help="path to a key = value config file")
    run.add_argument("--override", action="append", default=[], metavar="KEY=VALUE", help="override a config key (repeatable)")
    run.add_argument("--out", default=None, help="output directory (default: output_dir from the config)")
    run.add_argument("--svg", action="store_true", help="also write an SVG plot")
    run.add_argument("--verbose", action="store_true", help="debug logging")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args.config, args.override)
        result = run_command(config, args.out, args.svg)
    except (ConfigError, GridError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, ReconstructionError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        logger.error("[Main] cannot write outputs: %s", exc)
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    for name, path in result.metadata.artifacts.items():
        print(f"{name}: {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
