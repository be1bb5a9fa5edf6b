"""``burgers2d <command> --config <path> [--out <dir>]``.

Exit codes: 0 completed, 1 configuration error, 2 diverged or singular.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import COMMANDS, parse_config
from .errors import ConfigError
from .runner import run


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="burgers2d",
                                description="2-D coupled Burgers' solvers")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", help="output directory (overrides out_dir)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with open(args.config) as fh:
            text = fh.read()
        cfg = parse_config(text, command=args.command)
    except (OSError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    if args.out:
        cfg.out_dir = args.out
    summary = run(cfg)
    print(f"{cfg.command}: {summary.status} ({summary.steps} steps, "
          f"{summary.wall_seconds:.2f} s)")
    if summary.message:
        print(summary.message)
    return 0 if summary.ok else 2


if __name__ == "__main__":
    sys.exit(main())
