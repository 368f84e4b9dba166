"""``slucoex`` command: run one scenario, sweep a grid, or train a learner.

Log verbosity comes from the ``SLUCOEX_LOG`` environment variable
(``debug``, ``info``, ``warning``; default ``warning``).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import typing
from typing import Optional, Sequence

from ..config import CONFIG_KEYS, RL_SCHEMES, ConfigError, RunConfig
from .config_io import parse_config
from .matrix import Grid, parse_grid, rows_to_csv, run_matrix

log = logging.getLogger("slucoex")


def _setup_logging() -> None:
    level = os.environ.get("SLUCOEX_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(asctime)s %(levelname)s %(message)s", stream=sys.stderr)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    """One ``--key`` flag per config field; values are parsed like file values."""
    hints = typing.get_type_hints(RunConfig)
    for key in CONFIG_KEYS:
        p.add_argument(f"--{key.replace('_', '-')}", dest=f"cfg_{key}", metavar=hints[key].__name__
                       if isinstance(hints[key], type) else "VALUE", default=None)


def _overrides(ns: argparse.Namespace) -> dict:
    return {k[4:]: v for k, v in vars(ns).items() if k.startswith("cfg_") and v is not None}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="slucoex", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one configuration")
    p.add_argument("--config", help="flat key = value file")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    _add_config_flags(p)

    p = sub.add_parser("sweep", help="run a grid of schemes, user counts and seeds")
    p.add_argument("--grid", required=True, help="grid file")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")

    p = sub.add_parser("train", help="train a learner and save its networks")
    p.add_argument("--config", help="flat key = value file")
    p.add_argument("--checkpoint", required=True, help="output checkpoint path")
    _add_config_flags(p)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    _setup_logging()
    ns = build_parser().parse_args(argv)
    try:
        if ns.command == "run":
            cfg = parse_config(ns.config, _overrides(ns))
            rows = run_matrix([cfg], ns.out)
            if ns.out is None:
                sys.stdout.write(rows_to_csv(rows))
        elif ns.command == "sweep":
            grid: Grid = parse_grid(ns.grid)
            rows = run_matrix(grid, ns.out, jobs=ns.jobs)
            if ns.out is None:
                sys.stdout.write(rows_to_csv(rows))
        elif ns.command == "train":
            ov = _overrides(ns)
            cfg = parse_config(ns.config, ov)
            if cfg.scheme not in RL_SCHEMES:
                if "scheme" in ov or cfg.scheme != RunConfig.scheme:
                    raise ConfigError(f"train needs a learning scheme ({', '.join(RL_SCHEMES)})")
                cfg = cfg.replace(scheme="cghdrl")  # no scheme given: default learner
            from ..rl import checkpoint
            from ..rl.agent import train
            agent = train(cfg, log=log.info)
            checkpoint.save(ns.checkpoint, agent.networks())
            print(f"saved {cfg.scheme} networks to {ns.checkpoint}")
    except (ConfigError, OSError) as exc:
        print(f"slucoex: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
