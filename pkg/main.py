import logging
import os
import sys
from typing import List, Optional

from commands import COMMANDS, build_parser
from commands.context import CommandOutcome, RunContext, failure
from errors import ArgumentError, MinkowskiError
from schemas.config import load_config
from services.export import write_report
from services.metrics import write_metrics
from settings import MH_OUT_DIR, MH_SEED, configure_logging

logger = logging.getLogger("mh")

DEFAULT_CONFIG = os.path.join(os.path.dirname(os.path.abspath(__file__)), "presets", "two-disk.yaml")


def apply_overrides(config, args):
    """CLI flags win over config values"""
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.tol is not None:
        if args.tol <= 0:
            raise ArgumentError(f"--tol must be positive, got {args.tol}")
        updates["equivalence_tol"] = args.tol
    if args.grid_step is not None:
        if args.grid_step <= 0:
            raise ArgumentError(f"--grid-step must be positive, got {args.grid_step}")
        updates["grid"] = config.grid.model_copy(update={"step": args.grid_step})
    if args.format is not None:
        updates["output"] = config.output.model_copy(update={"format": args.format})
    return config.model_copy(update=updates) if updates else config


def run(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging("DEBUG" if args.debug else None)
    if args.debug:
        logger.setLevel(logging.DEBUG)

    ctx = None
    try:
        config = load_config(args.config or DEFAULT_CONFIG)
        config = apply_overrides(config, args)
        if "seed" not in config.model_fields_set and args.seed is None:
            config = config.model_copy(update={"seed": MH_SEED})
        ctx = RunContext(config, args.out or config.output.directory or MH_OUT_DIR)
        logger.info(f"=== {args.command} (config {config.config_hash()[:12]}, seed {ctx.seed}) ===")
        outcome = COMMANDS[args.command].run(ctx, args)
    except MinkowskiError as e:
        logger.error(f"{args.command}: {type(e).__name__}: {e.detail}")
        outcome = failure(e)

    out = ctx.out if ctx is not None else (args.out or MH_OUT_DIR)
    if ctx is not None:
        path = write_report(os.path.join(out, f"{args.command}.json"), ctx.envelope(args.command, outcome))
        print(f"{args.command}: status {outcome.status}, report {path}")
    else:
        print(f"{args.command}: status {outcome.status}, {outcome.error}", file=sys.stderr)
    write_metrics(out)
    return outcome.status


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
