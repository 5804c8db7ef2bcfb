import argparse
import logging
import os
import numpy as np

from commands.context import CommandOutcome, RunContext
from errors import ArgumentError
from services.export import write_values
from services.flag_sequences import project_to_horofunction
from services.horofunctions import grid_points

NAME = "horofunction"
HELP = "Evaluate a horofunction (or the limit of a sequence) on the probe grid"

logger = logging.getLogger("mh.commands.horofunction")


def add_arguments(parser: argparse.ArgumentParser) -> None:
    target = parser.add_mutually_exclusive_group(required=True)
    target.add_argument("--sequence", help="Id of a configured sequence; its limit horofunction is evaluated")
    target.add_argument("--horofunction", help="Id of a configured horofunction")


def run(ctx: RunContext, args: argparse.Namespace) -> CommandOutcome:
    if args.sequence:
        f = project_to_horofunction(ctx.norm, ctx.sequence(args.sequence), probe=ctx.grid, schedule=ctx.schedule)
        name = args.sequence
    else:
        f = ctx.horofunction(args.horofunction)
        name = args.horofunction
    if f.dimension != ctx.config.norm.dimension:
        raise ArgumentError(f"{name}: {f.dimension}-dimensional horofunction for a "
                            f"{ctx.config.norm.dimension}-dimensional norm")
    points = grid_points(ctx.grid)
    values = f.values(points)
    payload = {"id": name, "horofunction": f.describe(), "points": int(len(points)),
               "range": [float(np.min(values)), float(np.max(values))]}
    provenance = {"id": name, "provenance": f.provenance, "config_hash": ctx.config.config_hash(),
                  "seed": ctx.seed, "base": f.base.tolist()}
    payload["file"] = write_values(os.path.join(ctx.out, f"{name}.csv"), points, values, provenance)
    return CommandOutcome(0, payload)
