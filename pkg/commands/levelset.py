import argparse
import os

from commands.context import CommandOutcome, RunContext
from errors import ArgumentError, EmptyLevelSetError
from models.vectors import BoundingBox
from services import metrics
from services.export import write_level_set, write_svg
from services.horofunctions import horosphere_sample

NAME = "levelset"
HELP = "Sample a horosphere {f = level} inside the grid box"


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--horofunction", required=True, help="Id of a configured horofunction")
    parser.add_argument("--level", type=float, default=0.0, help="Level value (default: 0)")
    parser.add_argument("--resolution", type=int, default=64, help="Cells per box side (default: 64)")


def run(ctx: RunContext, args: argparse.Namespace) -> CommandOutcome:
    n = ctx.config.norm.dimension
    if ctx.format == "svg" and n != 2:
        raise ArgumentError(f"svg rendering needs a planar norm, this one is {n}-dimensional")
    f = ctx.horofunction(args.horofunction)
    g = ctx.config.grid
    box = BoundingBox.cube(g.low, g.high, n)
    sample = horosphere_sample(ctx.norm, f, args.level, box, args.resolution)
    if sample.empty:
        metrics.DOMAIN_ERRORS.labels(error="EmptyLevelSetError").inc()
        raise EmptyLevelSetError(f"{args.horofunction}: {sample.diagnostic}")
    payload = {"id": args.horofunction, "level": args.level, "points": int(len(sample.points)),
               "polylines": len(sample.polylines), "max_residual": float(sample.max_residual),
               "diagnostic": sample.diagnostic}
    stem = os.path.join(ctx.out, f"{args.horofunction}-level-{args.level:g}")
    payload["files"] = [write_level_set(f"{stem}.csv", sample)]
    if ctx.format == "svg":
        payload["files"].append(write_svg(f"{stem}.svg", sample, box.low, box.high))
    return CommandOutcome(0, payload)
