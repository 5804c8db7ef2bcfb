import argparse
import os

from commands.context import CommandOutcome, RunContext
from services.boundary import project_with_evidence
from services.export import write_rows

NAME = "project"
HELP = "Project a horofunction to its weak boundary direction"


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--horofunction", required=True, help="Id of a configured horofunction")


def run(ctx: RunContext, args: argparse.Namespace) -> CommandOutcome:
    f = ctx.horofunction(args.horofunction)
    p = ctx.config.projection
    evidence = project_with_evidence(ctx.norm, f, p.radii, p.angular_samples, p.min_tol, p.drift_tol, ctx.seed)
    minima = [{"radius": m.radius, "value": float(m.value), "point": m.point.tolist(), "components": m.components,
               "diameter": float(m.diameter)} for m in evidence.minima]
    payload = {"id": args.horofunction, "direction": evidence.weak_point.direction.vector.tolist(),
               "drift": float(evidence.drift), "minima": minima}
    if ctx.format == "csv":
        n = f.dimension
        rows = ([m.radius, float(m.value), *map(float, m.point), m.components, float(m.diameter)]
                for m in evidence.minima)
        header = ["radius", "minimum"] + [f"x{i + 1}" for i in range(n)] + ["components", "diameter"]
        payload["file"] = write_rows(os.path.join(ctx.out, f"{args.horofunction}-projection.csv"), header, rows)
    return CommandOutcome(0, payload)
