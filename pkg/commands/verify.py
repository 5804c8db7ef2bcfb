import argparse

from commands.context import CommandOutcome, RunContext
from services.verification import VerificationSuite, log_result, passed, print_summary

NAME = "verify-paper"
HELP = "Run the acceptance battery and print a per-criterion table"


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--only", type=int, nargs="+", help="Run only these criterion numbers (1-10)")
    parser.add_argument("--quick", action="store_true", help="Reduced sample counts")


def run(ctx: RunContext, args: argparse.Namespace) -> CommandOutcome:
    p, r = ctx.config.projection, ctx.config.regularity
    suite = VerificationSuite(ctx.norm, ctx.grid, ctx.schedule, tol=ctx.tol, seed=ctx.seed, radii=p.radii,
                              angular_samples=p.angular_samples, resolution=r.angular_resolution, quick=args.quick)
    records = suite.run(args.only)
    for record in records:
        log_result(record)
    print_summary(records)
    payload = {"criteria": [r.model_dump(mode="json") for r in records], "criterion_tolerances": suite.tolerances()}
    return CommandOutcome(0 if passed(records) else 1, payload)
