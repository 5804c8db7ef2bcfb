import argparse

from commands.context import CommandOutcome, RunContext
from services.norm_core import validate_norm

NAME = "validate"
HELP = "Run the sampled norm invariant battery"


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--samples", type=int, help="Override validation.samples")


def run(ctx: RunContext, args: argparse.Namespace) -> CommandOutcome:
    # no fail-fast here: a failing norm still yields its findings
    nm = ctx.raw_norm()
    samples = args.samples or ctx.config.validation.samples
    report = validate_norm(nm, samples, ctx.config.validation.seed)
    return CommandOutcome(0 if report.passed else 1, {"validation": report.model_dump(mode="json"),
                                                       "failed": report.failed()})
