import argparse
from colorama import Fore, Style

from commands.context import CommandOutcome, RunContext
from services.boundary import classify_space_regularity
from models.gauss import SINGULAR

NAME = "classify"
HELP = "Sweep unit directions and classify the space as regular or singular"


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--resolution", type=int, help="Override regularity.angular_resolution")


def run(ctx: RunContext, args: argparse.Namespace) -> CommandOutcome:
    r = ctx.config.regularity
    report = classify_space_regularity(ctx.norm, args.resolution or r.angular_resolution, r.tolerance,
                                       seed=ctx.seed)
    color = Fore.YELLOW if report.verdict == SINGULAR else Fore.GREEN
    print(f"{ctx.norm.label} - {color}{report.verdict}{Style.RESET_ALL} "
          f"({len(report.singular_directions)} singular directions)")
    for d in report.singular_directions:
        print(f"  {d}")
    if report.declared_unconfirmed:
        print(f"  {Fore.RED}declared but regular: {report.declared_unconfirmed}{Style.RESET_ALL}")
    return CommandOutcome(0, {"regularity": report.model_dump(mode="json")})
