import argparse
import os
from colorama import Fore, Style

from commands.context import CommandOutcome, RunContext
from errors import ArgumentError
from models.horofunction import CoarsePoint
from services.boundary import explore_fiber
from services.export import write_fiber

NAME = "fiber"
HELP = "Explore the coarse points lying over one weak boundary direction"


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--direction", type=float, nargs="+", required=True, help="Weak boundary direction")
    parser.add_argument("--candidates", nargs="+", help="Horofunction ids (default: all configured)")


def _print_digest(report) -> None:
    print(f"\n{Fore.CYAN}=== Fiber over {report.direction} ==={Style.RESET_ALL}")
    for r in report.records:
        if r.excluded:
            print(f"{r.id} - {Fore.RED}excluded{Style.RESET_ALL} ({r.note})")
        else:
            print(f"{r.id} - class {r.equivalence_class}, {Fore.GREEN}{r.busemann}{Style.RESET_ALL}")
    print(f"Classes: {report.classes}, minimum spread: {report.min_spread}")


def run(ctx: RunContext, args: argparse.Namespace) -> CommandOutcome:
    if len(args.direction) != ctx.config.norm.dimension:
        raise ArgumentError(f"direction has {len(args.direction)} coordinates, norm dimension is "
                            f"{ctx.config.norm.dimension}")
    ids = args.candidates or sorted(ctx.config.horofunctions)
    if not ids:
        raise ArgumentError("no candidate horofunctions configured")
    candidates = [CoarsePoint.of(ctx.horofunction(name), id=name) for name in ids]
    p = ctx.config.projection
    report = explore_fiber(ctx.norm, args.direction, candidates, ctx.grid, radii=p.radii,
                           samples=p.angular_samples, schedule=ctx.schedule)
    _print_digest(report)
    payload = {"fiber": report.model_dump(mode="json")}
    payload["files"] = [write_fiber(os.path.join(ctx.out, "fiber.csv"), report)]
    return CommandOutcome(3 if report.excluded else 0, payload)
