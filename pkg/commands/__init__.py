import argparse

from commands import classify, fiber, horofunction, levelset, project, validate, verify

COMMANDS = {m.NAME: m for m in (validate, horofunction, project, levelset, fiber, classify, verify)}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="minkowski-horofunctions",
                                     description="Horofunctions and ideal boundaries of singular Minkowski spaces")
    parser.add_argument("--config", type=str, help="YAML run configuration (default: presets/two-disk.yaml)")
    parser.add_argument("--seed", type=int, help="Override the config seed")
    parser.add_argument("--grid-step", type=float, help="Override grid.step")
    parser.add_argument("--tol", type=float, help="Override equivalence_tol")
    parser.add_argument("--out", type=str, help="Output directory for files, report and metrics")
    parser.add_argument("--format", choices=["csv", "svg", "report"], help="Override output.format")
    parser.add_argument("--debug", action="store_true", help="Enable debug logging")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, module in COMMANDS.items():
        sub = subparsers.add_parser(name, help=module.HELP)
        module.add_arguments(sub)
    return parser
