# cli/app.py
"""
Command-line surface binding the pipeline end to end.

Exit codes: 0 success, 1 usage error, 2 data or validation error,
3 numerical failure. Diagnostics go to stderr as a single line.
"""
import argparse
import logging
import sys
from typing import Optional, Sequence

from cli.commands import evaluate, featurize, predict, synth, train

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

COMMANDS = (synth, featurize, train, predict, evaluate)


class UsageError(Exception):
    """Raised instead of exiting when argv does not match the grammar."""


class CliParser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> CliParser:
    parser = CliParser(prog='eol', description="Battery end-of-life prediction with a variational BNN.")
    subparsers = parser.add_subparsers(dest='command', required=True, parser_class=CliParser)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    """Parses argv, runs one subcommand and maps failures onto exit codes."""
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        # --help and --version exit through argparse.
        return int(e.code or 0)

    try:
        args.handler(args)
    except ArithmeticError as e:
        print(f"error: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except Exception as e:
        logger.critical(f"Unexpected failure in '{args.command}': {e}", exc_info=True)
        print(f"error: unexpected failure: {e}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK
