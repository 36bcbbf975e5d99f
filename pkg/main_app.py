#!/usr/bin/env python3
"""
RankOOD command-line entry point

Every sub-command runs one pipeline stage against a run directory and
prints a JSON summary of what it wrote on stdout; logs go to stderr.

Exit codes: 0 success, 2 validation, 3 dependency, 4 numerical failure.
"""

import argparse
import json
import sys
from typing import List, Optional

from pydantic import ValidationError

from config import config
from pipeline.commands import register_all, resolve_config
from pipeline.core.errors import InputValidationError, RankOODError
from pipeline.core.logging import StageLogger, configure_logging
from pipeline.services.stage_service import get_stage_service

stage_logger = StageLogger()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rankood",
        description="RankOOD - rank-based out-of-distribution detection pipeline",
    )
    subparsers = parser.add_subparsers(dest="command", metavar="command", required=True)
    register_all(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse, run one stage and map failures onto exit codes."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors and 0 after --help
        return int(e.code or 0)

    configure_logging(
        level=args.log_level or config.log_level,
        renderer=args.log_format or config.log_format,
    )

    try:
        pipeline_config = resolve_config(args)
        result = args.handler(get_stage_service(pipeline_config), args)
    except ValidationError as e:
        stage_logger.log_error(args.command, str(e), InputValidationError.exit_code)
        print(f"error: invalid configuration: {e}", file=sys.stderr)
        return InputValidationError.exit_code
    except RankOODError as e:
        stage_logger.log_error(args.command, str(e), e.exit_code, error_type=type(e).__name__)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code

    print(json.dumps(result, indent=2, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    exit_code = main()
    sys.exit(exit_code)
