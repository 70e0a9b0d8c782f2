"""
Main entry point of the MBSFN area formation simulator.

This module loads the configuration, parses the command line and dispatches
to the command handlers.
"""

import logging
import sys
from typing import List, Optional

from config.settings import Config
from handlers.commands import EXIT_USAGE, build_parser, run_command

logger = logging.getLogger(__name__)

COMMANDS = {
    "run": run_command,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Run the simulator CLI and return the exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        config = Config()
        logger.info("Configuration loaded successfully")
    except ValueError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_USAGE

    try:
        return COMMANDS[args.command](args, config)
    except KeyboardInterrupt:
        logger.warning("Interrupted")
        return 130
    except Exception as e:
        logger.error(f"Command {args.command} failed: {e}", exc_info=True)
        raise


if __name__ == '__main__':
    sys.exit(main())
