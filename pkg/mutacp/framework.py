"""This module is the primary module of the toolkit's command line. It collects the functionality of the rest of the package."""

import sys

from mutacp import cli
from mutacp.exceptions import ParameterError, handle_error, log_exception
from mutacp.initialize import initialize


def main(argv: list[str] | None = None) -> int:
    """The entry point of the command line. Returns the process exit code."""
    try:
        args = cli.parse_args(argv)
    except ParameterError as error:
        sys.stderr.write(f"mutacp: {error}\n")
        return 2

    logger = initialize(args.log_level)
    sys.excepthook = log_exception(logger)
    logger.debug("Command %s started.", args.command)

    try:
        return args.handler(args)

    # A broken model rule is reported and never retried.
    except ParameterError as error:
        handle_error("Parameter Error", error, logger)
        sys.stderr.write(f"mutacp: {error}\n")
        return 2

    # We actually want to catch all exceptions possible here.
    # pylint: disable-next = broad-exception-caught
    except Exception as error:
        handle_error("Process Error", error, logger)
        sys.stderr.write(f"mutacp: {error}\n")
        return 1


def main_entry() -> None:
    """Console-script wrapper that exits with the code of main."""
    sys.exit(main())
