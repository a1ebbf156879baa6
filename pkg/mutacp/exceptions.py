"""This module contains the exception hierarchy and functions to handle errors in the toolkit."""

import logging
import traceback


class MutacpError(Exception):
    """Base class of all errors raised by the toolkit."""


class ParameterError(MutacpError, ValueError):
    """Raised when a rate, probability, cap or grid breaks the rules of the model."""


class AddressError(ParameterError):
    """Raised when a site address is not a vertex of the graph family."""


class DomainError(ParameterError):
    """Raised when parameters fall outside the domain of a closed form."""


class UnsupportedError(MutacpError):
    """Raised when an operation is not defined for a graph family."""


class GraphTooLargeError(MutacpError):
    """Raised when a graph exceeds the exact solver's vertex cap."""


def handle_error(message: str, error: Exception, logger: logging.Logger) -> None:
    """Handles an error caught by the command line framework.
    Logs the message, the error and the trace.

    Args:
        message: A message to prepend to the error message.
        error: The exception that should be handled.
        logger: The logger to report to.
    """
    error_msg = f"{message}: {repr(error)}\n\nTrace:\n{traceback.format_exc()}"
    logger.error(error_msg)


def log_exception(logger: logging.Logger) -> callable:
    """Creates a function to be used as an exception hook that logs any uncaught exception.

    Args:
        logger: The logger to report to.

    Returns:
        callable: A function that can be assigned to sys.excepthook.
    """
    def inner(exception_type, value, traceback_string):
        logger.error(f"Uncaught Exception:\nType: {exception_type}\nValue: {value}\nTrace: {traceback_string}")
    return inner
