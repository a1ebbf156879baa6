"""This module defines the initialization to run when the command line starts."""

import logging

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def initialize(log_level: str = "WARNING") -> logging.Logger:
    """Configure the root log handler and return the toolkit's logger."""
    logging.basicConfig(level=log_level.upper(), format=LOG_FORMAT)
    logger = logging.getLogger("mutacp")
    logger.debug("Initializing.")
    return logger
