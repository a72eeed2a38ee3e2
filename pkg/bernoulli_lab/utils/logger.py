"""
Console logging with colors.
"""

import logging

import colorlog

LOGGER_NAME = "bernoulli_lab"


def setup_logger(verbose: bool = False) -> logging.Logger:
    """
    Configure the package logger.

    Args:
        verbose: Log DEBUG messages when True, INFO otherwise

    Returns:
        The configured ``bernoulli_lab`` logger
    """
    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)

    if not any(getattr(h, "_bernoulli_lab", False) for h in logger.handlers):
        handler = colorlog.StreamHandler()
        handler.setFormatter(colorlog.ColoredFormatter(
            "%(log_color)s%(asctime)s %(levelname)-8s%(reset)s %(name)s: %(message)s",
            datefmt="%H:%M:%S",
            log_colors={
                "DEBUG": "cyan",
                "INFO": "green",
                "WARNING": "yellow",
                "ERROR": "red",
                "CRITICAL": "red,bg_white",
            },
        ))
        handler._bernoulli_lab = True
        logger.addHandler(handler)
    logger.propagate = False

    return logger
