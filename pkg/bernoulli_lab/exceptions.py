"""
Error categories and the exit codes the command line maps them to.
"""


class LabError(Exception):
    """Base class for errors raised by the lab."""

    exit_code = 4


class ConfigurationError(LabError, ValueError):
    """Invalid domain, datum, grid or option values."""

    exit_code = 2


class ConvergenceError(LabError, RuntimeError):
    """A solve required by an experiment did not converge."""

    exit_code = 3


class InternalCheckError(LabError, RuntimeError):
    """A mathematical claim the lab relies on was violated."""

    exit_code = 4
