"""Exception hierarchy shared across the pipeline.

Each class maps to a CLI exit code: ConfigError -> 1, DataError -> 2,
NumericalError -> 3.
"""


class RiskDomainsError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(RiskDomainsError):
    """Invalid configuration or usage: bad flag values, inconsistent settings."""

    exit_code = 1


class DataError(RiskDomainsError):
    """Problems with input data: missing files, malformed records, id mismatches."""

    exit_code = 2


class NumericalError(RiskDomainsError):
    """Numerical failure: non-finite losses or gradients, degenerate matrices."""

    exit_code = 3
