"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
ComputeError -> 3.
"""


class GevoError(Exception):
    """Base class for all package errors."""


class ConfigError(GevoError):
    """Invalid configuration, flags, or bindings."""


class DataError(GevoError):
    """Malformed input files: CSV, grammar, or model files."""


class GrammarError(DataError):
    """BNF grammar syntax or consistency error."""


class ComputeError(GevoError):
    """Numerical failure during training or evaluation."""


class SingularRegressionError(ComputeError):
    """Least-squares design matrix is rank deficient."""
