"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError means the run never started
(exit 2), everything else is a runtime failure (exit 1).
"""


class ContractViolationError(ValueError):
    """An operation was called with inputs that break its contract."""


class IngestionError(OSError):
    """A dataset directory is missing mandatory files."""


class FormatError(ValueError):
    """A dataset file exists but its contents are malformed."""


class DomainError(ValueError):
    """A numeric argument lies outside the validity window of a routine."""


class NumericError(ArithmeticError):
    """A numerical routine (SVD, eigendecomposition) failed to converge."""


class PoolingDegenerateError(ValueError):
    """Requested pooled size is not smaller than the current graph."""


class ConfigError(ValueError):
    """User-supplied configuration is invalid; no computation was started."""
