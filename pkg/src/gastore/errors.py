"""Exception types shared across the package."""


class GastoreError(Exception):
    """Base class for package errors."""


class ConfigError(GastoreError):
    """Invalid or unparsable run configuration (CLI exit code 2)."""


class NumericError(GastoreError):
    """Numerical failure during a computation (CLI exit code 3)."""


class GridConstructionError(GastoreError):
    """The storage grid generator chains cannot make progress."""


class InstanceSizeError(GastoreError):
    """A brute-force computation was refused because the instance is too large."""
