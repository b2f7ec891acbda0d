"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: config -> 2, data -> 3, I/O -> 4.
"""


class ElecError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(ElecError):
    """Invalid configuration value (bad ratio, unknown key, bad grammar)."""


class SchemaError(ElecError):
    """Dataset schema violated (missing/unknown column, bad field spec)."""


class DataParseError(ElecError):
    """Malformed data content; message carries the offending line number."""


class DimensionError(ElecError):
    """Array shape or width mismatch between connected components."""


class DomainError(ElecError):
    """Value outside the mathematical domain of an operation."""


class BindingError(ElecError):
    """Embedding store and dataset/adapter do not fit together."""


class StoreFormatError(ElecError):
    """Embedding-store or checkpoint file has a bad magic/version/header."""


class StoreCorruptError(ElecError):
    """Embedding-store or checkpoint file is truncated or inconsistent."""


class MetricUndefinedError(ElecError):
    """Requested metric is undefined for the given inputs (e.g. single-class AUC)."""
