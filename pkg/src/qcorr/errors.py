class QcorrError(Exception):
    """Base class for every error raised by qcorr."""


class ResourceError(QcorrError):
    """A request exceeds a configured resource limit (e.g. the qubit cap)."""


class LayoutError(QcorrError, ValueError):
    """Register layout mismatch: unknown or duplicate registers, overlaps, shape errors."""


class PreconditionError(QcorrError, ValueError):
    """An operation was called on inputs outside its domain."""


class InputError(QcorrError, ValueError):
    """An input file could not be turned into a valid array."""


class ConfigError(QcorrError, ValueError):
    """Invalid settings or run configuration."""
