"""Exception hierarchy shared by every module."""


class PandoraError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(PandoraError, ValueError):
    """An input lies outside the mathematical domain of an operation."""


class ConfigError(PandoraError, ValueError):
    """Inconsistent shapes, unknown kinds or malformed configuration."""


class UnsupportedError(PandoraError, NotImplementedError):
    """The operation is not defined for the requested regime."""
