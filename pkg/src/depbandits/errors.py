"""Exception hierarchy shared across the package."""


class DepBanditsError(Exception):
    """Base class for errors raised by this package."""


class ConfigurationError(DepBanditsError):
    """Invalid instance, space, or run configuration."""


class DomainError(DepBanditsError, ValueError):
    """A parameter lies outside its declared parameter space."""


class DataError(DepBanditsError, ValueError):
    """An observation is incompatible with the model that produced it."""


class StateError(DepBanditsError, RuntimeError):
    """An operation was invoked on state that cannot support it."""


class ProtocolError(DepBanditsError, RuntimeError):
    """The select/update round protocol was violated."""


class CertificationError(DepBanditsError):
    """A structural constant failed its positivity or finiteness check."""
