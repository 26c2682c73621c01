"""Exception hierarchy shared by all chronon modules."""


class ChrononError(Exception):
    """Base class for every error raised by this package."""


class DomainError(ChrononError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class UsageError(ChrononError):
    """An operation was invoked in an unsupported way (wrong scheme, too few records, ...)."""


class ConfigurationError(ChrononError, ValueError):
    """A physical set-up is inconsistent, e.g. a packet does not fit its grid."""


class CapabilityError(ChrononError):
    """The requested operation needs information the input does not provide."""


class ProbeError(ChrononError):
    """A numerical probe point is unusable (test state vanishes there)."""


class DegenerateStateError(ChrononError):
    """A state has zero norm."""


class WrapAroundError(ChrononError):
    """Probability has reached the periodic boundary of the position grid."""


class InternalError(ChrononError):
    """Inconsistent data reached the output layer (empty or mixed-schema records)."""
