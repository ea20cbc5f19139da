"""Exception types shared across the package."""


class NotABijection(ValueError):
    """Raised when a one-line word is not a permutation of 1..n."""


class IndexOutOfRange(IndexError):
    """Raised when a 1-based position or adjacent-pair index is out of range."""


class DomainError(ValueError):
    """Raised when a parameter lies outside the domain an operation supports."""


class PreconditionViolated(ValueError):
    """Raised when structured inputs (index sets, assignments) are malformed."""


class TooLargeForEnumeration(ValueError):
    """Raised when an exact enumeration is requested beyond the supported size."""


class ExcursionTooLong(RuntimeError):
    """Raised when a regeneration block exceeds the configured length cap."""


class VacuousBoundWarning(UserWarning):
    """Emitted when a requested bound evaluates to something trivially true."""
