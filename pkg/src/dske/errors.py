"""Exception hierarchy shared across the package."""


class DskeError(Exception):
    """Base class for all errors raised by this package."""


class FieldMismatchError(DskeError, ValueError):
    """Binary operation attempted between elements of different fields."""


class IndexOverflowError(DskeError, ValueError):
    """Index does not fit into the target field."""


class EmptySecretError(DskeError, ValueError):
    """Secret-authenticating tag requested for a zero-length secret."""


class DuplicateCoordinateError(DskeError, ValueError):
    """Two interpolation points share the same x coordinate."""


class InsufficientSharesError(DskeError):
    """Fewer shares available than the reconstruction threshold."""


class ReuseAttemptError(DskeError):
    """A pre-shared random span was requested more than once."""


class InsufficientPsrdError(DskeError):
    """A table does not hold enough unconsumed elements for the operation."""


class FormatError(DskeError, ValueError):
    """Persistent or wire data failed structural validation."""


class MalformedFrameError(FormatError):
    """A protocol frame could not be decoded."""


class PeerUnreachableError(DskeError):
    """Fewer than the threshold number of hubs accepted the request."""


class KeyDeliveryError(DskeError):
    """Key lookup failed: unknown id, timeout, or already delivered."""
