"""Error taxonomy; every package error derives from TrendfetchError."""


class TrendfetchError(Exception):
    pass


class ValidationError(TrendfetchError):
    """Bad job or argument, caught before any request is made."""


class SchemaError(TrendfetchError):
    """Rows that do not conform to the trends.csv contract."""


class TransportError(TrendfetchError):
    """A request failed; retryable."""


class QuotaError(TransportError):
    """The service is rate limiting us; retryable with backoff."""
