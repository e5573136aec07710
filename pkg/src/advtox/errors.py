"""Exception types shared across the toolkit."""


class AdvToxError(Exception):
    """Base class for all toolkit errors."""


class ResourceError(AdvToxError):
    """A linguistic asset file is missing, unreadable, or malformed."""


class DataError(AdvToxError):
    """A dataset or results file violates its schema."""


class ConfigError(AdvToxError):
    """A recipe or training config is invalid."""


class CapabilityError(AdvToxError):
    """The oracle or transformation needs a capability the backend lacks
    (e.g. gradients from a remote victim, MLM without a configured server)."""


class TransportError(AdvToxError):
    """A remote call failed at the wire level. Carries the raw response body
    when one was received."""

    def __init__(self, message: str, response_body: str | None = None):
        super().__init__(message)
        self.response_body = response_body
