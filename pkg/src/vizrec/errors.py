"""Exception types shared across the package."""


class VizRecError(Exception):
    """Base class for all errors raised by this package."""


class CorpusError(VizRecError):
    """A corpus file is malformed. Carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SchemaError(VizRecError):
    """Feature schema version or vector length mismatch."""


class ParseError(VizRecError):
    """An LLM response could not be parsed. Carries the raw text."""

    def __init__(self, message: str, raw_text: str = ""):
        super().__init__(message)
        self.raw_text = raw_text


class GatewayError(VizRecError):
    """A provider call failed after exhausting the retry budget."""

    def __init__(self, message: str, attempts: int = 1):
        super().__init__(message)
        self.attempts = attempts


class TransportError(GatewayError):
    """A retryable transport-level failure (network error, 429, 5xx)."""


class TranscriptError(GatewayError):
    """A mock request had no scripted response. Carries the request digest."""

    def __init__(self, message: str, digest: str = ""):
        super().__init__(message)
        self.digest = digest


class ConfigError(VizRecError):
    """Invalid run configuration."""
