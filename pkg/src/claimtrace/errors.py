"""Exception hierarchy shared across the pipeline."""

from __future__ import annotations


class ClaimTraceError(Exception):
    """Base class for all errors raised by this package."""


class CorpusError(ClaimTraceError):
    """Fatal corpus load/validation failure. Message names the offending record."""


class ConfigError(ClaimTraceError):
    """Invalid or inconsistent configuration (bad thresholds, model mismatch, ...)."""


class TransportError(ClaimTraceError):
    """Provider unreachable or timed out. Retryable."""


class ProviderRefusal(ClaimTraceError):
    """The model provider refused to answer (content policy). Not retried."""


class ExtractionError(ClaimTraceError):
    """Structured output failed schema validation after all retries.

    Carries the last raw model output for logging.
    """

    def __init__(self, message: str, raw_text: str = ""):
        super().__init__(message)
        self.raw_text = raw_text


class RenderError(ClaimTraceError):
    """A prompt template placeholder was left unbound."""


class TurnCancelled(ClaimTraceError):
    """The user cancelled an in-flight question turn."""


class TurnBudgetExceeded(ClaimTraceError):
    """A question turn ran past its wall-clock budget."""
