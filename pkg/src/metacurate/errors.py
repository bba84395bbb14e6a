"""Exception types shared across the pipeline."""


class MetacurateError(Exception):
    """Base class for all package errors."""


class MalformedRecord(MetacurateError):
    """Raw record text could not be parsed into any field/value pairs."""


class FormatError(MetacurateError):
    """A serialized artifact (corpus file, dictionary, template) is malformed.

    Carries the offending line or entry index when known.
    """

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class EmptyTermList(FormatError):
    """A value-set or ontology-branch constraint has no terms."""


class InsufficientRecords(MetacurateError):
    """Fewer well-formed records survived parsing than the sampling target."""


class NetworkError(MetacurateError):
    """Transient repository failure; retries were exhausted."""


class QuotaError(MetacurateError):
    """Non-retryable repository refusal (quota / authorization)."""


class MissingGuidance(MetacurateError):
    """A prompt was requested without the dictionary/template it needs."""


class ModelOutputUnparseable(MetacurateError):
    """Backend completion contained no `name: value` lines."""


class BackendError(MetacurateError):
    """Completion backend failed (HTTP error, cache miss in strict mode)."""


class CacheMiss(BackendError):
    """Replay cache has no recorded response for this prompt."""


class InvalidQuery(MetacurateError):
    """Query text is not of the form field:value."""


class UnsupportedQuery(MetacurateError):
    """Query has no gold-label mapping, so no relevant set exists."""


class EmptyInput(MetacurateError):
    """An aggregate was requested over zero elements."""


class LengthMismatch(MetacurateError):
    """Paired samples differ in length."""


class TooFewPairs(MetacurateError):
    """Paired statistics need at least two pairs."""


class DegenerateVariance(MetacurateError):
    """Differences have zero spread but a nonzero mean; t is undefined."""


class MissingCorpus(MetacurateError):
    """An evaluation suite lacks a required (source, cohort, condition) corpus."""
