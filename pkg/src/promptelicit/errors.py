"""Exception types shared across the package."""

from __future__ import annotations


class PromptElicitError(Exception):
    """Base class for all package errors."""


class EmptyPrompt(PromptElicitError):
    """Raised when an initial prompt is blank after trimming."""


class OracleError(PromptElicitError):
    """A language-oracle call failed (missing fixture, exhausted retries, transport fault)."""


class SchemaError(PromptElicitError):
    """An oracle response did not match the response schema for its request kind."""


class RenderError(PromptElicitError):
    """The text-to-image renderer failed after retries."""


class DuplicateFeatureConflict(PromptElicitError):
    """An elicited answer tried to overwrite a feature that already has an elicited value."""


class MatcherError(PromptElicitError):
    """A value could not be classified onto any option and no residual bucket exists."""


class InvalidDistribution(PromptElicitError):
    """A stored option distribution is negative, non-normalized, or mis-sized."""


class EmptyCandidates(PromptElicitError):
    """Query selection was invoked on an empty candidate list."""


class NoUnspecifiedFeatures(PromptElicitError):
    """Every known feature already has a value; elicitation is exhausted."""


class InvalidOptionIndex(PromptElicitError):
    """An answer referenced an option index outside the query's option list."""


class EmptyOtherText(PromptElicitError):
    """A residual ("Other") answer carried no text."""


class WrongState(PromptElicitError):
    """A session operation was attempted in a state that does not allow it."""


class RevisionConflict(PromptElicitError):
    """An optimistic-concurrency guard rejected a stale mutation."""


class ReplayMismatch(PromptElicitError):
    """A replayed session diverged from its recorded journal or snapshot."""


class ConfigError(PromptElicitError):
    """A run configuration or case file is invalid or unreadable."""
