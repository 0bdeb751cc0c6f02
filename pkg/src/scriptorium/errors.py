"""Exception hierarchy shared across the toolkit."""


class ScriptoriumError(Exception):
    """Base class for all toolkit errors."""


class EmptyPage(ScriptoriumError):
    """No line of a page survived zone filtering."""


class EmptyPassage(ScriptoriumError):
    """An edition passage has no text."""


class OutOfBounds(ScriptoriumError):
    """A span refers to character positions outside the prepared text."""


class TooLarge(ScriptoriumError):
    """An exhaustive alignment was requested on an instance above the size cap."""


class Unchunkable(ScriptoriumError):
    """An accepted alignment region is too small to emit a single pair."""


class RuleConflict(ScriptoriumError):
    """Two normalization rules of equal priority overlap."""


class EndpointFailure(ScriptoriumError):
    """An external normalizer endpoint failed or returned garbage."""

    def __init__(self, message: str, input_id: str | None = None):
        super().__init__(message)
        self.input_id = input_id


class EndpointTimeout(EndpointFailure):
    """An external normalizer endpoint did not answer in time."""


class EmptyReference(ScriptoriumError):
    """An error-rate denominator (the gold text) is empty."""


class ConfigError(ScriptoriumError):
    """Pipeline configuration failed validation."""


class MissingInput(ScriptoriumError):
    """A pipeline stage was started before its inputs exist."""


class StoreCorruption(ScriptoriumError):
    """The review store's decision log cannot be replayed."""
