"""Exception types for the exporter."""


class ExportError(Exception):
    """Base class for all exporter failures."""


class SegmentFileError(ExportError):
    """A segment JSONL file is unreadable, malformed, or inconsistent."""


class ModelLoadError(ExportError):
    """The encoder model or tokenizer could not be loaded or applied."""


class TokenizationEmpty(ExportError):
    """A segment produced no content tokens after special-token removal."""
