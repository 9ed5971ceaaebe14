"""Exception hierarchy for cluster-search."""

from pathlib import Path
from typing import Optional, Union


class ClusterSearchError(Exception):
    """Base class for all errors raised by cluster-search."""


class ParseError(ClusterSearchError, ValueError):
    """A file could not be parsed. Carries the path and 1-based line number."""

    def __init__(
        self,
        reason: str,
        path: Optional[Union[str, Path]] = None,
        line_number: Optional[int] = None,
    ):
        self.reason = reason
        self.path = str(path) if path is not None else None
        self.line_number = line_number
        location = ""
        if self.path is not None:
            location = self.path
            if line_number is not None:
                location += f":{line_number}"
            location += ": "
        elif line_number is not None:
            location = f"line {line_number}: "
        super().__init__(f"{location}{reason}")


class DimensionError(ParseError):
    """An embedding row has the wrong number of components."""


class RejectedRowError(ParseError):
    """An embedding row was well-formed but not admissible (zero or non-finite)."""

    def __init__(self, word: str, reason: str, path=None, line_number=None):
        self.word = word
        super().__init__(f"rejected row for '{word}': {reason}", path, line_number)


class ValidationError(ClusterSearchError, ValueError):
    """Input violates a documented invariant."""


class UniquenessError(ValidationError):
    """Duplicate document or query id."""


class AlignmentError(ValidationError):
    """Paired series are not aligned (length or key mismatch)."""


class ConfigurationError(ValidationError):
    """Invalid configuration or a parameter that contradicts the index manifest."""


class DomainError(ClusterSearchError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class PreconditionError(ClusterSearchError, ValueError):
    """Operation called in a state its contract forbids."""


class MissingWordError(ClusterSearchError, LookupError):
    """A word has no entry in the embedding table."""

    def __init__(self, word: str):
        self.word = word
        super().__init__(f"word '{word}' not found in embedding table")


class UnknownDocumentError(ClusterSearchError, KeyError):
    """Document id not present in the index."""

    def __str__(self) -> str:
        return f"unknown document id {self.args[0]!r}"


class IndexStoreError(ClusterSearchError):
    """Base class for index persistence failures."""


class IncompatibleIndexError(IndexStoreError):
    """Index directory was written with a different format version."""


class CorruptIndexError(IndexStoreError):
    """Index directory is missing files or holds inconsistent data."""
