"""Exception taxonomy shared by all clickpath modules."""

from __future__ import annotations


class ClickpathError(Exception):
    """Base class for all errors raised by this package."""


class MalformedUrl(ClickpathError):
    """Raw URL cannot be parsed as an absolute URL."""


class SchemaViolation(ClickpathError):
    """A session-log line does not conform to the event schema.

    Carries the 1-based line number and the offending field name so
    collector bugs can be located in the raw log.
    """

    def __init__(self, line: int, field: str, message: str = ""):
        self.line = line
        self.field = field
        detail = f": {message}" if message else ""
        super().__init__(f"line {line}, field {field!r}{detail}")


class OrderViolation(ClickpathError):
    """Timestamps within one session went backwards beyond tolerance."""

    def __init__(self, line: int, session_id: str, message: str = ""):
        self.line = line
        self.session_id = session_id
        detail = f": {message}" if message else ""
        super().__init__(f"line {line}, session {session_id!r}{detail}")


class EmptySession(ClickpathError):
    """A session contains no page visits to linearize."""


class ShapeMismatch(ClickpathError):
    """Matrix operands have incompatible shapes."""


class IndexOutOfRange(ClickpathError):
    """An id or index does not exist in the addressed structure."""


class EmptyCorpus(ClickpathError):
    """No training pairs were supplied to the embedding trainer."""


class EmptyPath(ClickpathError):
    """An operation that requires at least one action received none."""


class EmptyDataset(ClickpathError):
    """A dataset-level operation received no items."""


class LabelMissing(ClickpathError):
    """A supervised operation received an unlabeled path."""


class FewerThanTwoGraphs(ClickpathError):
    """Overlap mining needs at least two graphs from distinct users."""


class InvalidParams(ClickpathError):
    """Generator parameters are out of their valid range."""


class InvalidK(ClickpathError):
    """k-fold split with k < 2 or k larger than the dataset."""


class EmptySample(ClickpathError):
    """A statistical test received an empty sample."""


class EmptyTruth(ClickpathError):
    """Accuracy against an empty ground-truth sequence is undefined."""
