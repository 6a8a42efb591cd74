"""Exception types raised across the package."""


class TransmatError(Exception):
    """Base class for all errors raised by transmat."""


class MissingAttributeError(TransmatError):
    """A configured class field is absent from an event's attributes."""

    def __init__(self, attribute: str):
        super().__init__(f"missing attribute {attribute!r}")
        self.attribute = attribute


class ParseError(TransmatError):
    """A record in an input stream could not be parsed."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class OutOfOrderError(TransmatError):
    """A stream's timestamps decreased beyond what reordering can repair."""

    def __init__(self, source_id: str, position: int):
        super().__init__(
            f"source {source_id!r}: timestamp decreases at record {position}"
        )
        self.source_id = source_id
        self.position = position


class EmptyStreamError(TransmatError):
    """An operation that needs at least one event received none."""


class VersionMismatchError(TransmatError):
    """A persisted file carries an unsupported format version."""


class DuplicateLabelError(TransmatError):
    """A vocabulary contains a repeated or reserved label."""


class UnknownCaseError(TransmatError):
    """A case was closed that is not currently open."""

    def __init__(self, case_id: str):
        super().__init__(f"case {case_id!r} is not open")
        self.case_id = case_id


class FormatError(TransmatError):
    """A serialized feature frame is malformed."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class DimensionMismatchError(TransmatError):
    """A frame's matrix entries do not fit the expected dimension."""


class SingleClassError(TransmatError):
    """ROC/AUC evaluation needs both positive and negative labels."""


class InvalidTemplateError(TransmatError):
    """A synthetic trace template violates its probability constraints."""
