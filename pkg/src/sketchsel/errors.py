"""Exception hierarchy shared by every sketchsel module."""


class SketchselError(Exception):
    """Base class for all errors raised by this package."""


class InvalidGeometryError(SketchselError, ValueError):
    pass


class NumericInputError(SketchselError, ValueError):
    pass


class IncompatibleSketchError(SketchselError, ValueError):
    pass


class UnsupportedModeError(SketchselError):
    pass


class EmptyHeapError(SketchselError, IndexError):
    pass


class LabelDomainError(SketchselError, ValueError):
    pass


class InvalidBudgetError(SketchselError, ValueError):
    pass


class InvalidSpecError(SketchselError, ValueError):
    pass


class DegenerateLabelsError(SketchselError, ValueError):
    pass


class ParseError(SketchselError, ValueError):
    """Malformed input record.

    ``record`` is the zero-based record (line) number when known and
    ``offset`` the byte offset of the offending field inside that record.
    """

    def __init__(self, message: str, *, record: int | None = None, offset: int | None = None):
        self.record = record
        self.offset = offset
        where = []
        if record is not None:
            where.append(f"record {record}")
        if offset is not None:
            where.append(f"byte {offset}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class StreamError(SketchselError, OSError):
    """I/O failure while reading a data source; ``record`` is the last record index reached."""

    def __init__(self, message: str, *, record: int | None = None):
        self.record = record
        super().__init__(message if record is None else f"{message} (record {record})")
