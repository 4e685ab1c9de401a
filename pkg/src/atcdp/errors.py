class InvalidInputError(ValueError):
    """Raised when an operation's input violates its precondition."""


class ParseError(ValueError):
    """A malformed line or element in one of the supported file formats."""

    def __init__(self, message, line_no=None, segment_index=None):
        self.line_no = line_no
        self.segment_index = segment_index
        where = ""
        if line_no is not None:
            where = f"line {line_no}: "
        elif segment_index is not None:
            where = f"segment {segment_index}: "
        super().__init__(where + message)


class ValidationError(ValueError):
    """Settings or policy values outside their allowed ranges."""
