"""Exception hierarchy shared by every sarcov module."""


class SarcovError(Exception):
    """Base class for all library errors."""


class ValidationError(SarcovError, ValueError):
    """An input violates a documented invariant."""


class DegenerateTarget(ValidationError):
    """Target too close to the base for a viewpoint circle to be placed."""


class GenerationFailure(SarcovError):
    """Random instance generation gave up after too many rejections."""


class ParseError(SarcovError, ValueError):
    """Malformed text file. Carries the offending line number and field."""

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class IndexOutOfRange(SarcovError, IndexError):
    pass


class TooFewPoints(SarcovError, ValueError):
    pass


class NotEnoughPoints(SarcovError, ValueError):
    pass


class DegenerateGeometry(SarcovError, ValueError):
    pass


class InvalidPermutation(SarcovError, ValueError):
    pass


class TooManyStops(SarcovError, ValueError):
    pass


class InsufficientData(SarcovError, ValueError):
    pass


class EmptyGroup(InsufficientData):
    pass
