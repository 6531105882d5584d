class EclipseHashError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(EclipseHashError, ValueError):
    pass


class DimensionError(EclipseHashError, ValueError):
    pass


class IncomparableCodesError(EclipseHashError, ValueError):
    pass


class SphericalHammingZeroDivision(EclipseHashError, ZeroDivisionError):
    """Codes share no 1-bits but differ somewhere: x/0."""


class SphericalHammingIndeterminate(EclipseHashError, ZeroDivisionError):
    """Both codes are all-zero: 0/0."""


class PoleError(EclipseHashError, ValueError):
    pass


class NoIntersectionError(EclipseHashError, ValueError):
    pass


class FormatError(EclipseHashError, ValueError):
    def __init__(self, message, offset=None, line=None):
        where = []
        if offset is not None:
            where.append(f"byte offset {offset}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.offset = offset
        self.line = line


class InvariantViolation(EclipseHashError):
    pass
