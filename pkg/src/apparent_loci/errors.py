from typing import Optional


class LociError(Exception):
    """
    Base class for every error raised by apparent-loci.
    Each subclass carries the process exit code the CLI maps it to.
    """

    exit_code = 1


class InputError(LociError):
    """Malformed input: JSON, schema, notation or curve data."""

    exit_code = 2

    def __init__(
        self, message: str, line: Optional[int] = None, column: Optional[int] = None
    ):
        self.line = line
        self.column = column
        location = ""
        if line is not None:
            location = f" (line {line}, column {column})"
        elif column is not None:
            location = f" (column {column})"
        super().__init__(f"{message}{location}")


class CurveError(InputError):
    pass


class PlaceError(InputError):
    pass


class NotationError(InputError):
    pass


class IrrationalLocus(LociError):
    """
    A dependence point that needs local data is not a rational unramified
    affine place. Jets are only computed over Q.
    """

    exit_code = 3

    def __init__(self, place, context: str = "", hint: str = ""):
        self.place = place
        self.hint = hint
        detail = f" during {context}" if context else ""
        message = (
            f"dependence point {place} is not a rational unramified affine place{detail}; "
            "scalars are restricted to Q, so no local data can be computed there"
        )
        super().__init__(f"{message}; {hint}" if hint else message)


class SingularFrame(LociError):
    exit_code = 4


class VerificationFailed(LociError):
    exit_code = 5


class CurveMismatch(LociError):
    pass


class ZeroElementError(LociError, ZeroDivisionError):
    pass


class PoleError(LociError):
    pass


class SearchExhausted(LociError):
    pass


class InvariantViolation(LociError):
    pass
