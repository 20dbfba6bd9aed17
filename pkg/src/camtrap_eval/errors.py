"""Exception hierarchy shared by every camtrap_eval module."""

from __future__ import annotations


class CamtrapError(ValueError):
    """Base class for domain errors; the CLI maps these to exit status 1."""


class InvalidGeometryError(CamtrapError):
    pass


class ManifestParseError(CamtrapError):
    def __init__(self, line_number: int, message: str) -> None:
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


class DuplicateRecordError(CamtrapError):
    pass


class BoundsError(CamtrapError):
    pass


class EmptyInputError(CamtrapError):
    pass


class InfeasibleSplitError(CamtrapError):
    pass


class EmptyEvaluationError(CamtrapError):
    pass


class InfeasibleFlipError(CamtrapError):
    pass


class UndefinedEstimateError(CamtrapError):
    pass
