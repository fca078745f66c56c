"""Exception hierarchy shared by every bpdesim module."""

from __future__ import annotations


class BpdeError(Exception):
    """Base class for all errors raised by bpdesim."""


class MalformedLine(BpdeError, ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class MissingHeader(BpdeError, ValueError):
    pass


class IndexOutOfRange(BpdeError, IndexError):
    pass


class HermiticityViolation(BpdeError, ValueError):
    pass


class EmptyActiveSpace(BpdeError, ValueError):
    pass


class NonHermitianResult(BpdeError, ValueError):
    pass


class LengthMismatch(BpdeError, ValueError):
    pass


class NonPositiveTime(BpdeError, ValueError):
    pass


class BackendMismatch(BpdeError, ValueError):
    pass


class IdenticalReferences(BpdeError, ValueError):
    pass


class ParticleNumberMismatch(BpdeError, ValueError):
    pass


class TooFewPoints(BpdeError, ValueError):
    pass


class InvalidFit(BpdeError, ValueError):
    pass


class TooLarge(BpdeError, ValueError):
    pass


class ConvergenceFailure(BpdeError, RuntimeError):
    pass


class AmbiguousAssignment(BpdeError, ValueError):
    pass


class DimensionMismatch(BpdeError, ValueError):
    pass


class EmptyCampaign(BpdeError, ValueError):
    pass


class OutOfMemory(BpdeError, MemoryError):
    pass


class DegenerateAssignmentWarning(UserWarning):
    """Both reference determinants are dominated by the same eigenstate."""
