"""Exception hierarchy.

Every failure the library can signal derives from :class:`HSecAggError`; the
CLI maps the four families below onto its exit codes.
"""

from __future__ import annotations


class HSecAggError(Exception):
    """Base class for all library errors."""


# -- arithmetic / linear algebra ---------------------------------------------


class FieldError(HSecAggError):
    pass


class NonPrimeModulus(FieldError):
    pass


class DivisionByZero(FieldError, ZeroDivisionError):
    pass


class DenominatorVanishes(FieldError):
    pass


class MatrixError(HSecAggError):
    pass


class DimensionMismatch(MatrixError, ValueError):
    pass


class IndexOutOfRange(MatrixError, IndexError):
    pass


class Singular(MatrixError):
    pass


class Inconsistent(MatrixError):
    pass


class AttemptsExhausted(MatrixError):
    pass


# -- parameters (CLI exit 2) -------------------------------------------------


class ParameterError(HSecAggError):
    """Invalid assignment or scenario parameters."""


class EmptyUserAssignment(ParameterError):
    pass


class OrphanDataset(ParameterError):
    pass


class TooManyStragglers(ParameterError):
    def __init__(self, cluster: int, msg: str = ""):
        self.cluster = cluster
        super().__init__(msg or f"cluster {cluster + 1}: stragglers must be < r2")


class TooManyColluders(ParameterError):
    def __init__(self, cluster: int, msg: str = ""):
        self.cluster = cluster
        super().__init__(msg or f"cluster {cluster + 1}: colluders must be <= V - r2")


class ReplicationTooHigh(ParameterError):
    pass


class NonIntegralKeyCount(ParameterError):
    pass


class PreconditionError(ParameterError):
    """A runtime input (dropout set, received messages) breaks a precondition."""


class TooFewSurvivors(PreconditionError):
    pass


class MissingRelayMessage(PreconditionError):
    pass


# -- construction (CLI exit 3) -----------------------------------------------


class ConstructionError(HSecAggError):
    pass


class ConstructionFailed(ConstructionError):
    pass


class InfeasibleColumn(ConstructionError):
    pass


# -- security / runtime guards (CLI exit 4 / 5) ------------------------------


class SecurityConstraintViolated(HSecAggError):
    def __init__(self, constraint: str, scenario: str, detail: str = ""):
        self.constraint = constraint
        self.scenario = scenario
        super().__init__(f"{constraint} violated at {scenario}" + (f": {detail}" if detail else ""))


class EncodabilityViolation(HSecAggError):
    pass


class NoInvertibleSubset(HSecAggError):
    pass


class BudgetExceeded(HSecAggError):
    pass


class DumpError(HSecAggError):
    """Unreadable or inconsistent scheme dump."""
