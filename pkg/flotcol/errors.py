"""
Exception and warning types.

Two families: `ValidationError` for inputs that break a documented contract,
and `NumericalError` for computations that cannot produce an answer on valid
inputs.  The command line maps the first to exit code 1 and the second to
exit code 2.
"""


class FlotcolError(Exception):
    ...


class ValidationError(FlotcolError, ValueError):
    ...


class NumericalError(FlotcolError, ArithmeticError):
    ...


class HindranceExponentTooSmall(ValidationError):
    ...


class NonPositiveParameter(ValidationError):
    ...


class DomainError(ValidationError):
    ...


class NonPositiveEffluentFlow(ValidationError):
    ...


class GridTooCoarse(ValidationError):
    ...


class IndexOutOfRange(ValidationError, IndexError):
    ...


class InvalidSchedule(ValidationError):
    ...


class InvalidScenario(ValidationError):
    ...


class InvalidArguments(ValidationError):
    ...


class NoRoot(NumericalError):
    ...


class FrothConditionViolated(NumericalError):
    ...


class PhiEOutOfRange(NumericalError):
    ...


class SolidsOverload(NumericalError):
    ...


class ZeroUnderflow(NumericalError):
    ...


class Infeasible(NumericalError):
    ...


class CflViolation(NumericalError):
    ...


class MarginalIntegralWarning(UserWarning):
    """The froth integral was evaluated across an endpoint singularity."""
