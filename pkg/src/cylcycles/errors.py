"""Exception hierarchy."""


class CylCyclesError(Exception):
    """Base class for all errors raised by the package."""


class IdenticallyZero(CylCyclesError, ValueError):
    """A trigonometric polynomial with all coefficients zero was given where zeros are sought."""


class OnSwitchingLine(CylCyclesError, ValueError):
    """The field was evaluated on a threshold, where it is two-valued."""


class QuadratureFailure(CylCyclesError, ArithmeticError):
    """Adaptive quadrature did not reach its tolerance within the subinterval budget."""


class ContactError(CylCyclesError):
    """A trajectory met a splitting line in a non-crossing way."""

    def __init__(self, message: str, time: float, line: int):
        super().__init__(f"{message} (t={time!r}, line={line})")
        self.time = time
        self.line = line


class SlidingEncountered(ContactError):
    """Lateral field values have opposite signs at a contact (Filippov regime)."""


class TangencyEncountered(ContactError):
    """A lateral field value vanishes at a contact."""


class NotPeriodic(CylCyclesError, ValueError):
    pass


class NonTransversal(CylCyclesError, ValueError):
    pass


class NotApplicable(CylCyclesError, ValueError):
    pass


class AmbiguousRegion(CylCyclesError, ValueError):
    pass


class SingularJacobian(CylCyclesError, ArithmeticError):
    pass


class NoConvergence(CylCyclesError, ArithmeticError):
    pass


class DivisionNearZero(CylCyclesError, ArithmeticError):
    pass


class ArgumentMismatch(CylCyclesError, ValueError):
    pass


class ModelParseError(CylCyclesError, ValueError):
    pass


class ExperimentFailed(CylCyclesError):
    pass
