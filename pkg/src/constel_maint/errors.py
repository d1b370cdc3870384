"""Exception types raised across the package."""


class ConstelMaintError(Exception):
    """Base class for all package errors."""


class AltitudeOrderError(ConstelMaintError, ValueError):
    """Lower orbit is not strictly below the upper one."""


class ZeroDriftError(ConstelMaintError, ValueError):
    """Relative RAAN drift is zero, so planes never realign."""


class NumericalIntegrationError(ConstelMaintError, ArithmeticError):
    pass


class DomainError(ConstelMaintError, ValueError):
    pass


class IllPosedScenarioError(ConstelMaintError, ZeroDivisionError):
    """A rate that appears in a denominator is zero."""


class NoFeasibleSolution(ConstelMaintError):
    pass


class SamplingExhausted(ConstelMaintError):
    def __init__(self, message, attempts=0, accepted=0):
        super().__init__(message)
        self.attempts = attempts
        self.accepted = accepted


class ParseError(ConstelMaintError, ValueError):
    pass


class SchemaError(ConstelMaintError, ValueError):
    def __init__(self, message, errors=None):
        super().__init__(message)
        self.errors = list(errors or [])


class UnitError(SchemaError):
    pass
