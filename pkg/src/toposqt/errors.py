"""Exception hierarchy shared by all toposqt modules.

Every domain error derives from ToposQTError so the CLI and service can map
them uniformly to exit code 2 / HTTP 422.
"""


class ToposQTError(Exception):
    """Base class for all domain errors raised by this package."""


class NonHermitianInput(ToposQTError):
    pass


class NonUnitaryInput(ToposQTError):
    pass


class DimensionMismatch(ToposQTError):
    pass


class IncommensurableOperators(ToposQTError):
    pass


class TrivialContextExcluded(ToposQTError):
    pass


class EmptyPoset(ToposQTError):
    pass


class ContextNotInPoset(ToposQTError):
    pass


class NotASubcontext(ToposQTError):
    pass


class StageMismatch(ToposQTError):
    pass


class ElementNotInFibre(ToposQTError):
    pass


class ParentMismatch(ToposQTError):
    pass


class NotOuterForm(ToposQTError):
    pass


class UndefinedOperation(ToposQTError):
    """Raised for operations the quantity-value structures do not support,
    e.g. squares of general completion pairs or products of interval pairs."""


class EmptyFilter(ToposQTError):
    pass


class OperatorNotInScope(ToposQTError):
    pass


class InvalidWitness(ToposQTError):
    pass


class NonMonotoneMap(ToposQTError):
    pass


class PosetNotClosedUnderU(ToposQTError):
    pass


class UnknownCommand(ToposQTError):
    pass


class ParseError(ToposQTError):
    pass


class ValidationError(ToposQTError):
    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
