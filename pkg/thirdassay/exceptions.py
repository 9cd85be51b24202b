class AssayError(Exception):
    """Base class for every error raised by thirdassay"""


class InputError(AssayError, ValueError):
    """Non-finite, empty or malformed input"""


class DomainError(AssayError, ValueError):
    """Argument outside the mathematical domain of the operation"""


class ConvergenceError(AssayError, RuntimeError):
    """
    Numerical routine ran out of budget before meeting its tolerance.

    Params:
        best <object> : best estimate available when the budget ran out
                        (an IntegrationResult for quadrature, a float for roots)
    """

    def __init__(self, message, best=None):
        super(ConvergenceError, self).__init__(message)
        self.best = best
