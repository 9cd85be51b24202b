from thirdassay.distributions import ErrorModel
from thirdassay.exceptions import AssayError, InputError, DomainError, ConvergenceError

__version__ = '0.1.0'
