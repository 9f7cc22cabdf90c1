"""
Error Hierarchy

Every failure raised by the library derives from MSKSDError and falls in one
of two families. The CLI maps them onto stable exit codes:

- InputError      -> exit 2 (bad arguments, malformed data, unsupported model)
- NumericalError  -> exit 3 (non-finite scores, non-PD precision, EM failure)
"""


class MSKSDError(Exception):
    """Base class for all library errors."""
    pass


class InputError(MSKSDError, ValueError):
    """Raised when arguments or data violate an operation's preconditions."""
    pass


class UnsupportedModelError(InputError):
    """Raised when a model lacks a capability the operation needs."""
    pass


class ConjugacyError(InputError):
    """Raised when a closed-form posterior is requested with a θ-dependent weight."""
    pass


class DataParseError(InputError):
    """
    Raised when a data file cannot be parsed.

    Attributes:
        path: File that failed to parse
        line: 1-based line number of the offending row (None if not applicable)
    """

    def __init__(self, message: str, path: str = "", line: int = None):
        self.path = path
        self.line = line
        location = f"{path}:{line}" if line is not None else path
        super().__init__(f"{location}: {message}" if location else message)


class NumericalError(MSKSDError, ArithmeticError):
    """Raised when a computation produces non-finite or non-PD quantities."""
    pass


class ConvergenceError(NumericalError):
    """Raised when an iterative fit fails to converge."""
    pass


EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_NUMERICAL_ERROR = 3


def exit_code_for(exc: BaseException) -> int:
    """
    Map an exception onto the CLI exit-code contract.

    Args:
        exc: Exception raised by a command

    Returns:
        2 for input errors (including unreadable files), 3 for numerical errors,
        1 for anything unexpected
    """
    if isinstance(exc, NumericalError):
        return EXIT_NUMERICAL_ERROR
    if isinstance(exc, (InputError, OSError, ValueError)):
        return EXIT_INPUT_ERROR
    return 1
