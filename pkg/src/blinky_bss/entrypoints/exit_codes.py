from typing import Final

from pydantic import ValidationError

from blinky_bss.domain import exceptions

SUCCESS: Final = 0
CONFIG_ERROR: Final = 2
NUMERICAL_ERROR: Final = 3

EXIT_CODES: dict[type[Exception], int] = {
    exceptions.ConfigurationError: CONFIG_ERROR,
    exceptions.SignalError: CONFIG_ERROR,
    exceptions.AudioIOError: CONFIG_ERROR,
    exceptions.NumericalError: NUMERICAL_ERROR,
    ValidationError: CONFIG_ERROR,
}

HANDLED_EXCEPTIONS: tuple[type[Exception], ...] = (
    exceptions.DomainException,
    ValidationError,
)


def exit_code_for(exception: Exception) -> int:
    """Exit code of the closest registered base class; unknown domain errors count as input errors."""
    for cls in type(exception).__mro__:
        if cls in EXIT_CODES:
            return EXIT_CODES[cls]
    return CONFIG_ERROR


def error_message(exception: Exception) -> str:
    """One-line description suitable for stderr."""
    if isinstance(exception, ValidationError):
        problems = [
            f"{'.'.join(str(part) for part in error['loc']) or 'document'}: {error['msg']}"
            for error in exception.errors()
        ]
        return f"invalid {exception.title}: " + "; ".join(problems)
    return " ".join(str(exception).split())
