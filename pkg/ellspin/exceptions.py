"""
Custom exception hierarchy for ellspin.

Exceptions are categorized by severity:
- Critical: Must fail fast, the run cannot continue (config, I/O, executor)
- Numerical: The request is well posed but the point is singular or unresolved
- Client: User error, bad parameters or an unsupported combination (exit 64)
"""
from typing import Optional, Dict, Any


# Exit codes of the command-line front end
EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INFRASTRUCTURE = 2
EXIT_USAGE = 64


class EllSpinException(Exception):
    """Base exception for all ellspin errors."""

    def __init__(
        self,
        message: str,
        details: Optional[Dict[str, Any]] = None,
        original_error: Optional[Exception] = None
    ):
        """
        Initialize exception.

        Args:
            message: Human-readable error message
            details: Additional context (dict)
            original_error: Original exception if wrapping
        """
        super().__init__(message)
        self.message = message
        self.details = details or {}
        self.original_error = original_error

    def to_dict(self) -> Dict[str, Any]:
        """
        Convert exception to dict for reports.

        Returns:
            Dict with error details
        """
        result = {
            "error": self.__class__.__name__,
            "message": self.message,
        }
        if self.details:
            result["details"] = {k: _plain(v) for k, v in self.details.items()}
        return result


def _plain(value: Any) -> Any:
    """Complex numbers are not JSON values; render them as [re, im]."""
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


# =============================================================================
# CRITICAL ERRORS - Must fail fast, cannot continue
# =============================================================================

class CriticalError(EllSpinException):
    """
    Critical error that aborts the run.

    Use for: unusable configuration, unwritable output, executor failure.
    """
    pass


class ConfigurationError(CriticalError):
    """
    Configuration error preventing startup.

    Examples:
    - Invalid environment overrides
    - Conflicting settings
    """
    pass


class InfrastructureError(CriticalError):
    """
    Failure outside the mathematics.

    Examples:
    - Report file cannot be written
    - A worker thread died with an unexpected exception
    """
    pass


# =============================================================================
# NUMERICAL ERRORS - The evaluation point is singular or unresolved
# =============================================================================

class NumericalError(EllSpinException):
    """
    Numerical error raised for a specific evaluation point.

    Other points are unaffected; verification checks record these as
    failed results instead of aborting.
    """
    pass


class PoleError(NumericalError):
    """
    A division hit a zero of the theta function.

    Examples:
    - 2*eta on the lattice N*k + i*pi*l/kappa
    - eta*a on the lattice (dynamical R-matrix poles)
    - Coincident particle coordinates
    """
    pass


class AccuracyError(NumericalError):
    """
    Truncation cap exceeded before the requested tolerance was reached.
    """
    pass


class DegenerateNormalizationError(NumericalError):
    """
    The pair potential vanishes where the exchange operator divides by it.
    """
    pass


class GateError(NumericalError):
    """
    The freezing velocities are not j-independent.

    The measured spread is carried in ``details["spread"]``.
    """
    pass


# =============================================================================
# CLIENT ERRORS - User made a mistake (exit code 64)
# =============================================================================

class ClientError(EllSpinException):
    """
    Client error (bad parameters, unsupported request).

    Use for: invalid input, parameter invariant violations, size caps.
    """
    pass


class ParameterError(ClientError):
    """
    Parameter validation error.

    Examples:
    - Unparsable complex literal
    - N < 2
    - Negative kappa
    """
    pass


class ContractError(ClientError):
    """
    Operation requested outside its contract.

    Examples:
    - S^z sector of an operator that does not conserve S^z
    - Operators of different chain lengths combined
    """
    pass


class SizeCapError(ClientError):
    """
    Chain length beyond the dense-matrix cap.
    """
    pass


# =============================================================================
# HELPER FUNCTIONS
# =============================================================================

def is_critical(error: Exception) -> bool:
    """
    Check if error is critical (requires fail-fast).

    Args:
        error: Exception to check

    Returns:
        True if critical, False otherwise
    """
    return isinstance(error, CriticalError)


def is_numerical(error: Exception) -> bool:
    """
    Check if error is tied to a single evaluation point.

    Args:
        error: Exception to check

    Returns:
        True if numerical, False otherwise
    """
    return isinstance(error, NumericalError)


def is_client_error(error: Exception) -> bool:
    """Check if error was caused by the caller's input."""
    return isinstance(error, ClientError)


def exit_code_for(error: Exception) -> int:
    """
    Map an exception to the command-line exit code.

    Client errors are usage errors (64); critical errors and everything
    else that escapes a command are infrastructure failures (2).
    """
    if is_client_error(error):
        return EXIT_USAGE
    return EXIT_INFRASTRUCTURE


def wrap_error(
    error: Exception,
    message: str,
    error_class: type = EllSpinException,
    **details: Any
) -> EllSpinException:
    """
    Wrap an exception with additional context.

    Args:
        error: Original exception
        message: Additional context message
        error_class: Exception class to wrap with
        **details: Extra context merged into the wrapped details

    Returns:
        Wrapped exception
    """
    merged: Dict[str, Any] = {"original_error_type": type(error).__name__}
    if isinstance(error, EllSpinException):
        merged.update(error.details)
    merged.update(details)
    return error_class(
        message=message,
        original_error=error,
        details=merged
    )
