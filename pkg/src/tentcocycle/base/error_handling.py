"""
Error types for the cocycle pipelines and the decorator that classifies
failures escaping a pipeline.

Input problems (domain, precondition, configuration) map to exit code 1,
numerical failures to exit code 2.
"""

import functools
import json
from enum import Enum
from typing import Any, Callable, ClassVar, Optional, Tuple, Type, TypeVar

from pydantic import ValidationError

from ..logging_config import PipelineLogger

pipeline_logger = PipelineLogger(__name__)


class ErrorType(Enum):
    """Classification of different error types."""
    DOMAIN_ERROR = "domain_error"
    PRECONDITION_ERROR = "precondition_error"
    CONFIGURATION_ERROR = "configuration_error"
    NUMERICAL_ERROR = "numerical_error"
    MARKOV_PROPERTY_ERROR = "markov_property_error"
    UNKNOWN_ERROR = "unknown_error"

    @property
    def is_input_error(self) -> bool:
        return self in (ErrorType.DOMAIN_ERROR, ErrorType.PRECONDITION_ERROR, ErrorType.CONFIGURATION_ERROR)


class TentCocycleError(Exception):
    """Base exception for package-specific errors."""

    def __init__(self, message: str, error_type: ErrorType, original_error: Optional[Exception] = None):
        self.message = message
        self.error_type = error_type
        self.original_error = original_error
        super().__init__(message)


class _TypedError(TentCocycleError):
    kind: ClassVar[ErrorType]

    def __init__(self, message: str, original_error: Optional[Exception] = None):
        super().__init__(message, self.kind, original_error)


class DomainError(_TypedError):
    """An argument lies outside the mathematical domain of an operation."""
    kind = ErrorType.DOMAIN_ERROR


class PreconditionError(_TypedError):
    """A documented precondition of a check does not hold."""
    kind = ErrorType.PRECONDITION_ERROR


class ConfigurationError(_TypedError):
    kind = ErrorType.CONFIGURATION_ERROR


class NumericalError(_TypedError):
    """Non-convergence, bracket failure, root isolation failure or a non-negative bound."""
    kind = ErrorType.NUMERICAL_ERROR


class MarkovPropertyError(NumericalError):
    """A branch image of a partition cell is not a union of cells."""
    kind = ErrorType.MARKOV_PROPERTY_ERROR


F = TypeVar('F', bound=Callable[..., Any])

# first match wins; ValueError is handled separately
_FOREIGN_ERRORS: Tuple[Tuple[Tuple[Type[BaseException], ...], ErrorType], ...] = (
    ((ValidationError, json.JSONDecodeError, FileNotFoundError, IsADirectoryError), ErrorType.CONFIGURATION_ERROR),
    ((ZeroDivisionError, OverflowError, FloatingPointError), ErrorType.NUMERICAL_ERROR),
)


def classify_error(error: Exception) -> ErrorType:
    """
    Classify an error into a specific error type.

    Args:
        error: The exception to classify

    Returns:
        The appropriate ErrorType
    """
    if isinstance(error, TentCocycleError):
        return error.error_type
    for types, error_type in _FOREIGN_ERRORS:
        if isinstance(error, types):
            return error_type
    if isinstance(error, ValueError) and "configuration" in str(error).lower():
        return ErrorType.CONFIGURATION_ERROR
    return ErrorType.UNKNOWN_ERROR


def exit_code_for(error_type: ErrorType) -> int:
    """Exit code of the command-line front end for a failure of this type."""
    return 1 if error_type.is_input_error else 2


def handle_pipeline_errors(fallback_value: Any = None, context: str = "operation"):
    """
    Decorator for pipeline stages.

    Failures are logged with their classification. With a fallback value the
    stage returns it; otherwise package errors propagate unchanged and any
    other exception is wrapped in a TentCocycleError carrying its
    classification.

    Args:
        fallback_value: Value to return if error occurs
        context: Description of the stage used in messages
    """
    def decorator(func: F) -> F:
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            try:
                return func(*args, **kwargs)
            except Exception as e:
                error_type = classify_error(e)
                fallback_msg = f"Using fallback value for {context}" if fallback_value is not None else None
                pipeline_logger.error_with_fallback(
                    f"Error in {context}: {error_type.value} - {e}", fallback_msg, stage=context
                )
                if fallback_value is not None:
                    return fallback_value
                if isinstance(e, TentCocycleError):
                    raise
                raise TentCocycleError(f"Failed {context}: {e}", error_type, e) from e
        return wrapper
    return decorator
