"""
Shared error types and handlers.
"""

from .error_handling import (
    ErrorType,
    TentCocycleError,
    DomainError,
    PreconditionError,
    ConfigurationError,
    NumericalError,
    MarkovPropertyError,
    classify_error,
    exit_code_for,
    handle_pipeline_errors,
)

__all__ = [
    'ErrorType',
    'TentCocycleError',
    'DomainError',
    'PreconditionError',
    'ConfigurationError',
    'NumericalError',
    'MarkovPropertyError',
    'classify_error',
    'exit_code_for',
    'handle_pipeline_errors',
]
