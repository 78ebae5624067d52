"""
Custom Exceptions

Exception hierarchy for the kfbd library and CLI.
The CLI maps each family to an exit code (input → 2, numeric → 3).

Example:
    try:
        result = conjugate(gen, z)
    except NumericError as e:
        logger.error(f"Conjugate failed: {e} (residual={e.residual})")
"""

from typing import Any


class KFBDBaseException(Exception):
    """Base exception for all kfbd errors"""
    pass


class InputError(KFBDBaseException):
    """Raised when inputs violate a documented precondition"""
    pass


class ConfigurationError(InputError):
    """Raised when an experiment config or CLI spec is invalid"""
    pass


class NumericError(KFBDBaseException):
    """
    Raised when a numerical procedure fails to converge

    Carries the final residual and the best iterate found so far.
    """

    def __init__(self, message: str, residual: float | None = None, best: Any = None):
        super().__init__(message)
        self.residual = residual
        self.best = best


class DomainError(NumericError):
    """Raised when a function is evaluated outside its domain"""
    pass
