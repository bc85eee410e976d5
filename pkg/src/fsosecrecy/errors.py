"""Exception hierarchy shared by every module."""

from __future__ import annotations


class FsoSecrecyError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(FsoSecrecyError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NumericError(FsoSecrecyError, ArithmeticError):
    """A computation produced a non-finite or otherwise unusable number."""


class ConvergenceError(NumericError):
    """An iterative routine ran out of budget before meeting its tolerance.

    The best estimate reached so far is kept on the exception so callers can
    decide whether it is good enough.
    """

    def __init__(self, message: str, value: float = float("nan"), err_est: float = float("inf")):
        super().__init__(message)
        self.value = value
        self.err_est = err_est


class EstimationError(NumericError):
    """A Monte Carlo estimate had too many failed samples to be trusted."""


class ConfigError(FsoSecrecyError, ValueError):
    """A sweep or scenario configuration is invalid."""
