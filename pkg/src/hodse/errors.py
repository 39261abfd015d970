# src/hodse/errors.py
"""
Exception hierarchy shared by every module.

Each class carries the process exit code the CLI reports for it, so the
mapping lives next to the error instead of in a lookup table.
"""

from __future__ import annotations

from typing import Iterable, Optional

from .rules import ExitCode


class HodseError(Exception):
    """Root of all library errors."""

    exit_code: ExitCode = ExitCode.NUMERIC


class InputError(HodseError, ValueError):
    """Malformed or out-of-domain input (exit code 2)."""

    exit_code = ExitCode.INPUT


class DataParseError(InputError):
    """A data file cell that could not be read as a finite real."""

    def __init__(self, message: str, *, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class ConfigError(InputError):
    """Experiment config with unknown, missing or malformed keys."""

    def __init__(self, message: str, keys: Iterable[str] = ()):
        self.keys = sorted(set(keys))
        if self.keys:
            message = f"{message}: {', '.join(self.keys)}"
        super().__init__(message)


class ContractError(HodseError):
    """A precondition between otherwise valid inputs does not hold (exit code 3)."""

    exit_code = ExitCode.CONTRACT


class OrderError(ContractError):
    """Expansion order incompatible with the sample size."""


class CapacityError(ContractError):
    """Dense tensor or enumeration budget exceeded."""


class NumericError(HodseError, ArithmeticError):
    """Quadrature or iteration failed to reach its tolerance (exit code 4)."""

    exit_code = ExitCode.NUMERIC

    def __init__(self, message: str, achieved: Optional[float] = None):
        if achieved is not None:
            message = f"{message} (achieved tolerance {achieved:.3e})"
        super().__init__(message)
        self.achieved = achieved
