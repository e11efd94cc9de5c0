"""Exception types shared across the workbench."""

from __future__ import annotations


class KinductError(Exception):
    """Base class for all workbench errors."""


class LoopcSyntaxError(KinductError):
    def __init__(self, message: str, line: int, col: int, expected: str | None = None):
        self.line = line
        self.col = col
        self.expected = expected
        detail = f"{line}:{col}: {message}"
        if expected:
            detail += f" (expected {expected})"
        super().__init__(detail)


class LoopcTypeError(KinductError):
    def __init__(self, message: str, pos: tuple[int, int] | None = None):
        self.pos = pos
        if pos:
            message = f"{pos[0]}:{pos[1]}: {message}"
        super().__init__(message)


class InputExhausted(KinductError):
    """Interpreter ran out of supplied nondet values."""


class ExtractError(KinductError):
    """Program cannot be lowered to a transition system."""


class EncodeError(KinductError):
    """CNF encoding exceeded its variable budget or hit an unsupported shape."""


class AdapterError(KinductError):
    """External solver produced unparseable or inconsistent output."""


class StateSpaceTooLarge(KinductError):
    """Explicit-state exploration refused: state+input width over the bound."""


class ProfileInfeasible(KinductError):
    """Benchmark profile targets cannot be met jointly."""


class SuiteConfigError(KinductError):
    """Suite manifest is malformed (duplicate ids, missing files, bad limits)."""


class WitnessFormatError(KinductError):
    """Witness file failed schema validation."""
