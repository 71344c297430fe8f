"""Exceptions and small input checks shared across the package."""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np


class TadError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ValidationError(TadError, ValueError):
    """Input violates a documented precondition or invariant."""

    exit_code = 2


class ParseError(ValidationError):
    """A file could not be parsed; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class InfeasibleError(TadError):
    """Request is well-formed but cannot be computed (size caps, unequal ways)."""

    exit_code = 3


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ValidationError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValidationError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_finite(value, name: str) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be a real number, got {value!r}") from None
    if not math.isfinite(out):
        raise ValidationError(f"{name} must be finite, got {value!r}")
    return out


def check_unit_interval(value, name: str, *, open_low=False, open_high=False) -> float:
    out = check_finite(value, name)
    lo_ok = out > 0 if open_low else out >= 0
    hi_ok = out < 1 if open_high else out <= 1
    if not (lo_ok and hi_ok):
        lo = "(" if open_low else "["
        hi = ")" if open_high else "]"
        raise ValidationError(f"{name} must lie in {lo}0, 1{hi}, got {out}")
    return out


def check_distinct(items: Iterable, name: str) -> list:
    items = list(items)
    seen = set()
    for item in items:
        if item in seen:
            raise ValidationError(f"duplicate {name}: {item!r}")
        seen.add(item)
    return items
