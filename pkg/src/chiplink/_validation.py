"""Small argument checks used across the package."""
from __future__ import annotations

import math
from numbers import Real

from .exceptions import DomainError


def check_probability(value, name: str, *, open_low: bool = False, open_high: bool = False) -> float:
    if not isinstance(value, Real) or isinstance(value, bool):
        raise DomainError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if math.isnan(value):
        raise DomainError(f"{name} is NaN")
    low_ok = value > 0.0 if open_low else value >= 0.0
    high_ok = value < 1.0 if open_high else value <= 1.0
    if not (low_ok and high_ok):
        lo = "(" if open_low else "["
        hi = ")" if open_high else "]"
        raise DomainError(f"{name}={value!r} outside {lo}0, 1{hi}")
    return value


def check_positive(value, name: str, *, allow_zero: bool = False) -> float:
    if not isinstance(value, Real) or isinstance(value, bool):
        raise DomainError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if math.isnan(value) or (value < 0.0 if allow_zero else value <= 0.0):
        bound = ">= 0" if allow_zero else "> 0"
        raise DomainError(f"{name} must be {bound}, got {value!r}")
    return value


def check_count(value, name: str, *, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        else:
            raise DomainError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise DomainError(f"{name} must be >= {minimum}, got {value}")
    return int(value)
