"""Small argument checks shared by the configuration classes."""
from __future__ import annotations

import math


def check_probability(value: float, name: str, *, upper: float = 1.0, closed: bool = True) -> float:
    value = float(value)
    ok = 0.0 <= value <= upper if closed else 0.0 <= value < upper
    if not ok or math.isnan(value):
        bracket = "]" if closed else ")"
        raise ValueError(f"{name} must lie in [0, {upper}{bracket}, got {value}")
    return value


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value


def check_nonnegative(value: float, name: str) -> float:
    value = float(value)
    if not value >= 0:
        raise ValueError(f"{name} must be non-negative, got {value}")
    return value


def check_count(value: int, name: str, *, minimum: int = 0) -> int:
    if isinstance(value, bool) or int(value) != value or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)
