"""Exception types and enumeration guards shared across the package."""

from __future__ import annotations

import os

GUARD_ENV = "SECMUX_GUARD_OVERRIDE"


class SecmuxError(Exception):
    """Base class for package errors."""


class GuardError(SecmuxError):
    """An exhaustive computation would exceed its enumeration budget."""

    def __init__(self, guard: str, value: int, limit: int):
        self.guard = guard
        self.value = value
        self.limit = limit
        super().__init__(f"guard '{guard}' exceeded: {value} > {limit}")


class SingularMatrixError(SecmuxError, ValueError):
    """A matrix expected to be invertible over F_q is singular."""


class ModulusMismatchError(SecmuxError, ValueError):
    """Operands live in different prime fields."""


def guard_factor() -> float:
    """Multiplier applied to every guard limit.

    Read from ``SECMUX_GUARD_OVERRIDE``. Raising guards can make exhaustive
    routines take hours or exhaust memory, so CI should leave it unset.
    """
    raw = os.environ.get(GUARD_ENV)
    if not raw:
        return 1.0
    try:
        factor = float(raw)
    except ValueError as exc:
        raise SecmuxError(f"{GUARD_ENV} must be a number, got {raw!r}") from exc
    if factor < 1.0:
        raise SecmuxError(f"{GUARD_ENV} must be >= 1, got {raw!r}")
    return factor


def check_guard(guard: str, value: int, limit: int) -> None:
    effective = int(limit * guard_factor())
    if value > effective:
        raise GuardError(guard, value, effective)
