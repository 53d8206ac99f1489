"""Working-precision bookkeeping and the precision-escalation driver."""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Any, Callable

DEFAULT_PREC = 128
MIN_PREC = 32
DEFAULT_CAP = 16384
CAP_ENV = "NWHEAT_PREC_CAP"


class NumericsError(ArithmeticError):
    """Base class for failures of the certified arithmetic layer."""


class DomainError(NumericsError, ValueError):
    """An operation was applied to a ball that touches its singular set."""


class PrecisionError(NumericsError, ValueError):
    """Requested precision is outside ``[MIN_PREC, cap]``."""


class SignIndeterminate(NumericsError):
    """A sum cancelled below the working precision; its sign is unknown."""


class Undecidable(NumericsError):
    """An inequality could not be decided even at the precision cap."""


def prec_cap() -> int:
    raw = os.environ.get(CAP_ENV)
    if not raw:
        return DEFAULT_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise PrecisionError(f"{CAP_ENV}={raw!r} is not an integer") from None
    if cap < MIN_PREC:
        raise PrecisionError(f"{CAP_ENV}={cap} is below the minimum {MIN_PREC}")
    return cap


@dataclass(frozen=True, order=True)
class Precision:
    bits: int = DEFAULT_PREC

    def __post_init__(self):
        check_prec(self.bits)

    def doubled(self) -> "Precision":
        return Precision(min(2 * self.bits, prec_cap()))


def check_prec(bits) -> int:
    """Validate a working precision and return it as a plain int."""
    if isinstance(bits, Precision):
        return bits.bits
    if isinstance(bits, bool) or not isinstance(bits, int):
        raise PrecisionError(f"precision must be an integer number of bits, got {bits!r}")
    cap = prec_cap()
    if bits < MIN_PREC:
        raise PrecisionError(f"precision {bits} below minimum {MIN_PREC}")
    if bits > cap:
        raise PrecisionError(f"precision {bits} exceeds cap {cap}")
    return bits


def escalation_ladder(start: int = DEFAULT_PREC):
    """Yield ``start, 2*start, ...`` up to and including the cap."""
    cap = prec_cap()
    p = check_prec(start)
    while True:
        yield p
        if p >= cap:
            return
        p = min(2 * p, cap)


@dataclass(frozen=True)
class RefineResult:
    value: Any
    prec: int
    reached: bool
    reason: str = ""

    @property
    def ball(self):
        return getattr(self.value, "value", self.value)


def refine(target_rad, compute: Callable[[int], Any], start: int = DEFAULT_PREC) -> RefineResult:
    """Re-run ``compute(prec)`` with doubling precision until ``rad <= target_rad``.

    ``compute`` may return a Ball or any object with a ``value`` Ball; if it also
    carries a ``tail_bound`` that already exceeds the target, escalation stops
    immediately since more bits cannot shrink a truncation floor.
    """
    from .ball import Ball

    target = Ball.coerce(target_rad)
    if not target.is_positive():
        raise ValueError("target_rad must be > 0")
    last = None
    for p in escalation_ladder(start):
        last = compute(p)
        ball = getattr(last, "value", last)
        tail = getattr(last, "tail_bound", None)
        if tail is not None and tail.upper_ball().certainly_gt(target):
            return RefineResult(last, p, False, "tail_floor")
        if ball.rad_le(target):
            return RefineResult(last, p, True)
    return RefineResult(last, p, False, "precision_cap")
