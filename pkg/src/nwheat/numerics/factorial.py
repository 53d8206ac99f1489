"""Certified ln n!."""

from __future__ import annotations

import math
from functools import lru_cache

from .ball import Ball, pi
from .precision import DEFAULT_PREC

EXACT_LIMIT = 10**6


@lru_cache(maxsize=4096)
def log_factorial(n: int, prec: int = DEFAULT_PREC) -> Ball:
    """Enclosure of ln n!.

    Up to ``EXACT_LIMIT`` this is the log of the exact integer n!; above it the
    Stirling series with Robbins' two-sided remainder is used.
    """
    if isinstance(n, bool) or not isinstance(n, int) or n < 0:
        raise ValueError(f"n must be a nonnegative integer, got {n!r}")
    if n <= 1:
        return Ball(0, prec=prec)
    if n <= EXACT_LIMIT:
        return Ball(math.factorial(n), prec=prec).log()
    return stirling_log_factorial(n, prec)


def stirling_log_factorial(n: int, prec: int = DEFAULT_PREC) -> Ball:
    """n ln n - n + ln(2 pi n)/2 + r with 1/(12n+1) < r < 1/(12n)."""
    bn = Ball(n, prec=prec)
    base = bn * bn.log() - bn + (pi(prec) * bn).mul_2exp(1).log().mul_2exp(-1)
    rem = Ball.from_interval(Ball(1, prec=prec) / (12 * n + 1), Ball(1, prec=prec) / (12 * n), prec)
    return base + rem
