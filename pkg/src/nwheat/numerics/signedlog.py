"""Sign plus log-magnitude enclosures for quantities too large to tabulate directly."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cmp_to_key

from mpmath.libmp import mpf_cmp

from .ball import Ball, zero
from .precision import DEFAULT_PREC, SignIndeterminate


@dataclass(frozen=True)
class SignedLog:
    sign: int
    logmag: Ball | None = None

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or +1, got {self.sign!r}")
        if self.sign and self.logmag is None:
            raise ValueError("nonzero SignedLog needs a log-magnitude")

    @classmethod
    def zero(cls) -> "SignedLog":
        return cls(0, None)

    @classmethod
    def from_ball(cls, b: Ball) -> "SignedLog":
        s = b.sign()
        if s is None:
            raise SignIndeterminate(f"ball {b!r} straddles zero")
        if s == 0:
            return cls.zero()
        return cls(s, abs(b).log())

    @classmethod
    def from_log(cls, logmag, sign: int = 1, prec: int = DEFAULT_PREC) -> "SignedLog":
        return cls(sign, Ball.coerce(logmag, prec))

    def to_ball(self, prec: int | None = None) -> Ball:
        if self.sign == 0:
            return zero(prec or DEFAULT_PREC)
        mag = self.logmag.exp()
        return mag if self.sign > 0 else -mag

    @property
    def is_zero(self) -> bool:
        return self.sign == 0

    def __neg__(self):
        return SignedLog(-self.sign, self.logmag)

    def __mul__(self, other: "SignedLog") -> "SignedLog":
        if self.sign == 0 or other.sign == 0:
            return SignedLog.zero()
        return SignedLog(self.sign * other.sign, self.logmag + other.logmag)

    def __truediv__(self, other: "SignedLog") -> "SignedLog":
        if other.sign == 0:
            raise ZeroDivisionError("division by exact zero")
        if self.sign == 0:
            return SignedLog.zero()
        return SignedLog(self.sign * other.sign, self.logmag - other.logmag)

    def scale_log(self, delta) -> "SignedLog":
        """Multiply the magnitude by ``exp(delta)``."""
        if self.sign == 0:
            return self
        return SignedLog(self.sign, self.logmag + delta)

    def root(self, n: int) -> "SignedLog":
        """``|x|**(1/n)`` as a positive SignedLog."""
        if self.sign == 0:
            return self
        return SignedLog(1, self.logmag / n)

    def log10(self) -> float:
        if self.sign == 0:
            return float("-inf")
        return float(self.logmag) / math.log(10)

    def certainly_lt(self, other: "SignedLog") -> bool:
        """Certified ``self < other``; False when undecided."""
        return _cmp_certain(self, other) == -1

    def certainly_gt(self, other: "SignedLog") -> bool:
        return _cmp_certain(self, other) == 1

    def certainly_le(self, other: "SignedLog") -> bool:
        return _cmp_certain(self, other, strict=False) in (-1, 0)

    def to_json(self) -> dict:
        if self.sign == 0:
            return {"sign": 0, "logmag": None}
        return {"sign": self.sign, "logmag": self.logmag.to_json()}

    def __repr__(self):
        if self.sign == 0:
            return "SignedLog(0)"
        return f"SignedLog({'+' if self.sign > 0 else '-'}, ln|x|={self.logmag!r})"


def _cmp_certain(a: SignedLog, b: SignedLog, strict: bool = True):
    """-1/+1 if a<b / a>b is certain, 0 if both exactly zero, None otherwise."""
    if a.sign != b.sign:
        return -1 if a.sign < b.sign else 1
    if a.sign == 0:
        return 0
    if a.logmag.certainly_lt(b.logmag):
        return -1 if a.sign > 0 else 1
    if a.logmag.certainly_gt(b.logmag):
        return 1 if a.sign > 0 else -1
    if not strict and a.sign > 0 and a.logmag.certainly_le(b.logmag):
        return -1
    return None


def log_sum_exp(terms, prec: int = DEFAULT_PREC) -> SignedLog:
    """Signed sum of SignedLog terms, aligned to the largest log-magnitude.

    Raises SignIndeterminate when the aligned sum is a ball straddling zero.
    """
    terms = [t for t in terms if t.sign != 0]
    if not terms:
        return SignedLog.zero()
    ref = max((t.logmag for t in terms), key=cmp_to_key(lambda u, v: mpf_cmp(u.upper(), v.upper())))
    ref = ref.with_prec(max(prec, ref.prec))
    total = zero(prec)
    for t in terms:
        scaled = (t.logmag.with_prec(max(prec, t.logmag.prec)) - ref).exp()
        total = total + scaled if t.sign > 0 else total - scaled
    s = total.sign()
    if s is None:
        raise SignIndeterminate("sum cancels below working precision")
    if s == 0:
        return SignedLog.zero()
    return SignedLog(s, ref + abs(total).log())


def max_log(values):
    """Largest element by upper bound, for reporting."""
    return max(values, key=cmp_to_key(lambda u, v: mpf_cmp(u.upper(), v.upper())))
