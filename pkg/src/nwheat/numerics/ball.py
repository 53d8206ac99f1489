"""Midpoint-radius real enclosures on top of mpmath's raw binary floats.

Midpoints and radii are stored as raw ``libmp`` tuples, whose exponents are
Python integers, so magnitudes such as ``2**(10**11)`` need no special
handling. Radii are kept at a short precision and always rounded up.

Basic operations (add, mul, div, sqrt) in ``libmp`` are correctly rounded, so
their rounding error is charged at one ulp. Transcendental functions are
evaluated with ``GUARD`` extra bits and charged two ulps of the final
precision plus an absolute ``2**-(prec+GUARD-4)`` slack.
"""

from __future__ import annotations

import decimal
from fractions import Fraction
from functools import cmp_to_key, lru_cache

from mpmath import libmp
from mpmath.libmp import (
    fone,
    from_float,
    from_int,
    from_man_exp,
    from_str,
    fzero,
    mpf_abs,
    mpf_add,
    mpf_cmp,
    mpf_cos,
    mpf_div,
    mpf_exp,
    mpf_le,
    mpf_ln2,
    mpf_log,
    mpf_lt,
    mpf_mul,
    mpf_neg,
    mpf_pi,
    mpf_pos,
    mpf_shift,
    mpf_sin,
    mpf_sqrt,
    mpf_sub,
    to_float,
    to_str,
)

from .precision import DEFAULT_PREC, DomainError

RN = libmp.round_nearest
RU = libmp.round_ceiling
RD = libmp.round_floor

RAD_PREC = 30
GUARD = 20

_DEC_CTX = decimal.Context(prec=4, Emax=decimal.MAX_EMAX, Emin=decimal.MIN_EMIN, rounding=decimal.ROUND_CEILING)


def _pow2(e: int):
    return (0, 1, e, 1)


def _ulp(v, prec: int, shift: int = 0):
    """Upper bound for one ulp of ``v`` at ``prec`` bits (zero for exact zero)."""
    if not v[1]:
        return fzero
    return (0, 1, v[2] + v[3] - prec + shift, 1)


def _radd(a, b):
    return mpf_add(a, b, RAD_PREC, RU)


def _rmul(a, b):
    return mpf_mul(a, b, RAD_PREC, RU)


def _rdiv(a, b):
    return mpf_div(a, b, RAD_PREC, RU)


def _is_zero(v) -> bool:
    return v == fzero


def _span(a, b) -> int:
    """Bit span of the exact sum of two raw mpfs."""
    if not a[1] or not b[1]:
        return max(a[3], b[3])
    hi = max(a[2] + a[3], b[2] + b[3])
    lo = min(a[2], b[2])
    return hi - lo + 1


def _add_err(a, b, p: int, neg: bool = False):
    """Rounded sum/difference and its rounding error bound (zero when exact)."""
    if neg:
        b = mpf_neg(b)
    if _span(a, b) <= 4 * p + 64:
        exact = mpf_add(a, b)
        m = mpf_pos(exact, p, RN)
        return m, (fzero if m == exact else _ulp(m, p))
    m = mpf_add(a, b, p, RN)
    return m, _ulp(m, p)


def _mul_err(a, b, p: int):
    if a[3] + b[3] <= 4 * p + 64:
        exact = mpf_mul(a, b)
        m = mpf_pos(exact, p, RN)
        return m, (fzero if m == exact else _ulp(m, p))
    m = mpf_mul(a, b, p, RN)
    return m, _ulp(m, p)


def _expm1_up(r):
    """Upper bound for ``exp(r) - 1`` with ``r >= 0``."""
    if _is_zero(r):
        return fzero
    if mpf_le(r, _pow2(-10)):
        # e^r - 1 <= r + r^2 for 0 <= r <= 1
        return _radd(r, _rmul(r, r))
    e = mpf_exp(r, RAD_PREC + 10, RU)
    return _rmul(mpf_sub(e, fone, RAD_PREC, RU), (0, (1 << 20) + 1, -20, 21))


def _exact(value):
    """Exact raw mpf for ints and floats, else None."""
    if isinstance(value, bool):
        value = int(value)
    if isinstance(value, int):
        return from_int(value)
    if isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            raise DomainError(f"non-finite input {value!r}")
        return from_float(value)
    return None


class Ball:
    """Enclosure ``[mid - rad, mid + rad]`` of a real number."""

    __slots__ = ("mid", "rad", "prec")

    def __init__(self, mid=0, rad=0, prec: int = DEFAULT_PREC):
        b = Ball.coerce(mid, prec)
        r = Ball.coerce(rad, prec)
        if r.mid[0]:
            raise ValueError("radius must be nonnegative")
        self.mid = b.mid
        self.rad = _radd(b.rad, r.upper()) if (r.mid[1] or r.rad[1]) else b.rad
        self.prec = prec

    @classmethod
    def _raw(cls, mid, rad, prec: int) -> "Ball":
        b = object.__new__(cls)
        b.mid = mid
        b.rad = rad
        b.prec = prec
        return b

    @classmethod
    def coerce(cls, value, prec: int = DEFAULT_PREC) -> "Ball":
        """Convert ints, floats, Fractions, decimal strings and mpf values."""
        if isinstance(value, Ball):
            return value
        m = _exact(value)
        if m is not None:
            return cls._raw(m, fzero, prec)
        if hasattr(value, "_mpf_"):
            return cls._raw(value._mpf_, fzero, prec)
        if isinstance(value, str):
            value = Fraction(value.strip())
        if isinstance(value, Fraction):
            p, q = value.numerator, value.denominator
            if q & (q - 1) == 0:
                return cls._raw(from_man_exp(p, -(q.bit_length() - 1)), fzero, prec)
            m = mpf_div(from_int(p), from_int(q), prec, RN)
            return cls._raw(m, _ulp(m, prec), prec)
        raise TypeError(f"cannot convert {type(value).__name__} to Ball")

    @classmethod
    def from_interval(cls, lo, hi, prec: int = DEFAULT_PREC) -> "Ball":
        lo = cls.coerce(lo, prec).lower()
        hi = cls.coerce(hi, prec).upper()
        if mpf_lt(hi, lo):
            raise ValueError("empty interval")
        mid = mpf_shift(mpf_add(lo, hi, prec, RN), -1)
        rad = mpf_sub(hi, mid, RAD_PREC, RU)
        rad2 = mpf_sub(mid, lo, RAD_PREC, RU)
        return cls._raw(mid, rad if mpf_le(rad2, rad) else rad2, prec)

    # -- inspection ---------------------------------------------------------

    def _wp(self) -> int:
        return max(self.prec, self.mid[3], self.rad[3]) + 64

    def lower(self, rnd=RD):
        if _is_zero(self.rad):
            return self.mid
        return mpf_sub(self.mid, self.rad, self._wp(), rnd)

    def upper(self, rnd=RU):
        if _is_zero(self.rad):
            return self.mid
        return mpf_add(self.mid, self.rad, self._wp(), rnd)

    def abs_upper(self):
        return mpf_add(mpf_abs(self.mid), self.rad, self._wp(), RU)

    def abs_lower(self):
        lo = mpf_sub(mpf_abs(self.mid), self.rad, self._wp(), RD)
        return fzero if lo[0] else lo

    def upper_ball(self) -> "Ball":
        return Ball._raw(self.upper(), fzero, self.prec)

    def is_exact(self) -> bool:
        return _is_zero(self.rad)

    def is_exact_zero(self) -> bool:
        return _is_zero(self.mid) and _is_zero(self.rad)

    def is_positive(self) -> bool:
        lo = self.lower()
        return not lo[0] and bool(lo[1])

    def is_negative(self) -> bool:
        hi = self.upper()
        return bool(hi[0]) and bool(hi[1])

    def is_nonnegative(self) -> bool:
        return not self.lower()[0]

    def contains_zero(self) -> bool:
        return not (self.is_positive() or self.is_negative())

    def sign(self):
        """+1, -1, 0 for exact zero, or None when the ball straddles zero."""
        if self.is_exact_zero():
            return 0
        if self.is_positive():
            return 1
        if self.is_negative():
            return -1
        return None

    def certainly_lt(self, other) -> bool:
        other = Ball.coerce(other, self.prec)
        return mpf_lt(self.upper(RU), other.lower(RD))

    def certainly_gt(self, other) -> bool:
        other = Ball.coerce(other, self.prec)
        return mpf_lt(other.upper(RU), self.lower(RD))

    def certainly_le(self, other) -> bool:
        other = Ball.coerce(other, self.prec)
        return mpf_le(self.upper(RU), other.lower(RD))

    def rad_le(self, target) -> bool:
        target = Ball.coerce(target, self.prec)
        return mpf_le(self.rad, target.lower(RD))

    def overlaps(self, other) -> bool:
        other = Ball.coerce(other, self.prec)
        return mpf_le(self.lower(RD), other.upper(RU)) and mpf_le(other.lower(RD), self.upper(RU))

    def contains(self, value) -> bool:
        """Sound containment test: True only if every point of ``value`` is inside."""
        if not isinstance(value, Ball):
            m = _exact(value)
            if m is not None:
                value = Ball._raw(m, fzero, self.prec)
            else:
                value = Ball.coerce(value, self._wp() + 64)
        return mpf_le(self.lower(RU), value.lower(RD)) and mpf_le(value.upper(RU), self.upper(RD))

    def key(self):
        """Exact structural identity, for determinism checks."""
        return (self.mid, self.rad, self.prec)

    def __float__(self):
        return to_float(self.mid)

    def __repr__(self):
        return f"Ball({to_str(self.mid, 20)} +/- {to_str(self.rad, 3)})"

    def mid_str(self, digits: int = 20) -> str:
        return to_str(self.mid, digits)

    # -- serialization -----------------------------------------------------

    def to_json(self, digits: int | None = None) -> dict:
        """Decimal strings whose ball still contains this one."""
        if digits is None:
            digits = max(17, int(self.prec * 0.30103) + 2)
        if _is_zero(self.mid):
            return {"mid": "0", "rad": _fmt_up(self.rad)}
        s = to_str(self.mid, digits)
        # |mid| < 2**(exp+bc): one unit in the last printed place is below this
        step = mpf_div(_pow2(self.mid[2] + self.mid[3]), from_int(10 ** (digits - 1)), RAD_PREC, RU)
        return {"mid": s, "rad": _fmt_up(_radd(self.rad, step))}

    @classmethod
    def from_json(cls, d: dict, prec: int = DEFAULT_PREC) -> "Ball":
        wp = prec + 64
        lo = from_str(d["mid"], wp, RD)
        hi = from_str(d["mid"], wp, RU)
        mid = from_str(d["mid"], prec, RN)
        slack = _radd(_ulp(mid, wp, 8), mpf_sub(hi, lo, RAD_PREC, RU))
        conv = mpf_sub(mid, lo, RAD_PREC, RU) if mid[1] else fzero
        rad = _radd(from_str(d["rad"], RAD_PREC, RU), _radd(conv, slack))
        return cls._raw(mid, rad, prec)

    # -- arithmetic --------------------------------------------------------

    def _prec2(self, other) -> int:
        return self.prec if self.prec >= other.prec else other.prec

    def __neg__(self):
        return Ball._raw(mpf_neg(self.mid), self.rad, self.prec)

    def __pos__(self):
        return self

    def __abs__(self):
        if self.is_nonnegative():
            return self
        if not self.upper()[0] or _is_zero(self.upper()):
            hi = self.abs_upper()
            half = mpf_shift(hi, -1)
            return Ball._raw(half, half, self.prec)
        return -self

    def add(self, other, prec: int | None = None) -> "Ball":
        other = Ball.coerce(other, self.prec)
        p = prec or self._prec2(other)
        m, e = _add_err(self.mid, other.mid, p)
        r = _radd(_radd(self.rad, other.rad), e)
        return Ball._raw(m, r, p)

    def sub(self, other, prec: int | None = None) -> "Ball":
        other = Ball.coerce(other, self.prec)
        p = prec or self._prec2(other)
        m, e = _add_err(self.mid, other.mid, p, neg=True)
        r = _radd(_radd(self.rad, other.rad), e)
        return Ball._raw(m, r, p)

    def mul(self, other, prec: int | None = None) -> "Ball":
        other = Ball.coerce(other, self.prec)
        p = prec or self._prec2(other)
        m, r = _mul_err(self.mid, other.mid, p)
        if self.rad[1] or other.rad[1]:
            r = _radd(r, _rmul(mpf_abs(self.mid), other.rad))
            r = _radd(r, _rmul(mpf_abs(other.mid), self.rad))
            r = _radd(r, _rmul(self.rad, other.rad))
        return Ball._raw(m, r, p)

    def div(self, other, prec: int | None = None) -> "Ball":
        other = Ball.coerce(other, self.prec)
        p = prec or self._prec2(other)
        bm = mpf_abs(other.mid)
        blo = mpf_sub(bm, other.rad, RAD_PREC, RD)
        if not blo[1] or blo[0]:
            raise DomainError("division by a ball containing zero")
        m = mpf_div(self.mid, other.mid, p, RN)
        r = _ulp(m, p)
        if self.rad[1] or other.rad[1]:
            num = _radd(_rmul(mpf_abs(self.mid), other.rad), _rmul(bm, self.rad))
            den = mpf_mul(bm, blo, RAD_PREC, RD)
            r = _radd(r, _rdiv(num, den))
        return Ball._raw(m, r, p)

    __add__ = add
    __sub__ = sub
    __mul__ = mul
    __truediv__ = div

    def __radd__(self, other):
        return Ball.coerce(other, self.prec).add(self)

    def __rsub__(self, other):
        return Ball.coerce(other, self.prec).sub(self)

    def __rmul__(self, other):
        return Ball.coerce(other, self.prec).mul(self)

    def __rtruediv__(self, other):
        return Ball.coerce(other, self.prec).div(self)

    def __pow__(self, n):
        if not isinstance(n, int):
            raise TypeError("only integer powers are supported; use exp/log")
        return self.pow_int(n)

    def mul_2exp(self, e: int) -> "Ball":
        """Exact multiplication by ``2**e``."""
        return Ball._raw(mpf_shift(self.mid, e), mpf_shift(self.rad, e), self.prec)

    def pow_int(self, n: int) -> "Ball":
        if n < 0:
            return 1 / self.pow_int(-n)
        result = Ball._raw(fone, fzero, self.prec)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def sqr(self) -> "Ball":
        if self.contains_zero():
            hi = self.abs_upper()
            hi2 = mpf_mul(hi, hi, RAD_PREC, RU)
            half = mpf_shift(hi2, -1)
            return Ball._raw(half, half, self.prec)
        return self * self

    def with_prec(self, prec: int) -> "Ball":
        return Ball._raw(self.mid, self.rad, prec)

    def rounded(self, prec: int | None = None) -> "Ball":
        """Round the midpoint to ``prec`` bits, folding the error into the radius."""
        p = prec or self.prec
        if self.mid[3] <= p:
            return Ball._raw(self.mid, self.rad, p)
        m = mpf_pos(self.mid, p, RN)
        return Ball._raw(m, _radd(self.rad, _ulp(m, p)), p)

    # -- elementary functions ---------------------------------------------

    def _finish(self, m_wp, p: int, lipschitz_rad=None, absolute: bool = False):
        m = mpf_pos(m_wp, p, RN)
        err = _ulp(m, p, 1)
        if absolute:
            err = _radd(err, _pow2(-(p + GUARD) + 4))
        if lipschitz_rad is not None:
            err = _radd(err, lipschitz_rad)
        return Ball._raw(m, err, p)

    def exp(self) -> "Ball":
        p = self.prec
        if self.is_exact_zero():
            return Ball._raw(fone, fzero, p)
        e = mpf_exp(self.mid, p + GUARD, RN)
        out = self._finish(e, p)
        if self.rad[1]:
            scale = _radd(mpf_abs(out.mid), out.rad)
            out = Ball._raw(out.mid, _radd(out.rad, _rmul(scale, _expm1_up(self.rad))), p)
        return out

    def log(self) -> "Ball":
        p = self.prec
        lo = mpf_sub(self.mid, self.rad, RAD_PREC, RD) if self.rad[1] else self.mid
        if lo[0] or not lo[1]:
            raise DomainError("log of a ball touching or below zero")
        if self.mid == fone and not self.rad[1]:
            return Ball._raw(fzero, fzero, p)
        m = mpf_log(self.mid, p + GUARD, RN)
        prop = _rdiv(self.rad, lo) if self.rad[1] else None
        return self._finish(m, p, prop, absolute=True)

    def sin(self) -> "Ball":
        p = self.prec
        if self.is_exact_zero():
            return Ball._raw(fzero, fzero, p)
        m = mpf_sin(self.mid, p + GUARD, RN)
        prop = self._trig_prop()
        return self._finish(m, p, prop, absolute=True)

    def cos(self) -> "Ball":
        p = self.prec
        if self.is_exact_zero():
            return Ball._raw(fone, fzero, p)
        m = mpf_cos(self.mid, p + GUARD, RN)
        return self._finish(m, p, self._trig_prop(), absolute=True)

    def _trig_prop(self):
        if not self.rad[1]:
            return None
        two = from_int(2)
        return self.rad if mpf_le(self.rad, two) else two

    def sqrt(self) -> "Ball":
        p = self.prec
        if self.is_exact_zero():
            return self
        lo = mpf_sub(self.mid, self.rad, RAD_PREC, RD) if self.rad[1] else self.mid
        if lo[0] or not lo[1]:
            raise DomainError("sqrt of a ball touching or below zero")
        m = mpf_sqrt(self.mid, p, RN)
        r = _ulp(m, p)
        if self.rad[1]:
            r = _radd(r, _rdiv(self.rad, mpf_sqrt(self.mid, RAD_PREC, RD)))
        return Ball._raw(m, r, p)


def _fmt_up(x) -> str:
    """Decimal string that is >= the nonnegative raw mpf ``x``."""
    if _is_zero(x):
        return "0"
    s = to_str(x, 6)
    d = _DEC_CTX.next_plus(decimal.Decimal(s))
    return str(d)


@lru_cache(maxsize=None)
def pi(prec: int = DEFAULT_PREC) -> Ball:
    m = mpf_pi(prec, RN)
    return Ball._raw(m, _ulp(m, prec, 1), prec)


@lru_cache(maxsize=None)
def ln2(prec: int = DEFAULT_PREC) -> Ball:
    m = mpf_ln2(prec, RN)
    return Ball._raw(m, _ulp(m, prec, 1), prec)


def exp2(x, prec: int = DEFAULT_PREC) -> Ball:
    """``2**x`` for a real (ball) exponent; exact for integers."""
    if isinstance(x, int):
        return Ball._raw(_pow2(x), fzero, prec)
    x = Ball.coerce(x, prec)
    return (x * ln2(max(prec, x.prec))).exp()


def mpf_to_fraction(v) -> Fraction:
    """Exact rational value of a finite raw mpf."""
    sign, man, exp, _ = v
    if not man:
        return Fraction(0)
    num = int(man) << exp if exp >= 0 else int(man)
    den = 1 if exp >= 0 else 1 << -exp
    f = Fraction(num, den)
    return -f if sign else f


def zero(prec: int = DEFAULT_PREC) -> Ball:
    return Ball._raw(fzero, fzero, prec)


def one(prec: int = DEFAULT_PREC) -> Ball:
    return Ball._raw(fone, fzero, prec)


def hull(balls) -> Ball:
    balls = list(balls)
    key = cmp_to_key(mpf_cmp)
    lo = min((b.lower() for b in balls), key=key)
    hi = max((b.upper() for b in balls), key=key)
    p = max(b.prec for b in balls)
    return Ball.from_interval(Ball._raw(lo, fzero, p), Ball._raw(hi, fzero, p), p)
