"""Certified pointwise evaluation of the three solution families.

    u1(x, t)     = sum_k exp(-2^k (1 + x)) sin(2^(2k+1) t - 2^k x),            x >= 0
    u2(x, t)     = sum_k 2^-k Phi(x + 1, t - r_k),                              x >= 0
    w_eps(x, t)  = sum_k exp(-2^((1+eps) k) - 2^k x) sin(2^(2k+1) t - 2^k x),   all x

with k running from 1 and r_k the fixed enumeration of the rationals below.
Every result folds a certified truncation tail into the returned ball.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from mpmath.libmp import fzero

from .numerics.ball import mpf_to_fraction as to_fraction

from .heat_kernel import kernel_derivative_sup, phi
from .numerics import Ball, DomainError, exp2, ln2, one, refine, zero
from .numerics import kernels
from .numerics.precision import DEFAULT_PREC, check_prec


# rational eps = p/q with q up to this are handled with exact integer powers
EXACT_DEN_MAX = 64


class Kind(str, enum.Enum):
    U1 = "u1"
    U2 = "u2"
    WEPS = "weps"


# -- rational enumeration ------------------------------------------------------


def fusc(n: int) -> int:
    """Stern's diatomic sequence: fusc(0)=0, fusc(1)=1, fusc(2n)=fusc(n), fusc(2n+1)=fusc(n)+fusc(n+1)."""
    a, b = 1, 0
    while n:
        if n & 1:
            b += a
        else:
            a += b
        n >>= 1
    return b


def calkin_wilf(i: int) -> Fraction:
    """i-th positive rational in Calkin-Wilf order: 1, 1/2, 2, 1/3, 3/2, ..."""
    if i < 1:
        raise ValueError("Calkin-Wilf index starts at 1")
    return Fraction(fusc(i), fusc(i + 1))


def calkin_wilf_index(q: Fraction) -> int:
    """Inverse of calkin_wilf, by walking up the tree with run-length steps."""
    q = Fraction(q)
    if q <= 0:
        raise ValueError("Calkin-Wilf covers positive rationals only")
    p, r = q.numerator, q.denominator
    # collect (bit, run) pairs from the node up to the root
    runs = []
    while not (p == 1 and r == 1):
        if p > r:
            steps = (p - 1) // r if r == 1 else p // r
            p -= steps * r
            runs.append((1, steps))
        else:
            steps = (r - 1) // p if p == 1 else r // p
            r -= steps * p
            runs.append((0, steps))
    idx = 1
    for bit, steps in reversed(runs):
        for _ in range(steps):
            idx = 2 * idx + bit
    return idx


@dataclass(frozen=True)
class RationalEnumeration:
    """r_1 = 0, r_(2i) = q_i, r_(2i+1) = -q_i with q_i the Calkin-Wilf sequence."""

    name: str = "calkin-wilf-interleaved"

    def __call__(self, k: int) -> Fraction:
        return enumerate_rational(k)

    def index(self, r) -> int:
        return rational_index(r)


@lru_cache(maxsize=1 << 16)
def enumerate_rational(k: int) -> Fraction:
    if isinstance(k, bool) or not isinstance(k, int) or k < 1:
        raise ValueError(f"enumeration index must be a positive integer, got {k!r}")
    if k == 1:
        return Fraction(0)
    q = calkin_wilf(k // 2)
    return q if k % 2 == 0 else -q


def rational_index(r) -> int:
    r = Fraction(r)
    if r == 0:
        return 1
    i = calkin_wilf_index(abs(r))
    return 2 * i if r > 0 else 2 * i + 1


DEFAULT_ENUMERATION = RationalEnumeration()


@dataclass(frozen=True)
class SolutionId:
    kind: Kind
    eps: Fraction | None = None
    enumeration: RationalEnumeration | None = None

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is Kind.WEPS:
            if self.eps is None:
                raise ValueError("weps needs eps")
            eps = _as_fraction(self.eps)
            if not (0 < eps < 1):
                raise DomainError(f"eps must lie in (0, 1), got {self.eps}")
            object.__setattr__(self, "eps", eps)
        elif self.eps is not None:
            raise ValueError(f"eps only applies to weps, not {kind.value}")
        if kind is Kind.U2 and self.enumeration is None:
            object.__setattr__(self, "enumeration", DEFAULT_ENUMERATION)

    @property
    def half_plane(self) -> bool:
        return self.kind in (Kind.U1, Kind.U2)

    def check_x(self, x: Ball):
        if self.half_plane and not x.is_nonnegative():
            raise DomainError(f"{self.kind.value} is defined for x >= 0 only")

    def label(self) -> str:
        return f"weps({self.eps})" if self.kind is Kind.WEPS else self.kind.value

    @classmethod
    def u1(cls):
        return cls(Kind.U1)

    @classmethod
    def u2(cls):
        return cls(Kind.U2)

    @classmethod
    def weps(cls, eps):
        return cls(Kind.WEPS, eps)


def _as_fraction(v) -> Fraction:
    """Exact rational view of an int/float/str/Fraction/exact Ball."""
    if isinstance(v, Ball):
        if not v.is_exact():
            raise ValueError("expected an exact value")
        return to_fraction(v.mid)
    if isinstance(v, float):
        return Fraction(v)
    return Fraction(v)


def exact_or_none(v):
    try:
        return _as_fraction(v)
    except (ValueError, TypeError):
        return None


# -- results -----------------------------------------------------------------


@dataclass(frozen=True)
class EvalResult:
    value: Ball
    terms_used: int
    tail_bound: Ball
    prec: int
    flagged: bool = False
    reason: str = ""

    def to_json(self) -> dict:
        out = {
            "value": self.value.to_json(),
            "terms_used": self.terms_used,
            "tail_bound": self.tail_bound.to_json(),
            "prec": self.prec,
        }
        if self.flagged:
            out["flagged"] = self.reason or True
        return out


def _geom_factor(prec: int) -> Ball:
    """1 / (1 - e^-2)."""
    return 1 / (1 - Ball(-2, prec=prec).exp())


def _finish(total: Ball, tail: Ball) -> Ball:
    if tail.is_exact_zero():
        return total
    return total + Ball._raw(fzero, tail.upper(), total.prec)


def _refined(compute, target_rad, prec: int) -> EvalResult:
    if target_rad is None:
        return compute(prec)
    res = refine(target_rad, compute, start=prec)
    out = res.value
    if not res.reached:
        out = EvalResult(out.value, out.terms_used, out.tail_bound, out.prec, True, res.reason)
    return out


def _log2_floor_target(target_rad) -> int:
    """Integer e with 2^-e <= target_rad (target > 0)."""
    t = Fraction(target_rad) if not isinstance(target_rad, Ball) else to_fraction(target_rad.lower())
    if t <= 0:
        raise ValueError("target_rad must be > 0")
    e = 0
    while Fraction(1, 2**e) > t:
        e += 1
    return e


# -- u1 ----------------------------------------------------------------------


def u1_tail(K: int, x: Ball, prec: int) -> Ball:
    """Upper bound of sum_{k > K} exp(-2^k (1 + x)): exp(-2^(K+1)(1+x)) / (1 - e^-2)."""
    xl = Ball._raw(x.lower(), fzero, prec)
    return (-(xl + 1).mul_2exp(K + 1)).exp() * _geom_factor(prec)


def _u1_terms(x: Ball, prec: int, need_bits: int) -> int:
    # exp(-2^(K+1)(1+x)) <= 2^-need_bits once 2^(K+1) >= need_bits ln 2 / (1 + x_lo)
    xl = max(float(x) - 1e-9, 0.0)
    K = 1
    while 2 ** (K + 1) * (1 + xl) < need_bits * math.log(2) + 4:
        K += 1
    return K


def _origin(x: Ball, t: Ball) -> bool:
    return x.is_exact_zero() and t.is_exact_zero()


def eval_u1(x, t, target_rad=None, prec: int = DEFAULT_PREC, terms: int | None = None) -> EvalResult:
    """Certified u1(x, t). ``terms`` pins the truncation index K; otherwise K is
    the smallest index whose tail is below ``target_rad/2`` (or 2^-prec)."""
    prec = check_prec(prec)

    def compute(p):
        xb, tb = Ball.coerce(x, p), Ball.coerce(t, p)
        SolutionId.u1().check_x(xb)
        if terms is not None:
            K = terms
        else:
            bits = p + 4 if target_rad is None else _log2_floor_target(target_rad) + 2
            K = _u1_terms(xb, p, bits)
        total = kernels.lacunary_sum(0, xb, tb, None, 1, K, p)
        # at the origin every sine argument is exactly 0, so the tail vanishes too
        tail = zero(p) if _origin(xb, tb) else u1_tail(K, xb, p)
        return EvalResult(_finish(total, tail), K, tail, p)

    return _refined(compute, target_rad, prec)


# -- w_eps ---------------------------------------------------------------------


def _eps_ball(eps, prec: int) -> Ball:
    e = Ball.coerce(eps if not isinstance(eps, float) else Fraction(eps), prec)
    if not (e.is_positive() and e.certainly_lt(1)):
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    return e


def weps_crossover(eps, x, prec: int = DEFAULT_PREC) -> int:
    """Smallest k >= 1 with 2^(eps k) >= |x| + 1 certified (1 when x >= 0).

    For rational eps = p/q and rational |x| + 1 = M the test 2^(p k) >= M^q is
    exact; otherwise it is decided in ball arithmetic, moving past undecided k.
    """
    xb = Ball.coerce(x, prec)
    if xb.is_nonnegative():
        return 1
    e_exact = exact_or_none(eps)
    M = to_fraction(xb.abs_upper()) + 1
    if e_exact is not None and e_exact.denominator <= EXACT_DEN_MAX:
        p, q = e_exact.numerator, e_exact.denominator
        Mq = M**q
        k = 1
        while Fraction(2 ** (p * k)) < Mq:
            k += 1
        return k
    e = _eps_ball(eps, prec)
    lm = Ball.coerce(M, prec).log()
    k = 1
    while not lm.certainly_le(e * k * ln2(prec)):
        k += 1
    return k


def weps_log_weight(k: int, eps: Ball, x: Ball, prec: int) -> Ball:
    """ln of exp(-2^((1+eps)k) - 2^k x)."""
    return -(exp2((eps + 1) * k, prec) + x.mul_2exp(k))


def weps_tail(K: int, eps: Ball, x: Ball, prec: int) -> Ball:
    """a_(K+1) / (1 - e^-2), valid once K >= crossover (term ratio <= e^(-2^k))."""
    xl = Ball._raw(x.lower(), fzero, prec)
    return weps_log_weight(K + 1, eps, xl, prec).exp().upper_ball() * _geom_factor(prec)


def _weps_terms(eps: Ball, x: Ball, kstar: int, bits: int, absolute: bool) -> int:
    """K >= kstar with a_(K+1) below 2^-bits (absolute) or 2^-bits * max a_k (relative)."""
    e, xf = float(eps), float(x)

    def la(k):
        return -(2.0 ** ((1 + e) * k)) - 2.0**k * xf

    best = max(la(k) for k in range(1, kstar + 1))
    K = kstar
    while True:
        ref = 0.0 if absolute else max(best, 0.0) if best > 0 else best
        if la(K + 1) < ref - (bits + 4) * math.log(2):
            return K
        best = max(best, la(K + 1))
        K += 1


def eval_weps(eps, x, t, target_rad=None, prec: int = DEFAULT_PREC, terms: int | None = None) -> EvalResult:
    """Certified w_eps(x, t). K is never below the crossover index (see weps_crossover);
    a ``terms`` request below it is raised to it."""
    prec = check_prec(prec)
    kstar = weps_crossover(eps, x, prec)

    def compute(p):
        e = _eps_ball(eps, p)
        xb, tb = Ball.coerce(x, p), Ball.coerce(t, p)
        if terms is not None:
            K = max(terms, kstar)
        elif target_rad is None:
            K = _weps_terms(e, xb, kstar, p, absolute=False)
        else:
            K = _weps_terms(e, xb, kstar, _log2_floor_target(target_rad) + 2, absolute=True)
        total = kernels.lacunary_sum(0, xb, tb, e, 1, K, p)
        tail = zero(p) if _origin(xb, tb) else weps_tail(K, e, xb, p)
        return EvalResult(_finish(total, tail), K, tail, p)

    return _refined(compute, target_rad, prec)


# -- u2 ----------------------------------------------------------------------


@lru_cache(maxsize=64)
def _u2_sup(prec: int) -> Ball:
    """(2 pi e)^(-1/2) = sup_s Phi(1, s)."""
    return kernel_derivative_sup(0, 1, prec).bound


def u2_tail(K: int, x: Ball, prec: int) -> Ball:
    """2^-K (2 pi e)^(-1/2) / (x + 1), using x's lower end."""
    xl = Ball._raw(x.lower(), fzero, prec)
    return (_u2_sup(prec).upper_ball() / (xl + 1)).mul_2exp(-K)


def shifted_time(t, r: Fraction, prec: int):
    """t - r as an exact Fraction when t is exact, else as a Ball."""
    te = exact_or_none(t)
    if te is not None:
        return te - r
    return Ball.coerce(t, prec) - Ball.coerce(r, prec)


def _is_nonpositive(s) -> bool:
    if isinstance(s, Fraction):
        return s <= 0
    hi = s.upper()
    return bool(hi[0]) or hi == fzero


def eval_u2(x, t, target_rad=None, prec: int = DEFAULT_PREC, terms: int | None = None) -> EvalResult:
    """Certified u2(x, t) under the fixed rational enumeration. Terms with
    t - r_k <= 0 are exact zeros."""
    prec = check_prec(prec)

    def compute(p):
        xb = Ball.coerce(x, p)
        SolutionId.u2().check_x(xb)
        if terms is not None:
            K = terms
        else:
            K = p + 2 if target_rad is None else _log2_floor_target(target_rad) + 1
        y = xb + 1
        s_list, w_list = [], []
        straddle = []
        for k in range(1, K + 1):
            s = shifted_time(t, enumerate_rational(k), p)
            if _is_nonpositive(s):
                continue
            sb = Ball.coerce(s, p)
            if sb.is_positive():
                s_list.append(sb)
                w_list.append(exp2(-k, p))
            else:
                straddle.append((k, sb))
        total = kernels.heat_dx_sum(0, y, s_list, w_list, p) if s_list else zero(p)
        for k, sb in straddle:
            total = total + phi(y, sb, p).mul_2exp(-k)
        tail = u2_tail(K, xb, p)
        return EvalResult(_finish(total, tail), K, tail, p)

    return _refined(compute, target_rad, prec)


def evaluate(sol: SolutionId, x, t, target_rad=None, prec: int = DEFAULT_PREC, terms: int | None = None) -> EvalResult:
    if sol.kind is Kind.U1:
        return eval_u1(x, t, target_rad, prec, terms)
    if sol.kind is Kind.U2:
        return eval_u2(x, t, target_rad, prec, terms)
    return eval_weps(sol.eps, x, t, target_rad, prec, terms)
