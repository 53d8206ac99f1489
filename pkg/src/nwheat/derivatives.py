"""Time derivatives of any order at a point, with certified truncation.

For the lacunary families the n-th t-derivative is a lacunary sum with term
magnitudes

    b_k = exp(-a_k - 2^k x0) 2^(n(2k+1)),   a_k = 2^k (u1) or 2^((1+eps)k) (w_eps),

whose consecutive ratio b_(k+1)/b_k decreases in k once past the w_eps crossover.
We keep terms until that ratio is certified <= 1/2 at three consecutive k (and
the next term is below the working precision), then add 2 b_(K+1) as the tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from mpmath.libmp import fzero

from .heat_kernel import kernel_derivative_sup, phi_dt
from .numerics import Ball, SignedLog, exp2, ln2, one, prec_cap, zero
from .numerics import kernels
from .numerics.factorial import log_factorial, stirling_log_factorial
from .numerics.precision import DEFAULT_PREC, DomainError, check_prec
from .solutions import (
    Kind,
    SolutionId,
    _eps_ball,
    _is_nonpositive,
    enumerate_rational,
    shifted_time,
    weps_crossover,
)

U2_MAX_ORDER = 60

__all__ = [
    "TimeDerivative",
    "lacunary_log_term",
    "lacunary_majorant",
    "log_factorial",
    "stirling_log_factorial",
    "taylor_coefficient",
    "time_derivative",
    "u1_time_derivative",
    "u2_time_derivative",
    "weps_time_derivative",
]


def point(v, prec: int) -> Ball:
    """Coerce a coordinate; callables are evaluated at ``prec`` so irrational
    points (e.g. sqrt 2) sharpen when precision escalates."""
    if callable(v) and not isinstance(v, Ball):
        return v(prec)
    return Ball.coerce(v, prec)


@dataclass(frozen=True)
class TimeDerivative:
    solution: SolutionId
    order: int
    x0: object
    t0: object
    ball: Ball
    terms_used: int
    tail_ball: Ball
    prec: int

    @property
    def sign(self):
        return self.ball.sign()

    @property
    def sign_determined(self) -> bool:
        return self.ball.sign() is not None

    @property
    def value(self) -> SignedLog | None:
        """SignedLog view, or None when the ball straddles zero."""
        if self.ball.sign() is None:
            return None
        return SignedLog.from_ball(self.ball)

    @property
    def tail_bound(self) -> SignedLog:
        return SignedLog.from_ball(self.tail_ball) if not self.tail_ball.is_exact_zero() else SignedLog.zero()

    def abs_lower(self) -> Ball:
        """Certified lower bound of |h^(n)| as an exact ball (0 if indeterminate)."""
        return Ball._raw(self.ball.abs_lower(), fzero, self.prec)

    def tail_ok(self) -> bool:
        """tail <= |value| / 100 (the invariant for a determined result)."""
        if self.tail_ball.is_exact_zero():
            return True
        return self.tail_ball.upper_ball().certainly_le(self.abs_lower().mul_2exp(0) / 100)

    def to_json(self) -> dict:
        v = self.value
        return {
            "solution": self.solution.label(),
            "order": self.order,
            "value": self.ball.to_json(),
            "log10_abs": None if v is None or v.is_zero else round(v.log10(), 6),
            "sign": self.ball.sign(),
            "terms_used": self.terms_used,
            "tail_bound": self.tail_ball.to_json(digits=6),
            "prec": self.prec,
        }


# -- lacunary families ----------------------------------------------------------


def lacunary_log_term(n: int, k: int, x0: Ball, eps: Ball | None, prec: int) -> Ball:
    """ln b_k = n(2k+1) ln 2 - a_k - 2^k x0."""
    a = one(prec).mul_2exp(k) if eps is None else exp2((eps + 1) * k, prec)
    return ln2(prec) * (n * (2 * k + 1)) - a - x0.mul_2exp(k)


def _float_log_term(n, k, xf, ef):
    a = 2.0**k if ef is None else 2.0 ** ((1 + ef) * k)
    return n * (2 * k + 1) * math.log(2) - a - 2.0**k * xf


def _choose_K(n: int, x0: Ball, eps: Ball | None, kmin: int, prec: int) -> int:
    """Smallest K >= kmin + 2 such that the ratio b_(k+1)/b_k <= 1/2 holds (in
    floating point) at K-2, K-1, K and b_(K+1) is below 2^-(prec+8) of the
    largest retained term."""
    xf = float(x0)
    ef = None if eps is None else float(eps)
    lt = [None] + [_float_log_term(n, k, xf, ef) for k in range(1, kmin + 1)]
    k0 = kmin
    while True:
        lt.append(_float_log_term(n, len(lt), xf, ef))
        if lt[k0 + 1] - lt[k0] <= -math.log(2) - 1e-9:
            break
        k0 += 1
    K = k0 + 2
    while len(lt) <= K + 1:
        lt.append(_float_log_term(n, len(lt), xf, ef))
    top = max(lt[1:K + 1])
    while lt[K + 1] > top - (prec + 8) * math.log(2):
        K += 1
        if len(lt) <= K + 1:
            lt.append(_float_log_term(n, len(lt), xf, ef))
    return K


def _lacunary_tail(n: int, K: int, x0: Ball, eps: Ball | None, prec: int) -> Ball:
    """2 b_(K+1), after certifying b_(K+2)/b_(K+1) <= 1/2 (the ratio decreases from there on)."""
    xl = Ball._raw(x0.lower(), fzero, prec)
    l1 = lacunary_log_term(n, K + 1, xl, eps, prec)
    l2 = lacunary_log_term(n, K + 2, xl, eps, prec)
    if not (l2 - l1).certainly_le(-ln2(prec)):
        raise ArithmeticError("truncation ratio could not be certified <= 1/2")
    return l1.exp().upper_ball().mul_2exp(1)


def _lacunary_derivative(sol: SolutionId, n: int, x0, t0, prec: int, max_prec: int | None, terms: int | None):
    if n < 0:
        raise ValueError("derivative order must be >= 0")
    prec = check_prec(prec)
    cap = min(prec_cap(), max_prec or prec * 8)
    p = prec
    while True:
        xb, tb = point(x0, p), point(t0, p)
        sol.check_x(xb)
        eps = None if sol.kind is Kind.U1 else _eps_ball(sol.eps, p)
        kmin = 1 if eps is None else weps_crossover(sol.eps, xb, p)
        K = terms if terms is not None else _choose_K(n, xb, eps, kmin, p)
        if terms is not None and K < kmin:
            K = kmin
        total = kernels.lacunary_sum(n, xb, tb, eps, 1, K, p)
        if n % 2 == 0 and xb.is_exact_zero() and tb.is_exact_zero():
            # every sine argument is exactly 0, tail included
            tail = zero(p)
        elif terms is not None:
            tail = _tail_generic(n, K, xb, eps, kmin, p)
        else:
            tail = _lacunary_tail(n, K, xb, eps, p)
        val = total if tail.is_exact_zero() else total + Ball._raw(fzero, tail.upper(), p)
        res = TimeDerivative(sol, n, x0, t0, val, K, tail, p)
        if res.sign_determined or p >= cap:
            return res
        p = min(2 * p, cap)


def _tail_generic(n: int, K: int, x0: Ball, eps, kmin: int, prec: int) -> Ball:
    """Tail after an arbitrary K: sum_{k > K} b_k, certified by scanning ahead to
    the first index where the ratio is <= 1/2 and bounding the rest geometrically."""
    xl = Ball._raw(x0.lower(), fzero, prec)
    total = zero(prec)
    k = K + 1
    while True:
        lk = lacunary_log_term(n, k, xl, eps, prec)
        lk1 = lacunary_log_term(n, k + 1, xl, eps, prec)
        if k >= kmin and (lk1 - lk).certainly_le(-ln2(prec)):
            return (total + lk.exp().mul_2exp(1)).upper_ball()
        total = total + lk.exp()
        k += 1


def u1_time_derivative(n: int, x0, t0, prec: int = DEFAULT_PREC, max_prec: int | None = None, terms: int | None = None) -> TimeDerivative:
    """d^n/dt^n u1(x0, t) at t0. Precision doubles (up to ``max_prec``) while the sign is undecided."""
    return _lacunary_derivative(SolutionId.u1(), n, x0, t0, prec, max_prec, terms)


def weps_time_derivative(n: int, eps, x0, t0, prec: int = DEFAULT_PREC, max_prec: int | None = None, terms: int | None = None) -> TimeDerivative:
    return _lacunary_derivative(SolutionId.weps(eps), n, x0, t0, prec, max_prec, terms)


def lacunary_majorant(n: int, x0, eps=None, prec: int = DEFAULT_PREC) -> Ball:
    """Upper bound of sum_k b_k, i.e. of sup_t |d^n/dt^n| of u1 (eps None) or w_eps at x0."""
    xb = Ball.coerce(x0, prec)
    e = None if eps is None else _eps_ball(eps, prec)
    kmin = 1 if e is None else weps_crossover(eps, xb, prec)
    K = _choose_K(n, xb, e, kmin, prec)
    xl = Ball._raw(xb.lower(), fzero, prec)
    total = zero(prec)
    for k in range(1, K + 1):
        total = total + lacunary_log_term(n, k, xl, e, prec).exp()
    return (total + _lacunary_tail(n, K, xb, e, prec)).upper_ball()


# -- u2 -----------------------------------------------------------------------


def u2_time_derivative(n: int, x0, t0, prec: int = DEFAULT_PREC, terms: int = 60) -> TimeDerivative:
    """sum_{k <= K} 2^-k d^n/dt^n Phi(x0 + 1, t0 - r_k) plus 2^-K sup_s |d^n/dt^n Phi(x0+1, s)|."""
    if n < 0:
        raise ValueError("derivative order must be >= 0")
    if n > U2_MAX_ORDER:
        raise DomainError(f"u2 derivative order {n} exceeds the certified cap {U2_MAX_ORDER}")
    prec = check_prec(prec)
    sol = SolutionId.u2()
    xb = point(x0, prec)
    sol.check_x(xb)
    y = xb + 1
    s_list, w_list = [], []
    extra = zero(prec)
    t_in = t0(prec) if callable(t0) and not isinstance(t0, Ball) else t0
    for k in range(1, terms + 1):
        s = shifted_time(t_in, enumerate_rational(k), prec)
        if _is_nonpositive(s):
            continue
        sb = Ball.coerce(s, prec)
        if sb.is_positive():
            s_list.append(sb)
            w_list.append(exp2(-k, prec))
        else:
            extra = extra + phi_dt(n, y, sb, prec).mul_2exp(-k)
    total = kernels.heat_dx_sum(2 * n, y, s_list, w_list, prec) if s_list else zero(prec)
    total = total + extra
    sup = kernel_derivative_sup(n, Ball._raw(y.lower(), fzero, prec), prec).bound
    tail = sup.upper_ball().mul_2exp(-terms)
    val = total + Ball._raw(fzero, tail.upper(), prec)
    return TimeDerivative(sol, n, x0, t0, val, terms, tail, prec)


def time_derivative(sol: SolutionId, n: int, x0, t0, prec: int = DEFAULT_PREC, **kw) -> TimeDerivative:
    if sol.kind is Kind.U1:
        return u1_time_derivative(n, x0, t0, prec, **kw)
    if sol.kind is Kind.WEPS:
        return weps_time_derivative(n, sol.eps, x0, t0, prec, **kw)
    return u2_time_derivative(n, x0, t0, prec, **kw)


# -- Taylor coefficients ---------------------------------------------------------


def taylor_coefficient(sol: SolutionId, n: int, x0, t0, prec: int = DEFAULT_PREC, deriv: TimeDerivative | None = None) -> SignedLog | None:
    """(|h^(n)(t0)| / n!)^(1/n) as a SignedLog: logmag = (ln|h^(n)| - ln n!) / n.

    Returns None when the derivative's sign is undecided (no data point), and
    the zero SignedLog when the derivative is exactly zero.
    """
    if n < 1:
        raise ValueError("Taylor root needs n >= 1")
    d = deriv if deriv is not None else time_derivative(sol, n, x0, t0, prec)
    v = d.value
    if v is None:
        return None
    if v.is_zero:
        return SignedLog.zero()
    return SignedLog(1, (v.logmag - log_factorial(n, d.prec)) / n)
