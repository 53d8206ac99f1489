"""Growth envelope |w_eps(x, t)| <= A1 exp(A2 |x|^(1 + 1/eps)) with explicit constants.

With g_k(x) = exp(2^k (x - 2^(eps k))) one has |w_eps(x, t)| <= sum_k g_k(|x|).
For x > 100 the index K of ``choose_K`` splits the sum into an increasing head
(bounded by exp(B2 x^(1+1/eps))) and a tail bounded by (1 + B3) g_(K+1).
On [0, 100] every g_k is increasing in x, so B1 = sum_k g_k(100).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from mpmath.libmp import fzero

from ..numerics import Ball, Undecidable, exp2, ln2, zero
from ..numerics.precision import DEFAULT_PREC, DomainError, escalation_ladder
from ..solutions import _eps_ball, eval_weps


def _c(eps: Ball) -> Ball:
    """2^(1+eps) - 1."""
    return exp2(eps + 1, eps.prec) - 1


def choose_K_value(eps: Ball, x: Ball) -> Ball:
    """(1/eps) log2(x / (2^(1+eps) - 1)); K is its ceiling."""
    return (x / _c(eps)).log() / (ln2(x.prec) * eps)


@dataclass(frozen=True)
class KChoice:
    K: int
    form1_ok: bool
    form2_ok: bool
    k_ge_4_over_eps: bool


def choose_K_checked(eps, x, prec: int = DEFAULT_PREC) -> KChoice:
    """The unique positive K with v <= K < 1 + v, v = (1/eps) log2(x / (2^(1+eps) - 1)),
    cross-checked against x/c <= 2^(eps K) < 2^eps x / c."""
    for p in escalation_ladder(prec):
        e = _eps_ball(eps, p)
        xb = Ball.coerce(x, p)
        if not xb.certainly_gt(100):
            raise DomainError("choose_K needs x > 100; below that the uniform bound B1 applies")
        v = choose_K_value(e, xb)
        lo = math.ceil(float(v))
        # candidates near the ceiling; keep the one the ball certifies
        K = None
        for cand in (lo - 1, lo, lo + 1):
            if cand >= 1 and v.certainly_le(cand) and (v + 1).certainly_gt(cand):
                K = cand
                break
        if K is None:
            continue
        c = _c(e)
        pw = exp2(e * K, p)
        form2 = (xb / c).certainly_le(pw) and pw.certainly_lt(exp2(e, p) * xb / c)
        four = Ball(4, prec=p).certainly_le(e * K)
        return KChoice(K, True, bool(form2), bool(four))
    raise Undecidable("K window undecided at the precision cap")


def choose_K(eps, x, prec: int = DEFAULT_PREC) -> int:
    return choose_K_checked(eps, x, prec).K


def g_log(k: int, x: Ball, eps: Ball) -> Ball:
    """ln g_k(x) = 2^k (x - 2^(eps k))."""
    return (x - exp2(eps * k, x.prec)).mul_2exp(k)


def g_log_ratio(k: int, x: Ball, eps: Ball) -> Ball:
    """ln g_(k+1)(x)/g_k(x) = 2^k (x - 2^(eps k) (2^(1+eps) - 1))."""
    return (x - exp2(eps * k, x.prec) * _c(eps)).mul_2exp(k)


def _B3(eps: Ball, prec: int) -> Ball:
    """sum_{j>=1} exp(-(2^eps - 1)(2^j - 1)) with a certified geometric tail."""
    d = exp2(eps, prec) - 1
    total = zero(prec)
    j = 1
    while True:
        lj = -(d * (2**j - 1))
        total = total + lj.exp()
        # ratio of consecutive terms is exp(-d 2^j), decreasing in j
        lr = -(d.mul_2exp(j + 1))
        if lr.certainly_le(-ln2(prec)) and lj.certainly_lt(-ln2(prec) * (prec + 8)):
            tail = (-(d * (2 ** (j + 1) - 1))).exp().mul_2exp(1)
            return total + Ball._raw(fzero, tail.upper(), prec)
        j += 1


def _B1(eps: Ball, prec: int) -> Ball:
    """sum_k g_k(100): each g_k is increasing in x, so this is the sup over [0, 100]."""
    x = Ball(100, prec=prec)
    total = zero(prec)
    top = None
    k = 1
    while True:
        lk = g_log(k, x, eps)
        total = total + lk.exp()
        top = lk if top is None or lk.certainly_gt(top) else top
        lr = g_log_ratio(k, x, eps)
        # past the peak the log-ratio is negative and decreasing in k
        if lr.certainly_le(-ln2(prec)) and (lk + lr).certainly_lt(top - ln2(prec) * (prec + 8)):
            tail = (lk + lr).exp().mul_2exp(1)
            return total + Ball._raw(fzero, tail.upper(), prec)
        k += 1


@dataclass(frozen=True)
class EnvelopeCertificate:
    eps: Fraction
    B1: Ball
    B2: Ball
    B3: Ball
    A1: Ball
    A2: Ball
    note: str = ""

    def to_json(self) -> dict:
        def j(b):
            d = b.to_json(digits=12)
            d["log10"] = round(float(b.log()) / math.log(10), 6)
            return d

        return {
            "eps": str(self.eps),
            "delta": str(1 / self.eps - 1),
            "B1": j(self.B1),
            "B2": j(self.B2),
            "B3": j(self.B3),
            "A1": j(self.A1),
            "A2": j(self.A2),
            "note": self.note,
        }


def envelope_constants(eps, prec: int = DEFAULT_PREC) -> EnvelopeCertificate:
    """B2 = 2 (2^eps / (2^(1+eps) - 1))^(1/eps), B3 as above, B1 = sum g_k(100),
    A2 = B2 and A1 = max(B1, 2 + B3) (hull upper end)."""
    e = _eps_ball(eps, prec)
    b2 = ((exp2(e, prec) / _c(e)).log() / e).exp().mul_2exp(1)
    b3 = _B3(e, prec)
    b1 = _B1(e, prec)
    two_b3 = b3 + 2
    # A1 is reported as an upper end: undecided orderings take the larger upper bound
    a1 = Ball._raw(max_upper(b1, two_b3), fzero, prec)
    from ..solutions import _as_fraction

    ef = _as_fraction(eps) if not isinstance(eps, Ball) else None
    note = f"growth exponent 1 + 1/eps = 2 + delta with delta = 1/eps - 1 = {1 / ef - 1 if ef else '?'}"
    return EnvelopeCertificate(ef, b1, b2, b3, a1, b2, note)


def max_upper(a: Ball, b: Ball):
    from mpmath.libmp import mpf_cmp

    ua, ub = a.upper(), b.upper()
    return ua if mpf_cmp(ua, ub) >= 0 else ub


@dataclass(frozen=True)
class EnvelopeRow:
    x: object
    t: object
    ratio: Ball
    ok: bool
    regime_ok: bool | None = None

    def to_json(self) -> dict:
        lr = None
        if not self.ratio.is_exact_zero() and self.ratio.abs_upper()[1]:
            lr = round(float(Ball._raw(self.ratio.abs_upper(), fzero, self.ratio.prec).log()) / math.log(10), 6)
        return {"x": str(self.x), "t": str(self.t), "log10_ratio_upper": lr, "ok": self.ok, "regime_ok": self.regime_ok}


@dataclass(frozen=True)
class EnvelopeCheck:
    passed: bool
    max_ratio: Ball
    rows: list = field(default_factory=list)


def envelope_check(eps, cert: EnvelopeCertificate, grid, prec: int = DEFAULT_PREC) -> EnvelopeCheck:
    """max over the grid of |w_eps(x, t)| exp(-A2 |x|^(1 + 1/eps)); passes iff every
    ratio is certified <= A1. For |x| > 100 also reports the sharper regime bound
    ratio <= 2 + B3."""
    e = _eps_ball(eps, prec)
    expo = 1 / e + 1
    a1 = cert.A1
    regime = Ball._raw((cert.B3 + 2).upper(), fzero, prec)
    rows = []
    best = None
    passed = True
    for x, t in grid:
        r = eval_weps(eps, x, t, prec=prec)
        xb = Ball.coerce(x, prec)
        ax = abs(xb)
        damp = zero(prec) if ax.is_exact_zero() else -(cert.A2 * (ax.log() * expo).exp())
        ratio = abs(r.value) * damp.exp()
        ok = ratio.certainly_le(a1)
        reg = None
        if ax.certainly_gt(100):
            reg = ratio.certainly_le(regime)
        passed = passed and ok
        rows.append(EnvelopeRow(x, t, ratio, ok, reg))
        if best is None or _ge_upper(ratio, best):
            best = ratio
    return EnvelopeCheck(passed, best if best is not None else zero(prec), rows)


def _ge_upper(a: Ball, b: Ball) -> bool:
    from mpmath.libmp import mpf_cmp

    return mpf_cmp(a.upper(), b.upper()) > 0


def g_ratio_law(eps, x, kmax: int | None = None, prec: int = DEFAULT_PREC) -> dict:
    """Compare exp(g_log(k+1) - g_log(k)) with the closed-form ratio and check
    that the log-ratio is positive for k < K and negative for k >= K."""
    e = _eps_ball(eps, prec)
    xb = Ball.coerce(x, prec)
    K = choose_K(eps, x, prec)
    kmax = kmax or K + 6
    matches = True
    signs_ok = True
    for k in range(1, kmax + 1):
        direct = g_log(k + 1, xb, e) - g_log(k, xb, e)
        closed = g_log_ratio(k, xb, e)
        matches = matches and direct.overlaps(closed)
        want = 1 if k < K else -1
        signs_ok = signs_ok and closed.sign() == want
    return {"K": K, "ratio_matches": matches, "sign_flip_at_K": signs_ok}
