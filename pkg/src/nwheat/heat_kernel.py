"""The one-dimensional heat kernel, its derivatives of any order, and uniform-in-time bounds.

    Phi(x, t) = (4 pi t)^(-1/2) exp(-x^2 / (4t))   for t > 0,   0 for t <= 0.

Space derivatives use the Hermite form

    d^n/dx^n Phi(x, t) = (-1)^n (4t)^(-n/2) H_n(x / (2 sqrt t)) Phi(x, t),

and time derivatives go through d^n/dt^n Phi = d^(2n)/dx^(2n) Phi only.

For bounds that must hold on whole t-ranges we use Cramer's inequality
|H_m(z)| <= K 2^(m/2) sqrt(m!) exp(z^2/2), K = 1.086435, which gives

    |d^m/dx^m Phi(y, s)| <= Env_m(y, s)
        = K 2^(m/2) sqrt(m!) (4s)^(-m/2) (4 pi s)^(-1/2) exp(-y^2 / (8s)),

an envelope that increases in s for s < y^2 / (4(m+1)) and decreases after.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from fractions import Fraction

from mpmath.libmp import from_float, fzero, mpf_cmp

from .numerics import Ball, DomainError, hull, one, pi, zero
from .numerics import kernels
from .numerics.factorial import log_factorial
from .numerics.precision import DEFAULT_PREC, check_prec

# Cramer's constant, rounded up
CRAMER_K = Fraction(10865, 10000)


def _ball(v, prec: int) -> Ball:
    return Ball.coerce(v, prec)


def _time_sign(t: Ball):
    """+1 if t > 0 certainly, -1 if t <= 0 certainly, None if t straddles 0."""
    if t.is_positive():
        return 1
    hi = t.upper()
    if hi[0] or hi == fzero:
        return -1
    return None


def hermite(n: int, z, prec: int = DEFAULT_PREC) -> Ball:
    """Physicists' Hermite polynomial H_n(z) by the three-term recurrence."""
    if n < 0:
        raise ValueError("hermite order must be >= 0")
    prec = check_prec(prec)
    z = _ball(z, prec)
    h_prev, h = one(prec), z.mul_2exp(1)
    if n == 0:
        return h_prev
    for j in range(1, n):
        h_prev, h = h, z.mul_2exp(1) * h - h_prev * (2 * j)
    return h


def log_envelope(m: int, y, s, prec: int = DEFAULT_PREC) -> Ball:
    """ln Env_m(y, s), an upper bound for ln |d^m/dx^m Phi(y, s)|; needs s > 0."""
    y = _ball(y, prec)
    s = _ball(s, prec)
    four_s = s.mul_2exp(2)
    out = _ball(CRAMER_K, prec).log()
    out = out + log_factorial(m, prec).mul_2exp(-1)
    out = out - four_s.log() * Fraction(m, 2) - (pi(prec) * four_s).log().mul_2exp(-1)
    out = out + _ball(Fraction(m, 2), prec) * _ln2(prec)
    out = out - y.sqr() / s.mul_2exp(3)
    return out


@lru_cache(maxsize=None)
def _ln2(prec: int) -> Ball:
    return Ball(2, prec=prec).log()


def envelope(m: int, y, s, prec: int = DEFAULT_PREC) -> Ball:
    return log_envelope(m, y, s, prec).exp()


def envelope_peak(m: int, y) -> Fraction:
    """The s at which Env_m(y, .) peaks, y^2 / (4(m+1)), for exact y."""
    y = Fraction(y)
    return y * y / (4 * (m + 1))


def _straddle_bound(m: int, x: Ball, t: Ball, prec: int) -> Ball:
    """Hull of 0 and +-sup of |d^m Phi(x, s)| over s in (0, t_hi]."""
    y_lo = x.abs_lower()
    if not y_lo[1]:
        raise DomainError("heat kernel is unbounded near (0, 0+); time ball straddles 0 at x = 0")
    y = Ball._raw(y_lo, fzero, prec)
    peak = (y.sqr() / (4 * (m + 1))).lower()
    s_hi = t.upper()
    s_star = s_hi if mpf_cmp(s_hi, peak) <= 0 else peak
    bound = envelope(m, y, Ball._raw(s_star, fzero, prec), prec).upper()
    return Ball.from_interval(Ball._raw(bound, fzero, prec) * -1, Ball._raw(bound, fzero, prec), prec)


def phi_dx(n: int, x, t, prec: int = DEFAULT_PREC) -> Ball:
    """Enclosure of d^n/dx^n Phi(x, t); exact zero for t <= 0."""
    if n < 0:
        raise ValueError("derivative order must be >= 0")
    prec = check_prec(prec)
    x = _ball(x, prec)
    t = _ball(t, prec)
    sgn = _time_sign(t)
    if sgn == -1:
        return zero(prec)
    if sgn is None:
        return _straddle_bound(n, x, t, prec)
    return kernels.heat_dx_sum(n, x, [t], [1], prec)


def phi(x, t, prec: int = DEFAULT_PREC) -> Ball:
    return phi_dx(0, x, t, prec)


def phi_dt(n: int, x, t, prec: int = DEFAULT_PREC) -> Ball:
    """d^n/dt^n Phi(x, t), computed as d^(2n)/dx^(2n) Phi(x, t)."""
    if n < 0:
        raise ValueError("derivative order must be >= 0")
    return phi_dx(2 * n, x, t, prec)


# -- uniform-in-time bound ---------------------------------------------------


@dataclass(frozen=True)
class KernelDerivativeBound:
    order: int
    y: Ball
    bound: Ball
    cells: int = 0

    def to_json(self) -> dict:
        return {"order": self.order, "y": self.y.to_json(), "bound": self.bound.to_json(), "cells": self.cells}


def _cell_max_env(m: int, a: Fraction, b: Fraction, prec: int) -> Ball:
    """max of Env_m(1, s) over s in [a, b] (unimodal, peak at 1/(4(m+1)))."""
    peak = Fraction(1, 4 * (m + 1))
    s = min(max(peak, a), b)
    return envelope(m, 1, s, prec)


@lru_cache(maxsize=256)
def _unit_sup(n: int, prec: int, rel_tol: Fraction, max_cells: int):
    """[lower, upper] for sup_{s > 0} |d^(2n)/dx^(2n) Phi(1, s)| by branch and bound.

    Outside [s_lo, s_hi] the envelope Env_(2n)(1, .) is monotone, so its value at
    the bracket ends bounds the tails. Inside, a cell [a, b] is bounded by
    |G(mid)| + (b - a)/2 * max_cell Env_(2n+2)(1, .), since dG/ds = d^(2n+2)/dx^(2n+2) Phi.
    """
    m = 2 * n
    s_lo = Fraction(1, 100 * (4 * m + 4))
    s_hi = Fraction(100)
    tail = max(
        (envelope(m, 1, s_lo, prec), envelope(m, 1, s_hi, prec)),
        key=lambda b: _fkey(b.upper()),
    )
    # geometric starting grid with exact rational nodes
    n0 = 48
    ratio = (s_hi / s_lo) ** (1.0 / n0)
    nodes = [s_lo]
    for i in range(1, n0):
        nodes.append(Fraction(from_float_exact(float(s_lo) * ratio**i)))
    nodes.append(s_hi)
    nodes = sorted(set(nodes))
    cells = [(nodes[i], nodes[i + 1]) for i in range(len(nodes) - 1)]
    y1 = one(prec)

    def value_at(s):
        return abs(kernels.heat_dx_sum(m, y1, [Ball.coerce(s, prec)], [1], prec))

    def cell_upper(a, b, v):
        slope = _cell_max_env(m + 2, a, b, prec)
        return (v.upper_ball() + slope * ((b - a) / 2)).upper()

    lower = fzero
    work = []
    for a, b in cells:
        v = value_at((a + b) / 2)
        lo = v.abs_lower()
        if mpf_cmp(lo, lower) > 0:
            lower = lo
        work.append((a, b, cell_upper(a, b, v)))
    evaluated = len(work)
    while True:
        lower_b = Ball._raw(lower, fzero, prec)
        target = (lower_b * (1 + rel_tol)).upper()
        bad = [c for c in work if mpf_cmp(c[2], target) > 0]
        if not bad or evaluated >= max_cells:
            break
        keep = [c for c in work if mpf_cmp(c[2], target) <= 0]
        for a, b, _ in bad:
            mid = (a + b) / 2
            for lo_e, hi_e in ((a, mid), (mid, b)):
                v = value_at((lo_e + hi_e) / 2)
                lo = v.abs_lower()
                if mpf_cmp(lo, lower) > 0:
                    lower = lo
                keep.append((lo_e, hi_e, cell_upper(lo_e, hi_e, v)))
                evaluated += 1
        work = keep
    upper = max([c[2] for c in work] + [tail.upper()], key=_fkey)
    return lower, upper, evaluated


def from_float_exact(v: float) -> Fraction:
    return Fraction(v)


def _fkey(v):
    from functools import cmp_to_key

    return cmp_to_key(mpf_cmp)(v)


def kernel_derivative_sup(n: int, y, prec: int = DEFAULT_PREC, rel_tol=Fraction(1, 10**5), max_cells: int = 3000) -> KernelDerivativeBound:
    """Certified enclosure of sup_{s > 0} |d^n/dt^n Phi(y, s)| for y > 0.

    Uses the scaling Phi(y, s) = Phi(1, s / y^2) / y, so the sup equals
    y^(-2n-1) times the y = 1 value, which is computed once per (n, prec).
    For n = 0 the maximiser s = y^2/2 is explicit and the value is
    (2 pi e)^(-1/2) / y.
    """
    if n < 0:
        raise ValueError("order must be >= 0")
    prec = check_prec(prec)
    y = _ball(y, prec)
    if not y.is_positive():
        raise DomainError("kernel_derivative_sup needs y > 0")
    if n == 0:
        val = (pi(prec).mul_2exp(1) * Ball(1, prec=prec).exp()).sqrt()
        return KernelDerivativeBound(0, y, 1 / (val * y), 0)
    lo, hi, cells = _unit_sup(n, prec, Fraction(rel_tol), max_cells)
    unit = Ball.from_interval(Ball._raw(lo, fzero, prec), Ball._raw(hi, fzero, prec), prec)
    scale = y.pow_int(2 * n + 1)
    return KernelDerivativeBound(n, y, unit / scale, cells)


def verify_kahane_bound(nmax: int, grid, prec: int = 64) -> float:
    """Smallest C with |d^n/dx^n Phi(x,t)| <= C^n n^(n/2) t^(-(n+1)/2) exp(-x^2/(8t)) on the grid.

    Diagnostic only: a max over finitely many points, not a proof. n = 0 places no
    constraint on C, so nmax = 0 returns 0.0.
    """
    best = 0.0
    if nmax < 1:
        return best
    for x, t in grid:
        xb = _ball(x, prec)
        tb = _ball(t, prec)
        if not tb.is_positive():
            raise DomainError("verify_kahane_bound grid needs t > 0")
        ders = kernels.heat_dx_orders(nmax, xb, tb, prec)
        xf, tf = float(xb), float(tb)
        for j in range(1, nmax + 1):
            mag = ders[j].abs_upper()
            if not mag[1]:
                continue
            lmag = Ball._raw(mag, fzero, prec).log()
            # ln C >= (ln|d^j Phi| + (j+1)/2 ln t + x^2/(8t)) / j - ln(j)/2
            lc = (float(lmag) + 0.5 * (j + 1) * math.log(tf) + xf * xf / (8 * tf)) / j - 0.5 * math.log(j)
            best = max(best, math.exp(lc))
    return best
