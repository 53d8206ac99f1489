"""Uniform Taylor-coefficient bound for phi(t) = Phi(x0 + 1, t) away from t = 0.

Checks sup_{n <= nmax, t in grid} |d^n/dt^n phi(t)| delta0^n / n! on a grid with
|t| > A, the quantity a Walczak-type condensation argument needs to be bounded.
For t < 0 every derivative is exactly zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from mpmath.libmp import fzero, mpf_cmp, to_float

from ..numerics import Ball, zero
from ..numerics import kernels
from ..numerics.factorial import log_factorial
from ..numerics.precision import DEFAULT_PREC, DomainError
from ..solutions import exact_or_none


@dataclass(frozen=True)
class WalczakCheck:
    delta0: object
    A: object
    L: float
    nmax: int
    sup_observed: Ball
    argmax: tuple
    passed: bool
    points: int = 0

    def to_json(self) -> dict:
        return {
            "delta0": str(self.delta0),
            "A": str(self.A),
            "L": repr(self.L),
            "nmax": self.nmax,
            "sup_observed": self.sup_observed.to_json(),
            "argmax": {"n": self.argmax[0], "t": str(self.argmax[1])} if self.argmax else None,
            "passed": self.passed,
            "points": self.points,
        }


def _next_float_up(v) -> float:
    f = to_float(v, rnd="c") if hasattr(v, "__len__") else float(v)
    return math.nextafter(f, math.inf)


def walczak_hypothesis_check(x0, delta0, A, nmax: int, t_grid, prec: int = DEFAULT_PREC, L=None) -> WalczakCheck:
    """Observed sup of |phi^(n)(t)| delta0^n / n! over the grid and n <= nmax.

    L defaults to the next double above the sup's upper end; ``passed`` is the
    certified comparison sup < L.
    """
    d0 = Ball.coerce(delta0, prec)
    a = Ball.coerce(A, prec)
    if not d0.is_positive() or not a.is_positive():
        raise DomainError("delta0 and A must be > 0")
    y = Ball.coerce(x0, prec) + 1
    if not y.is_positive():
        raise DomainError("x0 + 1 must be > 0")
    best_hi = fzero
    best_lo = fzero
    argmax = None
    npts = 0
    for t in t_grid:
        tb = Ball.coerce(t, prec)
        if not abs(tb).certainly_gt(a):
            raise DomainError(f"grid point t={t} is not in |t| > A")
        npts += 1
        if tb.is_negative():
            # derivatives of the zero extension vanish identically
            vals = [zero(prec)] * (nmax + 1)
        else:
            ders = kernels.heat_dx_orders(2 * nmax, y, tb, prec)
            vals = [ders[2 * n] for n in range(nmax + 1)]
        dpow = Ball(1, prec=prec)
        for n in range(nmax + 1):
            if n:
                dpow = dpow * d0
            term = abs(vals[n]) * dpow / log_factorial(n, prec).exp()
            hi = term.abs_upper()
            if mpf_cmp(hi, best_hi) > 0:
                best_hi = hi
                argmax = (n, t)
            lo = term.abs_lower()
            if mpf_cmp(lo, best_lo) > 0:
                best_lo = lo
    sup = Ball.from_interval(Ball._raw(best_lo, fzero, prec), Ball._raw(best_hi, fzero, prec), prec)
    if L is None:
        L = _next_float_up(best_hi)
    passed = sup.certainly_lt(Ball.coerce(float(L), prec))
    return WalczakCheck(delta0, A, float(L), nmax, sup, argmax, passed, npts)
