"""Finite-difference heat residual of certified evaluations, with an a-priori budget.

    FD_t  = (u(x, t+h) - u(x, t-h)) / (2h)             error <= h^2/6  sup |u_ttt|
    FD_xx = (u(x+h, t) - 2u(x, t) + u(x-h, t)) / h^2   error <= h^2/12 sup |u_xxxx|

and u_xxxx = u_tt for a heat solution, so both bounds come from time-derivative
majorants at the smallest x of the stencil.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from mpmath.libmp import fzero, mpf_cmp

from ..derivatives import lacunary_majorant
from ..heat_kernel import kernel_derivative_sup
from ..numerics import Ball, zero
from ..numerics.precision import DEFAULT_PREC
from ..solutions import Kind, SolutionId, evaluate, exact_or_none


def per_term_identity(kmax: int = 64) -> list:
    """For each k, check 2^(2k+1) == 2 (2^k)^2 in exact integers: the k-th term
    exp(-a x) sin(w t - a x) with a = 2^k, w = 2^(2k+1) solves u_t = u_xx iff w = 2 a^2."""
    return [(k, 2 ** (2 * k + 1) == 2 * (2**k) ** 2) for k in range(1, kmax + 1)]


def _as_exact(v):
    q = exact_or_none(v)
    return q if q is not None else v


def fd_budget(sol: SolutionId, x_min, h, prec: int = DEFAULT_PREC) -> Ball:
    """h^2/6 sup|u_ttt| + h^2/12 sup|u_tt| over x >= x_min."""
    hb = Ball.coerce(h, prec)
    if sol.kind is Kind.U2:
        y = Ball.coerce(x_min, prec) + 1
        m3 = kernel_derivative_sup(3, y, prec).bound.upper_ball()
        m2 = kernel_derivative_sup(2, y, prec).bound.upper_ball()
        # sum_k 2^-k <= 1
    else:
        eps = sol.eps if sol.kind is Kind.WEPS else None
        m3 = lacunary_majorant(3, x_min, eps, prec)
        m2 = lacunary_majorant(2, x_min, eps, prec)
    h2 = hb.sqr()
    return (h2 * m3 / 6 + h2 * m2 / 12).upper_ball()


@dataclass(frozen=True)
class ResidualReport:
    h: object
    max_residual: Ball
    budget: Ball
    rows: list = field(default_factory=list)

    @property
    def within_budget(self) -> bool:
        return self.max_residual.certainly_le(self.budget + self.max_radius())

    def max_radius(self) -> Ball:
        r = fzero
        for row in self.rows:
            if mpf_cmp(row["residual"].rad, r) > 0:
                r = row["residual"].rad
        return Ball._raw(r, fzero, self.max_residual.prec).mul_2exp(1)

    def to_json(self) -> dict:
        return {
            "h": str(self.h),
            "max_residual": self.max_residual.to_json(digits=10),
            "budget": self.budget.to_json(digits=10),
            "points": [
                {"x": str(r["x"]), "t": str(r["t"]), "residual": r["residual"].to_json(digits=10)} for r in self.rows
            ],
        }


def residual_check(sol: SolutionId, grid, h, prec: int = DEFAULT_PREC, target_rad=None) -> ResidualReport:
    """Max over the grid of |FD_t - FD_xx| (as a Ball) and the a-priori FD budget."""
    hq = _as_exact(h)
    rows = []
    best = None
    x_min = None
    for x, t in grid:
        xq, tq = _as_exact(x), _as_exact(t)

        def u(xx, tt):
            return evaluate(sol, xx, tt, target_rad, prec).value

        hb = Ball.coerce(hq, prec)
        c = u(xq, tq)
        ft = (u(xq, tq + hq) - u(xq, tq - hq)) / hb.mul_2exp(1)
        fxx = (u(xq + hq, tq) - c.mul_2exp(1) + u(xq - hq, tq)) / hb.sqr()
        res = abs(ft - fxx)
        rows.append({"x": x, "t": t, "residual": res})
        if best is None or mpf_cmp(res.upper(), best.upper()) > 0:
            best = res
        lo = xq - hq
        x_min = lo if x_min is None or lo < x_min else x_min
    budget = fd_budget(sol, x_min, hq, prec) if rows else zero(prec)
    return ResidualReport(h, best if best is not None else zero(prec), budget, rows)


def cell_grid(x_lo, x_hi, nx: int, t_lo, t_hi, nt: int):
    """Cell-centred nx-by-nt grid (exact rationals) strictly inside the rectangle."""
    x_lo, x_hi, t_lo, t_hi = (Fraction(v) for v in (x_lo, x_hi, t_lo, t_hi))
    dx = (x_hi - x_lo) / nx
    dt = (t_hi - t_lo) / nt
    return [(x_lo + dx * (i + Fraction(1, 2)), t_lo + dt * (j + Fraction(1, 2))) for i in range(nx) for j in range(nt)]


def node_grid(x_lo, x_hi, nx: int, t_lo, t_hi, nt: int):
    """nx-by-nt grid including the corners (exact rationals)."""
    x_lo, x_hi, t_lo, t_hi = (Fraction(v) for v in (x_lo, x_hi, t_lo, t_hi))
    xs = [x_lo + (x_hi - x_lo) * i / (nx - 1) for i in range(nx)] if nx > 1 else [x_lo]
    ts = [t_lo + (t_hi - t_lo) * j / (nt - 1) for j in range(nt)] if nt > 1 else [t_lo]
    return [(x, t) for x in xs for t in ts]
