"""Pure-Python hot kernels (ball arithmetic on mpmath raw floats).

The compiled twin in ``_ckernels.pyx`` implements the same three entry points
with MPFR interval arithmetic; ``kernels`` picks one at import time.
"""

from __future__ import annotations

from .ball import Ball, ln2, one, pi, zero


def _mag_exp(b: Ball) -> int:
    return b.mid[2] + b.mid[3] if b.mid[1] else 0


def lacunary_sum(n: int, x: Ball, t: Ball, eps: Ball | None, k_lo: int, k_hi: int, prec: int) -> Ball:
    """Sum over k in [k_lo, k_hi] of the n-th t-derivative of the lacunary terms

        exp(-a_k - 2**k x) * sin(2**(2k+1) t - 2**k x),

    with a_k = 2**k (eps is None) or 2**((1+eps) k).
    """
    total = zero(prec)
    q = n % 4
    texp = max(0, _mag_exp(t))
    slope = None if eps is None else (eps + 1) * ln2(prec)
    for k in range(k_lo, k_hi + 1):
        xk = x.mul_2exp(k)
        if slope is None:
            a = one(prec).mul_2exp(k)
        else:
            a = (slope * k).exp()
        w = (-(a + xk)).exp()
        theta_prec = prec + 2 * k + 8 + texp + max(0, _mag_exp(x))
        theta = t.mul_2exp(2 * k + 1).sub(xk, prec=theta_prec).with_prec(prec)
        trig = theta.sin() if q % 2 == 0 else theta.cos()
        if q >= 2:
            trig = -trig
        total = total + (w * trig).mul_2exp(n * (2 * k + 1))
    return total


def _heat_parts(y: Ball, s: Ball, prec: int):
    two_sq = s.sqrt().mul_2exp(1)
    z = y / two_sq
    phi = (-(y.sqr() / s.mul_2exp(2))).exp() / (pi(prec) * s).mul_2exp(2).sqrt()
    return two_sq, z, phi


def heat_dx_orders(nmax: int, y: Ball, s: Ball, prec: int) -> list:
    """[d^j/dx^j Phi(y, s) for j = 0..nmax], s > 0, via the Hermite form."""
    if not s.is_positive():
        raise ValueError("heat kernel derivative needs s > 0 certified")
    two_sq, z, phi = _heat_parts(y, s, prec)
    c = -(one(prec) / two_sq)
    out = [phi]
    h_prev, h = one(prec), z.mul_2exp(1)
    scale = one(prec)
    for j in range(1, nmax + 1):
        scale = scale * c
        out.append(scale * h * phi)
        h_prev, h = h, z.mul_2exp(1) * h - h_prev * (2 * j)
    return out


def _heat_dx(n: int, y: Ball, s: Ball, prec: int) -> Ball:
    two_sq, z, phi = _heat_parts(y, s, prec)
    h_prev, h = one(prec), z.mul_2exp(1)
    if n == 0:
        h = h_prev
    else:
        for j in range(1, n):
            h_prev, h = h, z.mul_2exp(1) * h - h_prev * (2 * j)
    c = (one(prec) / two_sq).pow_int(n)
    val = c * h * phi
    return -val if n % 2 else val


def heat_dx_sum(n: int, y: Ball, s_list, w_list, prec: int) -> Ball:
    """Sum_j w_j d^n/dx^n Phi(y, s_j) over strictly positive s_j."""
    total = zero(prec)
    for s, w in zip(s_list, w_list):
        if not s.is_positive():
            raise ValueError("heat kernel derivative needs s > 0 certified")
        total = total + w * _heat_dx(n, y, s, prec)
    return total
