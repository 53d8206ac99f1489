"""Hot-kernel dispatch: compiled MPFR core when importable, pure Python otherwise.

Set ``NWHEAT_PURE=1`` to force the fallback. ``BACKEND`` names the active one.
"""

from __future__ import annotations

import os

from mpmath.libmp import from_man_exp

from . import _pykernels
from .ball import Ball


def _ball(raw, prec: int) -> Ball:
    man, exp, rman, rexp = raw
    return Ball._raw(from_man_exp(man, exp), from_man_exp(rman, rexp), prec)


def _pair(b: Ball):
    return (b.mid, b.rad)


class _Compiled:
    name = "mpfr"

    def __init__(self, mod):
        self._mod = mod

    def lacunary_sum(self, n, x, t, eps, k_lo, k_hi, prec):
        e = None if eps is None else _pair(eps)
        return _ball(self._mod.lacunary_sum(n, x.mid, x.rad, t.mid, t.rad, e, k_lo, k_hi, prec), prec)

    def heat_dx_orders(self, nmax, y, s, prec):
        raws = self._mod.heat_dx_orders(nmax, y.mid, y.rad, s.mid, s.rad, prec)
        return [_ball(r, prec) for r in raws]

    def heat_dx_sum(self, n, y, s_list, w_list, prec):
        s_pairs = [_pair(s) for s in s_list]
        w_pairs = [_pair(Ball.coerce(w, prec)) for w in w_list]
        return _ball(self._mod.heat_dx_sum(n, y.mid, y.rad, s_pairs, w_pairs, prec), prec)


class _Pure:
    name = "python"
    lacunary_sum = staticmethod(_pykernels.lacunary_sum)
    heat_dx_orders = staticmethod(_pykernels.heat_dx_orders)

    @staticmethod
    def heat_dx_sum(n, y, s_list, w_list, prec):
        return _pykernels.heat_dx_sum(n, y, s_list, [Ball.coerce(w, prec) for w in w_list], prec)


def _load_compiled():
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _Compiled(_ckernels)


PURE = _Pure()
COMPILED = _load_compiled()


def available() -> dict:
    out = {"python": PURE}
    if COMPILED is not None:
        out["mpfr"] = COMPILED
    return out


def _select():
    if os.environ.get("NWHEAT_PURE", "").lower() in ("1", "true", "yes"):
        return PURE
    return COMPILED or PURE


_impl = _select()
BACKEND = _impl.name


def lacunary_sum(n: int, x: Ball, t: Ball, eps, k_lo: int, k_hi: int, prec: int) -> Ball:
    return _impl.lacunary_sum(n, x, t, eps, k_lo, k_hi, prec)


def heat_dx_orders(nmax: int, y: Ball, s: Ball, prec: int) -> list:
    return _impl.heat_dx_orders(nmax, y, s, prec)


def heat_dx_sum(n: int, y: Ball, s_list, w_list, prec: int) -> Ball:
    return _impl.heat_dx_sum(n, y, s_list, w_list, prec)
