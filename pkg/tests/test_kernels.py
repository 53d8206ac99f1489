import os
import subprocess
import sys
from fractions import Fraction

import pytest

from nwheat.numerics import Ball, kernels

compiled = pytest.mark.skipif(kernels.COMPILED is None, reason="compiled extension not built")


def _cases(prec):
    x = Ball.coerce("0.375", prec)
    t = Ball(2, prec=prec).sqrt()
    eps = Ball.coerce("0.5", prec)
    return x, t, eps


def test_backend_name():
    assert kernels.BACKEND in kernels.available()


@compiled
@pytest.mark.parametrize("n", [0, 1, 2, 3, 7])
@pytest.mark.parametrize("prec", [64, 128, 512])
def test_lacunary_backends_overlap(n, prec):
    x, t, eps = _cases(prec)
    for e in (None, eps):
        a = kernels.PURE.lacunary_sum(n, x, t, e, 1, 12, prec)
        b = kernels.COMPILED.lacunary_sum(n, x, t, e, 1, 12, prec)
        assert a.overlaps(b)
        assert a.rad_le(Fraction(1, 10**10) * max(1, abs(Fraction(float(a)))))


@compiled
def test_heat_backends_overlap():
    y = Ball.coerce("1.25", 128)
    s = Ball.coerce("0.3", 128)
    a = kernels.PURE.heat_dx_orders(30, y, s, 128)
    b = kernels.COMPILED.heat_dx_orders(30, y, s, 128)
    assert all(u.overlaps(v) for u, v in zip(a, b))
    ss = [Ball.coerce(v, 128) for v in ("0.1", "0.7", "2")]
    ws = ["0.5", "0.25", "0.125"]
    assert kernels.PURE.heat_dx_sum(4, y, ss, ws, 128).overlaps(kernels.COMPILED.heat_dx_sum(4, y, ss, ws, 128))


def test_heat_orders_rejects_nonpositive_time():
    with pytest.raises(ValueError):
        kernels.PURE.heat_dx_orders(2, Ball(1), Ball(0), 128)


def test_pure_fallback_env():
    env = dict(os.environ, NWHEAT_PURE="1")
    out = subprocess.run(
        [sys.executable, "-c", "from nwheat.numerics import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
