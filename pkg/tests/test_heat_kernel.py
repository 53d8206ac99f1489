import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nwheat.heat_kernel import (
    CRAMER_K,
    envelope,
    envelope_peak,
    hermite,
    kernel_derivative_sup,
    phi,
    phi_dt,
    phi_dx,
    verify_kahane_bound,
)
from nwheat.numerics import Ball, DomainError


def mp_phi(x, t):
    x, t = mpmath.mpf(x), mpmath.mpf(t)
    return mpmath.exp(-x * x / (4 * t)) / mpmath.sqrt(4 * mpmath.pi * t)


def close(got: Ball, ref, rel) -> bool:
    """|got - ref| <= rel * max(1, |ref|) for an mpf reference."""
    r = Ball.coerce(ref, got.prec)
    scale = max(Fraction(1), abs(Fraction(float(ref))) * 2)
    return abs(got - r).certainly_le(Ball.coerce(rel * scale, got.prec))


def test_phi_values():
    assert abs(float(phi(0, 1)) - 0.2820947917738781) < 1e-16
    assert abs(float(phi(1, 1)) - 0.21969564473386122) < 1e-15
    with mpmath.workprec(300):
        assert phi(1, 1, prec=256).contains(mp_phi(1, 1))
        assert phi(0, 1, prec=256).contains(1 / mpmath.sqrt(4 * mpmath.pi))


def test_phi_vanishes_for_nonpositive_time():
    assert phi(5, -1).is_exact_zero()
    assert phi(5, 0).is_exact_zero()
    assert phi_dt(3, 2, Fraction(-1, 3)).is_exact_zero()


def test_hermite_small_orders():
    assert hermite(0, Fraction(17, 3)).contains(1)
    assert hermite(2, 0).contains(-2)
    assert hermite(3, 1).contains(-4)


@settings(max_examples=100)
@given(st.floats(min_value=-8, max_value=8))
def test_hermite_matches_explicit(z):
    zb = Ball.coerce(z)
    with mpmath.workprec(300):
        zz = mpmath.mpf(z)
        h2, h3, h4 = 4 * zz**2 - 2, 8 * zz**3 - 12 * zz, 16 * zz**4 - 48 * zz**2 + 12
    assert hermite(2, zb).contains(h2)
    assert hermite(3, zb).contains(h3)
    assert hermite(4, zb).contains(h4)


def test_phi_dx_examples():
    assert phi_dx(0, 0, 1).overlaps(phi(0, 1))
    assert abs(float(phi_dx(2, 0, 1)) + 0.14104739588693907) < 1e-15
    for t in ("0.01", "1", "30"):
        assert phi_dx(1, 0, Fraction(t)).contains(0)
    assert phi_dt(1, 0, 1).overlaps(phi_dx(2, 0, 1))
    assert phi_dt(0, Fraction(1, 3), 2).overlaps(phi(Fraction(1, 3), 2))


def test_phi_dx_against_numerical_differentiation():
    """Independent route: mpmath finite-difference differentiation of the closed form."""
    with mpmath.workdps(60):
        for n, x, t in [(1, "0.7", "0.4"), (3, "1.5", "2"), (5, "-0.3", "0.9"), (8, "2", "1.1")]:
            ref = mpmath.diff(lambda xx: mp_phi(xx, mpmath.mpf(t)), mpmath.mpf(x), n)
            got = phi_dx(n, Fraction(x), Fraction(t), prec=192)
            assert close(got, ref, Fraction(1, 10**25))


def test_phi_dt_against_time_differentiation():
    with mpmath.workdps(60):
        for n, x, t in [(1, "1", "0.5"), (2, "0.4", "1.3"), (3, "2", "0.8")]:
            ref = mpmath.diff(lambda tt: mp_phi(mpmath.mpf(x), tt), mpmath.mpf(t), n)
            got = phi_dt(n, Fraction(x), Fraction(t), prec=192)
            assert close(got, ref, Fraction(1, 10**25))


def test_heat_identity_random_points():
    rng = random.Random(3)
    for _ in range(1000):
        x = Fraction(rng.randint(-4000, 4000), 1000)
        t = Fraction(rng.randint(1, 5000), 1000)
        assert phi_dt(1, x, t, prec=96).overlaps(phi_dx(2, x, t, prec=96))


def test_essential_zero_near_time_zero():
    for n in range(6):
        assert phi_dt(n, 1, Fraction(1, 1000)).certainly_lt(Fraction(1, 10**20))


def test_smooth_junction_monotone():
    for y in (1, 2):
        for n in (1, 5, 10, 20, 40):
            cut = Fraction(y * y, 16 * n + 8)
            ts = [cut * Fraction(i, 12) for i in range(1, 13)]
            mags = [abs(phi_dt(n, y, t, prec=128)) for t in ts]
            for a, b in zip(mags, mags[1:]):
                assert a.certainly_le(b)


def test_cramer_constant_spot_check():
    with mpmath.workprec(200):
        for m in range(0, 31):
            bound = mpmath.mpf(CRAMER_K.numerator) / CRAMER_K.denominator * mpmath.sqrt(2**m * mpmath.factorial(m))
            for z in [i / 8 for i in range(0, 80)]:
                assert abs(mpmath.hermite(m, z)) * mpmath.exp(-mpmath.mpf(z) ** 2 / 2) <= bound


def test_envelope_dominates_derivative():
    rng = random.Random(11)
    for _ in range(200):
        m = rng.randint(0, 30)
        y = Fraction(rng.randint(1, 300), 100)
        s = Fraction(rng.randint(1, 4000), 1000)
        assert abs(phi_dx(m, y, s)).certainly_le(envelope(m, y, s))


def test_envelope_peak_location():
    for m in (0, 3, 10):
        pk = envelope_peak(m, 2)
        e0 = envelope(m, 2, pk)
        assert envelope(m, 2, pk * Fraction(9, 10)).certainly_le(e0)
        assert envelope(m, 2, pk * Fraction(11, 10)).certainly_le(e0)


def test_sup_order_zero():
    b = kernel_derivative_sup(0, 1).bound
    with mpmath.workprec(300):
        assert b.contains(1 / mpmath.sqrt(2 * mpmath.pi * mpmath.e))
    assert abs(float(b) - 0.24197072451914337) < 1e-15
    b2 = kernel_derivative_sup(0, 2).bound
    assert (b2 * 2).overlaps(b)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_sup_dominates_samples(n):
    rng = random.Random(n)
    for y in (1, Fraction(3, 2)):
        sup = kernel_derivative_sup(n, y).bound
        for _ in range(100):
            s = Fraction(rng.randint(1, 10**6), 10**5)
            assert abs(phi_dt(n, y, s)).certainly_le(sup.upper_ball())


def test_sup_matches_dense_scan():
    """Independent route: dense mpmath scan plus golden-section polish."""
    for n, ref_hint in ((1, 1.4805), (2, 37.95)):
        f = lambda s: -abs(mpmath.diff(lambda xx: mp_phi(xx, s), 1, 2 * n))
        with mpmath.workdps(30):
            grid = [mpmath.mpf(i) / 2000 for i in range(1, 2000)]
            best = min(grid, key=f)
            lo, hi = best - mpmath.mpf(1) / 2000, best + mpmath.mpf(1) / 2000
            g = (mpmath.sqrt(5) - 1) / 2
            for _ in range(60):
                a, b = hi - g * (hi - lo), lo + g * (hi - lo)
                if f(a) < f(b):
                    hi = b
                else:
                    lo = a
            ref = -f((lo + hi) / 2)
        sup = kernel_derivative_sup(n, 1).bound
        # the certified enclosure must reach the scanned maximum, and be tight
        assert not sup.upper_ball().certainly_lt(Ball.coerce(ref) * (1 - Fraction(1, 10**12)))
        assert close(sup, ref, Fraction(1, 10**4) * int(ref_hint + 1))
        assert abs(float(ref) - ref_hint) < 1e-2 * ref_hint


def test_sup_domain():
    with pytest.raises(DomainError):
        kernel_derivative_sup(1, 0)


def test_kahane_calibration():
    grid = [(Fraction(i, 2), Fraction(j, 4)) for i in range(0, 7) for j in range(1, 9)]
    assert verify_kahane_bound(0, grid) == 0.0
    c10 = verify_kahane_bound(10, grid)
    c20 = verify_kahane_bound(20, grid)
    assert 0 < c10 <= c20 < 10
    fine = [(Fraction(i, 4), Fraction(j, 8)) for i in range(0, 13) for j in range(1, 17)]
    c20f = verify_kahane_bound(20, fine)
    assert c20 <= c20f and c20f < 1.5 * c20
