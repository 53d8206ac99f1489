import math
import random
from fractions import Fraction

import mpmath
import pytest
from mpmath.libmp import fzero
from hypothesis import given, settings
from hypothesis import strategies as st

from nwheat.numerics import Ball, DomainError
from nwheat.solutions import (
    SolutionId,
    calkin_wilf,
    enumerate_rational,
    eval_u1,
    eval_u2,
    eval_weps,
    evaluate,
    fusc,
    rational_index,
    u1_tail,
    weps_crossover,
)


# -- enumeration ---------------------------------------------------------------


def cw_sequence(n):
    """Calkin-Wilf by the Newman recurrence q -> 1/(2 floor(q) - q + 1)."""
    q = Fraction(1)
    out = [q]
    for _ in range(n - 1):
        q = 1 / (2 * math.floor(q) - q + 1)
        out.append(q)
    return out


def test_enumeration_examples():
    assert enumerate_rational(1) == 0
    assert enumerate_rational(2) == 1 and enumerate_rational(3) == -1
    assert enumerate_rational(4) == Fraction(1, 2)


def test_enumeration_matches_recurrence():
    seq = cw_sequence(3000)
    for i, q in enumerate(seq, start=1):
        assert calkin_wilf(i) == q
        assert enumerate_rational(2 * i) == q and enumerate_rational(2 * i + 1) == -q
    assert [fusc(n) for n in range(10)] == [0, 1, 1, 2, 1, 3, 2, 3, 1, 4]


def test_enumeration_is_injective_and_invertible():
    seen = {}
    for k in range(1, 5000):
        r = enumerate_rational(k)
        assert r not in seen
        seen[r] = k
        assert rational_index(r) == k


@settings(max_examples=200)
@given(st.fractions(min_value=-50, max_value=50, max_denominator=500))
def test_every_rational_appears(r):
    # the index of n/1 is about 2^n, so keep numerators moderate
    k = rational_index(r)
    assert enumerate_rational(k) == r


def test_enumeration_rejects_bad_index():
    with pytest.raises(ValueError):
        enumerate_rational(0)


# -- solution ids -----------------------------------------------------------------


def test_solution_id_validation():
    assert SolutionId.weps("0.5").eps == Fraction(1, 2)
    with pytest.raises(DomainError):
        SolutionId.weps(1)
    with pytest.raises(ValueError):
        SolutionId("u1", eps=Fraction(1, 2))
    with pytest.raises(DomainError):
        eval_u1(-1, 0)
    with pytest.raises(DomainError):
        eval_u2(Fraction(-1, 10), 0)


# -- direct-summation oracles --------------------------------------------------------


def mpq(v):
    v = Fraction(v)
    return mpmath.mpf(v.numerator) / v.denominator


def mp_u1(x, t, K=40):
    x, t = mpq(x), mpq(t)
    return mpmath.fsum(mpmath.exp(-(2**k) * (1 + x)) * mpmath.sin(2 ** (2 * k + 1) * t - 2**k * x) for k in range(1, K))


def mp_weps(eps, x, t, K=60):
    x, t, e = mpq(x), mpq(t), mpq(eps)
    return mpmath.fsum(mpmath.exp(-(2**k) * (2 ** (e * k) + x)) * mpmath.sin(2 ** (2 * k + 1) * t - 2**k * x) for k in range(1, K))


def mp_u2(x, t, K):
    tot = mpmath.mpf(0)
    for k in range(1, K + 1):
        s = mpq(t) - mpq(enumerate_rational(k))
        if s > 0:
            y = mpq(x) + 1
            tot += mpmath.mpf(2) ** -k * mpmath.exp(-y * y / (4 * s)) / mpmath.sqrt(4 * mpmath.pi * s)
    return tot


def test_u1_origin_exact_zero():
    r = eval_u1(0, 0)
    assert r.value.is_exact_zero()


def test_u1_far_right_small():
    r = eval_u1(10, 1)
    assert abs(r.value).certainly_lt(Fraction(32, 10**11))


def test_u1_matches_direct_sum():
    rng = random.Random(5)
    with mpmath.workprec(500):
        for _ in range(40):
            x = Fraction(rng.randint(0, 3000), 1000)
            t = Fraction(rng.randint(-2000, 2000), 1000)
            assert eval_u1(x, t, prec=192).value.contains(mp_u1(x, t))


def test_weps_matches_direct_sum():
    rng = random.Random(6)
    with mpmath.workprec(800):
        for _ in range(30):
            x = Fraction(rng.randint(-20000, 5000), 1000)
            t = Fraction(rng.randint(-2000, 2000), 1000)
            got = eval_weps(Fraction(1, 2), x, t, prec=192).value
            ref = mp_weps(Fraction(1, 2), x, t)
            assert got.overlaps(Ball.coerce(ref, 192))


def test_weps_origin_and_crossover():
    assert eval_weps(Fraction(1, 3), 0, 0).value.is_exact_zero()
    assert weps_crossover(Fraction(1, 2), -50) == 12
    r = eval_weps(Fraction(1, 2), -50, Fraction(1, 3))
    assert r.terms_used >= 12


def test_weps_bounded_for_nonnegative_x():
    maj = sum(math.exp(-(2 ** (1.5 * k))) for k in range(1, 30))
    rng = random.Random(8)
    for _ in range(100):
        x = Fraction(rng.randint(0, 100000), 1000)
        t = Fraction(rng.randint(-10000, 10000), 1000)
        assert abs(eval_weps(Fraction(1, 2), x, t).value).certainly_le(Fraction(maj) + Fraction(1, 10**12))


def test_u2_matches_direct_sum():
    with mpmath.workprec(300):
        for x, t in [(0, Fraction(1, 2)), (Fraction(3, 2), 2), (1, Fraction(-1, 3))]:
            r = eval_u2(x, t, prec=128)
            ref = mp_u2(x, t, r.terms_used)
            # the oracle sums the same retained terms; the tail is in r.value
            assert r.value.contains(ref) or r.value.overlaps(Ball.coerce(ref))


def test_u2_all_terms_vanish():
    r = eval_u2(0, -10**6)
    # every retained term is exactly zero; only the tail remains
    assert r.value.mid == fzero
    # radii are stored with 30-bit mantissas, rounded up
    assert r.value.rad_le(r.tail_bound.upper_ball() * (1 + Fraction(1, 2**25)))


def test_u2_bounded():
    rng = random.Random(9)
    for _ in range(30):
        t = Fraction(rng.randint(-3000, 3000), 1000)
        assert abs(eval_u2(0, t, prec=64).value).certainly_le(Fraction(2419708, 10**7))


def test_u2_precision_nesting():
    a = eval_u2(0, Fraction(1, 2), prec=128).value
    b = eval_u2(0, Fraction(1, 2), prec=256).value
    assert a.overlaps(b) and b.rad_le(Ball._raw(a.rad, b.rad, 128).upper_ball())
    assert abs(float(b) - 0.15465405022994) < 1e-12


def test_target_radius_and_flags():
    r = eval_u1(Fraction(1, 3), Fraction(1, 7), target_rad=Fraction(1, 10**40))
    assert r.value.rad_le(Fraction(1, 10**40)) and not r.flagged
    f = eval_u1(0, 1, target_rad=Fraction(1, 10**10), terms=1)
    assert f.flagged


# -- tail honesty ---------------------------------------------------------------


@pytest.mark.parametrize("kind", ["u1", "weps", "u2"])
def test_tail_honesty_samples(kind):
    rng = random.Random(hash(kind) % 1000)
    sol = SolutionId.weps(Fraction(1, 2)) if kind == "weps" else SolutionId(kind)
    for _ in range(50):
        x = Fraction(rng.randint(0 if kind != "weps" else -5000, 3000), 1000)
        t = Fraction(rng.randint(-2000, 2000), 1000)
        K = rng.randint(1, 6) if kind != "u2" else rng.randint(1, 40)
        a = evaluate(sol, x, t, prec=192, terms=K)
        b = evaluate(sol, x, t, prec=192, terms=K + 5)
        assert tail_honest(a, b)


def tail_honest(a, b) -> bool:
    """|mid(K) - mid(K+5)| <= tail(K) plus 192-bit rounding slack."""
    ma = Ball._raw(a.value.mid, fzero, a.value.prec)
    mb = Ball._raw(b.value.mid, fzero, b.value.prec)
    slack = ((abs(ma) + 1) * Ball.coerce(Fraction(1, 2**150), a.value.prec)).upper_ball()
    return abs(ma - mb).certainly_le(a.tail_bound.upper_ball() + slack)


def test_u1_tail_formula():
    for K in (1, 3, 6):
        for x in (0, Fraction(1, 2), 3):
            tb = u1_tail(K, Ball.coerce(x), 128)
            ref = math.exp(-(2 ** (K + 1)) * (1 + x)) / (1 - math.exp(-2))
            assert abs(float(tb) - ref) <= 1e-12 * ref
