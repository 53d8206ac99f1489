import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nwheat.numerics import (
    Ball,
    Precision,
    PrecisionError,
    SignedLog,
    SignIndeterminate,
    check_prec,
    log_sum_exp,
    prec_cap,
    refine,
)
from nwheat.numerics.factorial import log_factorial, stirling_log_factorial
from nwheat.solutions import eval_u1


def test_precision_bounds(monkeypatch):
    assert Precision().bits == 128
    with pytest.raises(PrecisionError):
        Precision(16)
    with pytest.raises(PrecisionError):
        check_prec(16385)
    with pytest.raises(PrecisionError):
        check_prec(64.0)
    monkeypatch.setenv("NWHEAT_PREC_CAP", "256")
    assert prec_cap() == 256
    with pytest.raises(PrecisionError):
        check_prec(512)
    assert Precision(200).doubled().bits == 256


def test_refine_hits_target():
    r = refine(Fraction(1, 10**30), lambda p: Ball(1, prec=p).exp())
    assert r.reached and r.value.rad_le(Fraction(1, 10**30))


def test_refine_reports_tail_floor():
    # truncating after one term leaves a tail far above 1e-10
    r = refine(Fraction(1, 10**10), lambda p: eval_u1(0, 1, prec=p, terms=1))
    assert not r.reached and r.reason == "tail_floor"


def test_refine_reports_precision_cap(monkeypatch):
    monkeypatch.setenv("NWHEAT_PREC_CAP", "256")
    r = refine(Fraction(1, 10**200), lambda p: Ball(1, prec=p).exp())
    assert not r.reached and r.reason == "precision_cap" and r.prec == 256


def test_refine_deterministic():
    a = refine(Fraction(1, 10**40), lambda p: Ball(3, prec=p).log())
    b = refine(Fraction(1, 10**40), lambda p: Ball(3, prec=p).log())
    assert a.value.key() == b.value.key() and a.prec == b.prec


def test_log_sum_exp_small_sum():
    s = log_sum_exp([SignedLog(1, Ball(2).log()), SignedLog(1, Ball(3).log())])
    assert s.sign == 1 and s.logmag.overlaps(Ball(5).log())
    with mpmath.workprec(300):
        assert s.logmag.contains(mpmath.log(5))


def test_log_sum_exp_cancellation():
    exact = SignedLog(1, Ball(7))
    assert log_sum_exp([exact, -exact]).is_zero
    inexact = SignedLog(1, Ball(2).log())
    try:
        r = log_sum_exp([inexact, -inexact])
    except SignIndeterminate:
        return
    assert r.is_zero


def test_log_sum_exp_dominated_term():
    s = log_sum_exp([SignedLog(1, Ball(10**6)), SignedLog(1, Ball(0))], prec=128)
    assert s.sign == 1
    # 1e6 + ln(1 + e^-1e6): the correction is far below the radius
    assert s.logmag.contains(10**6)
    assert s.logmag.rad_le(Fraction(1, 10**30))


def test_log_sum_exp_signs():
    s = log_sum_exp([SignedLog(1, Ball(2).log()), SignedLog(-1, Ball(5).log())])
    assert s.sign == -1 and s.logmag.overlaps(Ball(3).log())


def test_signedlog_round_trip():
    for v in (Fraction(-7, 3), Fraction(1, 1000), Fraction(12345)):
        b = Ball.coerce(v, 128)
        back = SignedLog.from_ball(b).to_ball()
        assert back.contains(v)
    with pytest.raises(SignIndeterminate):
        SignedLog.from_ball(Ball.from_interval(-1, 1))


@settings(max_examples=200)
@given(st.floats(min_value=-1e5, max_value=1e5), st.floats(min_value=-1e5, max_value=1e5))
def test_signedlog_compare_matches_floats(a, b):
    la, lb = SignedLog(1, Ball.coerce(a)), SignedLog(1, Ball.coerce(b))
    if a < b:
        assert la.certainly_lt(lb) and not la.certainly_gt(lb)
    elif a > b:
        assert la.certainly_gt(lb)


@settings(max_examples=100)
@given(st.lists(st.tuples(st.sampled_from([-1, 1]), st.floats(min_value=-30, max_value=30)), min_size=1, max_size=8))
def test_log_sum_exp_contains_direct_sum(terms):
    direct = sum(s * math.exp(l) for s, l in terms)
    try:
        r = log_sum_exp([SignedLog(s, Ball.coerce(l)) for s, l in terms])
    except SignIndeterminate:
        return
    if r.is_zero:
        assert abs(direct) < 1e-9 * max(math.exp(l) for _, l in terms)
        return
    # float direct sum carries its own rounding; compare loosely
    assert r.sign == (1 if direct > 0 else -1) or abs(direct) < 1e-9 * max(math.exp(l) for _, l in terms)
    if abs(direct) > 1e-6 * max(math.exp(l) for _, l in terms):
        assert math.isclose(float(r.logmag), math.log(abs(direct)), abs_tol=1e-6)


def test_log_factorial_exact_and_stirling():
    assert log_factorial(10).contains(Ball(math.factorial(10)).log())
    # Stirling remainder oracle at n = 100
    n = 100
    direct = sum(math.log(i) for i in range(1, n + 1))
    stir = n * math.log(n) - n + 0.5 * math.log(2 * math.pi * n)
    assert abs(direct - stir) <= 1 / (12 * n - 1)
    assert log_factorial(n).overlaps(stirling_log_factorial(n))
    big = 2 * 10**6
    st_ = stirling_log_factorial(big)
    assert st_.rad_le(Fraction(1, 10**6))
