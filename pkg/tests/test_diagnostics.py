import math
import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nwheat.diagnostics import (
    analytic_floor_log,
    cell_grid,
    choose_K,
    choose_K_checked,
    choose_mN,
    choose_mN_weps,
    dominance_check,
    envelope_check,
    envelope_constants,
    find_N0,
    g_ratio_law,
    log_ratio_FN,
    lower_bound_check,
    node_grid,
    per_term_identity,
    residual_check,
    taylor_growth_scan,
    walczak_hypothesis_check,
    weight_FN,
    weps_precondition,
)
from nwheat.diagnostics.envelope import g_log
from nwheat.heat_kernel import phi
from nwheat.numerics import Ball, DomainError, SignedLog
from nwheat.solutions import SolutionId, eval_weps

U1 = SolutionId.u1()
W = SolutionId.weps(Fraction(1, 2))
HALF = Fraction(1, 2)


# -- m_N ---------------------------------------------------------------------------


def test_mN_examples():
    assert choose_mN(0, 4) == 4
    assert choose_mN(0, 5) == 8
    assert choose_mN(1, 3) == 4
    assert choose_mN_weps(HALF, 0, 4) == 16
    assert choose_mN_weps(HALF, 0, 2) == 2
    with pytest.raises(DomainError):
        choose_mN_weps(HALF, 3, 2)


def test_mN_uniqueness_and_window():
    rng = random.Random(21)
    for _ in range(1000):
        x0 = Fraction(rng.randint(0, 10**4), rng.randint(1, 997))
        N = rng.randint(1, 30)
        v = (1 + x0) * 2**N
        hits = [m for m in range(int(v // 4) - 3, int(v // 4) + 4) if v <= 4 * m < v + 4]
        m = choose_mN(x0, N)
        assert hits == [m]
        # reorganized form: 4(m-1)/(1+x0) < 2^N <= 4m/(1+x0)
        assert 4 * (m - 1) / (1 + x0) < 2**N <= 4 * m / (1 + x0)


def test_mN_irrational_point():
    m = choose_mN(lambda p: Ball(2, prec=p).sqrt(), 10)
    v = (1 + math.sqrt(2)) * 2**10
    assert v <= 4 * m < v + 4


def test_weps_precondition_exact():
    assert weps_precondition(HALF, 0, 2)
    assert not weps_precondition(HALF, 3, 2)
    assert weps_precondition(HALF, 3, 5)


# -- F_N ---------------------------------------------------------------------------------


def test_weight_example():
    w = weight_FN(U1, 0, 4, 4)
    assert abs(float(w.logmag) - (72 * math.log(2) - 16)) < 1e-12
    assert abs(float(w.logmag) - 33.907) < 1e-3
    assert w.sign == 1


def test_ratio_law():
    for m, k, x0 in [(4, 2, 0), (16, 5, Fraction(3, 2)), (300, 9, 2)]:
        direct = weight_FN(U1, x0, m, k + 1).logmag - weight_FN(U1, x0, m, k).logmag
        closed = log_ratio_FN(U1, x0, m, k)
        assert direct.overlaps(closed)
        assert abs(float(closed) - (4 * m * math.log(2) - 2**k * (1 + float(x0)))) < 1e-9


def test_dominance_small_N_fails_and_large_passes():
    assert dominance_check(U1, 0, 1).passed is False
    r = dominance_check(U1, 0, 12)
    assert r.passed is True and r.lhs.sign == 1 and r.rhs.sign == 1


@pytest.mark.parametrize("sol,x0", [(U1, 0), (U1, 1), (U1, Fraction(5, 2)), (W, 0), (W, -1), (W, 3)])
def test_find_N0_consistent(sol, x0):
    N0 = find_N0(sol, x0, 25)
    assert N0 is not None and N0 <= 25
    assert dominance_check(sol, x0, N0).passed and dominance_check(sol, x0, N0 + 1).passed
    assert find_N0(sol, x0, 25) == N0


@pytest.mark.parametrize("sol,x0", [(U1, 0), (W, -1)])
def test_F_maximality_and_chain(sol, x0):
    N0 = find_N0(sol, x0, 20)
    for N in range(N0, N0 + 3):
        dom = dominance_check(sol, x0, N)
        assert dom.passed
        lN = weight_FN(sol, x0, dom.m, N)
        for k in range(1, dom.K + 1):
            if k != N:
                assert weight_FN(sol, x0, dom.m, k).certainly_le(lN)
        for t0 in (0, 1):
            lb = lower_bound_check(sol, x0, t0, N, dominance=dom)
            assert lb.passed and lb.chain_ok


def test_lower_bound_at_origin_uses_cosines():
    N = find_N0(U1, 0)
    lb = lower_bound_check(U1, 0, 0, N)
    # even orders vanish at the origin; the odd one carries the bound
    assert lb.even.ball.is_exact_zero()
    lN = weight_FN(U1, 0, lb.m, N).logmag
    assert abs(lb.odd.ball).log().certainly_gt(lN + Ball(2).log() * (2 * N + 1) - Fraction(1, 10**6))


def test_floor_asymptotics():
    # x0 = 0: floor at n = 2m is (m-1)^2/(2m+1) ~ m/2
    for N in (10, 14, 18):
        m = choose_mN(0, N)
        f = analytic_floor_log(U1, 0, N, m, 2 * m)
        assert abs(math.exp(float(f.logmag)) / (m / 2) - 1) < 4 / m


def test_growth_scan_rows():
    rows = taylor_growth_scan(U1, 0, 0, range(8, 12))
    odd = [r for r in rows if r.n % 2]
    assert all(not r.below_floor for r in rows)
    assert all(r.combined_ok for r in odd)
    assert all(r.root.certainly_gt(r.floor) or not r.root.certainly_lt(r.floor) for r in odd)


# -- envelope ------------------------------------------------------------------------------


def test_envelope_constants_half():
    c = envelope_constants(HALF)
    with mpmath.workprec(300):
        b2 = 2 * (mpmath.sqrt(2) / (2 * mpmath.sqrt(2) - 1)) ** 2
        b3 = mpmath.nsum(lambda j: mpmath.exp(-(mpmath.sqrt(2) - 1) * (2**j - 1)), [1, mpmath.inf])
    assert c.B2.contains(b2) and c.B3.contains(b3)
    assert c.A2.key() == c.B2.key()
    assert not c.A1.certainly_lt(c.B1) and not c.A1.certainly_lt(c.B3 + 2)
    assert all(b.is_positive() for b in (c.B1, c.B2, c.B3, c.A1, c.A2))


def test_B1_is_sup_on_small_range():
    c = envelope_constants(HALF)
    e = Ball.coerce(HALF)
    for x in (0, 25, 50, 99, 100):
        logs = [float(g_log(k, Ball.coerce(x), e)) for k in range(1, 40)]
        mx = max(logs)
        s = mx + math.log(sum(math.exp(l - mx) for l in logs))
        assert s <= float(c.B1.log()) + 1e-9


def test_choose_K():
    assert choose_K(HALF, 200) == 14
    c = choose_K_checked(HALF, 200)
    assert c.form2_ok and c.k_ge_4_over_eps
    with pytest.raises(DomainError):
        choose_K(HALF, 50)
    rng = random.Random(4)
    xs = sorted(Fraction(rng.randint(10**3 + 1, 10**7), 10) for _ in range(100))
    Ks = [choose_K(HALF, x) for x in xs]
    assert Ks == sorted(Ks)
    for x, K in zip(xs, Ks):
        # x/c <= 2^(K/2) < sqrt(2) x / c with c = 2^1.5 - 1
        cst = 2**1.5 - 1
        assert x / cst <= 2 ** (K / 2) * (1 + 1e-12) and 2 ** (K / 2) < math.sqrt(2) * float(x) / cst * (1 + 1e-12)


@pytest.mark.parametrize("x", [101, 200, Fraction(12345, 7), 10**6])
def test_g_ratio_law(x):
    r = g_ratio_law(HALF, x)
    assert r["ratio_matches"] and r["sign_flip_at_K"]


def test_envelope_check_rows():
    c = envelope_constants(HALF)
    grid = [(0, Fraction(t, 4)) for t in range(-8, 9)]
    chk = envelope_check(HALF, c, grid)
    assert chk.passed
    maj = sum(math.exp(-(2 ** (1.5 * k))) for k in range(1, 40))
    chk2 = envelope_check(HALF, c, [(Fraction(x, 3), 1) for x in range(0, 30)])
    assert all(r.ratio.certainly_le(Fraction(maj) + Fraction(1, 10**9)) for r in chk2.rows)


def test_envelope_check_large_negative_x():
    c = envelope_constants(HALF)
    chk = envelope_check(HALF, c, [(-150, Fraction(1, 3)), (-200, 2)])
    assert chk.passed and all(r.regime_ok for r in chk.rows)


# -- walczak --------------------------------------------------------------------------------


def test_walczak_examples():
    w = walczak_hypothesis_check(0, HALF, HALF, 0, [1])
    assert w.sup_observed.overlaps(phi(1, 1))
    neg = walczak_hypothesis_check(0, HALF, 1, 10, [-2, -5])
    assert neg.sup_observed.is_exact_zero()
    with pytest.raises(DomainError):
        walczak_hypothesis_check(0, HALF, 1, 5, [Fraction(1, 2)])


def test_walczak_halving_delta():
    ts = [1 + Fraction(99 * i, 50) for i in range(1, 51)]
    a = walczak_hypothesis_check(0, HALF, 1, 40, ts)
    b = walczak_hypothesis_check(0, HALF / 2, 1, 40, ts)
    assert not b.sup_observed.certainly_gt(a.sup_observed)
    assert a.passed and math.isfinite(a.L)


# -- residual ------------------------------------------------------------------------------


def test_per_term_identity():
    assert all(ok for _, ok in per_term_identity(64))


def test_residual_small_and_second_order():
    grid = cell_grid(0, 2, 3, -1, 1, 3)
    a = residual_check(U1, grid, Fraction(1, 1000))
    b = residual_check(U1, grid, Fraction(1, 2000))
    assert a.within_budget and b.within_budget
    ratio = float(a.max_residual) / float(b.max_residual)
    assert 3.5 <= ratio <= 4.5


def test_residual_weps():
    grid = cell_grid(-1, 1, 2, -1, 1, 2)
    r = residual_check(W, grid, Fraction(1, 1000))
    assert r.within_budget


def test_grids():
    g = node_grid(0, 1, 3, 0, 1, 2)
    assert g[0] == (0, 0) and g[-1] == (1, 1) and len(g) == 6
    c = cell_grid(0, 2, 5, -1, 1, 5)
    assert min(x for x, _ in c) == Fraction(1, 5) and len(c) == 25
