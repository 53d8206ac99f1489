"""Replay of the lower-bound argument for the lacunary families, step by step.

For a level N the order 2 m_N is chosen so that the k = N term dominates the
n-th derivative series. With F_N(k) the term magnitudes at order 2 m_N,

    |h^(2m)| + |h^(2m+1)| >= F_N(N) - 4 sum_{k != N} 4^k F_N(k),

so once the off-N sum is below F_N(N)/100 the left side is >= F_N(N)/2, which
in turn bounds the Taylor roots from below by an explicit floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from mpmath.libmp import fzero

from ..derivatives import TimeDerivative, lacunary_log_term, taylor_coefficient, time_derivative
from ..numerics import Ball, SignedLog, SignIndeterminate, Undecidable, exp2, ln2, log_sum_exp
from ..numerics.ball import mpf_to_fraction
from ..numerics.factorial import log_factorial
from ..numerics.precision import DEFAULT_PREC, DomainError, escalation_ladder
from ..solutions import EXACT_DEN_MAX, Kind, SolutionId, _eps_ball, exact_or_none

NMAX_CAP = 30


def _ceil_quarter(v: Fraction) -> int:
    return math.ceil(v / 4)


def _ball_ceil_quarter(v: Ball):
    lo = math.ceil(mpf_to_fraction(v.lower()) / 4)
    hi = math.ceil(mpf_to_fraction(v.upper()) / 4)
    return lo if lo == hi else None


def choose_mN(x0, N: int, prec: int = DEFAULT_PREC) -> int:
    """The unique m with 2^N (1 + x0) <= 4m < 2^N (1 + x0) + 4."""
    if N < 1:
        raise ValueError("N must be >= 1")
    xq = exact_or_none(x0)
    if xq is not None:
        if xq < 0:
            raise DomainError("u1 replay needs x0 >= 0")
        v = (1 + xq) * 2**N
        m = _ceil_quarter(v)
        assert v <= 4 * m < v + 4
        return m
    for p in escalation_ladder(prec):
        xb = Ball.coerce(x0 if not callable(x0) else x0(p), p)
        if not xb.is_nonnegative():
            raise DomainError("u1 replay needs x0 >= 0")
        m = _ball_ceil_quarter((xb + 1).mul_2exp(N))
        if m is not None:
            return m
    raise Undecidable("m_N window straddles an integer at the precision cap")


def _pow2_eps_exact(eps: Fraction, N: int):
    """2^(eps N) as a Fraction when it is rational, else None."""
    p, q = eps.numerator, eps.denominator
    if (p * N) % q == 0:
        return Fraction(2) ** ((p * N) // q)
    return None


def weps_precondition(eps, x0, N: int, prec: int = DEFAULT_PREC) -> bool:
    """2^(eps N) >= 2 + |x0|, decided exactly for rational inputs."""
    e = exact_or_none(eps)
    xq = exact_or_none(x0)
    if e is not None and xq is not None and e.denominator <= EXACT_DEN_MAX:
        p, q = e.numerator, e.denominator
        return Fraction(2) ** (p * N) >= (2 + abs(xq)) ** q
    for pr in escalation_ladder(prec):
        lhs = exp2(_eps_ball(eps, pr) * N, pr)
        rhs = abs(Ball.coerce(x0, pr)) + 2
        if rhs.certainly_le(lhs):
            return True
        if lhs.certainly_lt(rhs):
            return False
    raise Undecidable("weps precondition undecided at the precision cap")


def choose_mN_weps(eps, x0, N: int, prec: int = DEFAULT_PREC) -> int:
    """The unique m with (2^(eps N) + x0) 2^N <= 4m < (2^(eps N) + x0) 2^N + 4."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if not weps_precondition(eps, x0, N, prec):
        raise DomainError(f"precondition 2^(eps N) >= 2 + |x0| fails at N={N}")
    e = exact_or_none(eps)
    xq = exact_or_none(x0)
    if e is not None and xq is not None:
        pw = _pow2_eps_exact(e, N)
        if pw is not None:
            v = (pw + xq) * 2**N
            m = _ceil_quarter(v)
            assert v <= 4 * m < v + 4
            return m
    for p in escalation_ladder(prec):
        v = (exp2(_eps_ball(eps, p) * N, p) + Ball.coerce(x0, p)).mul_2exp(N)
        m = _ball_ceil_quarter(v)
        if m is not None:
            return m
    raise Undecidable("m_N window straddles an integer at the precision cap")


def level_order(sol: SolutionId, x0, N: int, prec: int = DEFAULT_PREC) -> int:
    if sol.kind is Kind.U1:
        return choose_mN(x0, N, prec)
    if sol.kind is Kind.WEPS:
        return choose_mN_weps(sol.eps, x0, N, prec)
    raise ValueError("proof replay covers the lacunary families (u1, weps) only")


def _eps_of(sol: SolutionId, prec: int):
    return None if sol.kind is Kind.U1 else _eps_ball(sol.eps, prec)


def weight_FN(sol: SolutionId, x0, m: int, k: int, prec: int = DEFAULT_PREC) -> SignedLog:
    """F_N(k) = exp(-a_k - 2^k x0) 2^(2m(2k+1)) as a positive SignedLog."""
    if k < 1:
        raise ValueError("k must be >= 1")
    xb = Ball.coerce(x0, prec)
    return SignedLog(1, lacunary_log_term(2 * m, k, xb, _eps_of(sol, prec), prec))


def log_ratio_FN(sol: SolutionId, x0, m: int, k: int, prec: int = DEFAULT_PREC) -> Ball:
    """ln F_N(k+1)/F_N(k); for u1 this is 4m ln 2 - 2^k (1 + x0)."""
    xb = Ball.coerce(x0, prec)
    if sol.kind is Kind.U1:
        return ln2(prec) * (4 * m) - (xb + 1).mul_2exp(k)
    e = _eps_of(sol, prec)
    return lacunary_log_term(2 * m, k + 1, xb, e, prec) - lacunary_log_term(2 * m, k, xb, e, prec)


@dataclass(frozen=True)
class DominanceResult:
    N: int
    m: int
    passed: bool | None
    lhs: SignedLog
    rhs: SignedLog
    table: tuple = ()
    tail: SignedLog = field(default_factory=SignedLog.zero)
    K: int = 0

    @property
    def log_margin(self) -> float:
        """ln(rhs) - ln(lhs), >0 when dominance holds."""
        return float(self.rhs.logmag) - float(self.lhs.logmag)

    def to_json(self) -> dict:
        return {
            "N": self.N,
            "m_N": self.m,
            "passed": self.passed,
            "lhs": self.lhs.to_json(),
            "rhs": self.rhs.to_json(),
            "log_margin": round(self.log_margin, 9),
            "terms": self.K,
        }


def _off_terms(sol, x0, m, N, prec):
    """ln(4^k F_N(k)) for k = 1..K (k != N) plus a certified tail 2 * 4^(K+1) F_N(K+1).

    K runs past N until the ratio 4 F(k+1)/F(k) is certified <= 1/2 (it
    decreases from there) and the next term is below 2^-(prec+8) of F_N(N).
    """
    xb = Ball.coerce(x0, prec)
    e = _eps_of(sol, prec)
    l2 = ln2(prec)
    logs = {}

    def lt(k):
        if k not in logs:
            logs[k] = lacunary_log_term(2 * m, k, xb, e, prec) + l2 * (2 * k)
        return logs[k]

    lN = lacunary_log_term(2 * m, N, xb, e, prec)
    K = N + 1
    while True:
        r = lt(K + 2) - lt(K + 1)
        small = lt(K + 1).certainly_lt(lN - l2 * (prec + 8))
        if r.certainly_le(-l2) and small and _ratio_monotone(sol, xb, K + 1, prec):
            break
        K += 1
    table = [SignedLog(1, lt(k)) for k in range(1, K + 1) if k != N]
    tail = SignedLog(1, lt(K + 1) + l2)
    return table, tail, K, lN


def _ratio_monotone(sol, xb, k, prec) -> bool:
    """The log-ratio of consecutive terms decreases for indices >= k.

    u1: ln ratio = const - 2^k (1 + x0), decreasing since 1 + x0 > 0.
    weps: decreasing once 2^(eps k) >= |x0| + 1 (crossover).
    """
    if sol.kind is Kind.U1:
        return True
    from ..solutions import weps_crossover

    return k >= weps_crossover(sol.eps, xb, prec)


def dominance_check(sol: SolutionId, x0, N: int, prec: int = DEFAULT_PREC) -> DominanceResult:
    """Decide sum_{k != N} 4^k F_N(k) <= F_N(N) / 100 in SignedLog space."""
    if N < 1:
        raise ValueError("N must be >= 1")
    m = level_order(sol, x0, N, prec)
    last = None
    for p in escalation_ladder(prec):
        table, tail, K, lN = _off_terms(sol, x0, m, N, p)
        lhs = log_sum_exp(table + [tail], p)
        rhs = SignedLog(1, lN - Ball(100, prec=p).log())
        if lhs.certainly_le(rhs):
            verdict = True
        elif lhs.certainly_gt(rhs):
            verdict = False
        else:
            verdict = None
        last = DominanceResult(N, m, verdict, lhs, rhs, tuple(table), tail, K)
        if verdict is not None or p >= 4 * prec:
            return last
    return last


def find_N0(sol: SolutionId, x0, Nmax: int = 25, prec: int = DEFAULT_PREC):
    """Smallest N0 <= Nmax such that dominance holds for every N in [N0, Nmax]; None if none."""
    if Nmax > NMAX_CAP:
        raise ValueError(f"Nmax is capped at {NMAX_CAP}")
    N0 = None
    for N in range(Nmax, 0, -1):
        try:
            ok = dominance_check(sol, x0, N, prec).passed is True
        except DomainError:
            ok = False
        if not ok:
            break
        N0 = N
    return N0


@dataclass(frozen=True)
class LowerBoundResult:
    N: int
    m: int
    passed: bool | None
    lhs: SignedLog
    rhs: SignedLog
    even: TimeDerivative
    odd: TimeDerivative
    chain_ok: bool | None = None

    def to_json(self) -> dict:
        return {
            "N": self.N,
            "m_N": self.m,
            "passed": self.passed,
            "lhs_lower": self.lhs.to_json(),
            "rhs": self.rhs.to_json(),
            "log10_lhs": None if self.lhs.is_zero else round(self.lhs.log10(), 6),
            "log10_rhs": round(self.rhs.log10(), 6),
            "chain_ok": self.chain_ok,
        }


def _lower_sum(even: TimeDerivative, odd: TimeDerivative, prec: int) -> Ball:
    return even.abs_lower() + odd.abs_lower()


def decide_ge(a: Ball, b: Ball):
    """True if a >= b is certified, False if a < b is certified, None otherwise."""
    if b.certainly_le(a):
        return True
    if a.certainly_lt(b):
        return False
    return None


def lower_bound_check(sol: SolutionId, x0, t0, N: int, prec: int = DEFAULT_PREC, dominance: DominanceResult | None = None) -> LowerBoundResult:
    """Certify |h^(2m)(t0)| + |h^(2m+1)(t0)| >= F_N(N)/2 with m = m_N.

    When a DominanceResult is supplied, also checks the intermediate step
    |h^(2m)| + |h^(2m+1)| + 4 * (off-N sum) >= F_N(N) (``chain_ok``).
    """
    m = level_order(sol, x0, N, prec)
    even = time_derivative(sol, 2 * m, x0, t0, prec)
    odd = time_derivative(sol, 2 * m + 1, x0, t0, prec)
    p = max(even.prec, odd.prec)
    xb = Ball.coerce(x0, p)
    lN = lacunary_log_term(2 * m, N, xb, _eps_of(sol, p), p)
    rhs = SignedLog(1, lN - ln2(p))
    lo = Ball._raw((even.abs_lower() + odd.abs_lower()).lower(), fzero, p)
    hi = Ball._raw((abs(even.ball) + abs(odd.ball)).upper(), fzero, p)
    if not lo.is_positive():
        passed = False if hi.is_exact_zero() or hi.log().certainly_lt(rhs.logmag) else None
        return LowerBoundResult(N, m, passed, SignedLog.zero(), rhs, even, odd)
    lhs = SignedLog(1, lo.log())
    passed = decide_ge(lhs.logmag, rhs.logmag)
    if passed is None and hi.log().certainly_lt(rhs.logmag):
        passed = False
    chain = None
    if dominance is not None:
        off4 = dominance.lhs.scale_log(Ball(4, prec=p).log())
        total = log_sum_exp([lhs, off4], p)
        chain = decide_ge(total.logmag, lN)
    return LowerBoundResult(N, m, passed, lhs, rhs, even, odd, chain)


def analytic_floor_log(sol: SolutionId, x0, N: int, m: int, n: int, prec: int = DEFAULT_PREC) -> SignedLog:
    """ln of B^(2m/n) with B = (m-1)^2 / (D^2 (2m+1)), D = 1 + x0 (u1) or 2^(eps N) + x0 (weps)."""
    if m <= 1:
        return SignedLog.zero()
    xb = Ball.coerce(x0, prec)
    if sol.kind is Kind.U1:
        d = xb + 1
    else:
        d = exp2(_eps_ball(sol.eps, prec) * N, prec) + xb
    lb = Ball((m - 1) ** 2, prec=prec).log() - d.sqr().log() - Ball(2 * m + 1, prec=prec).log()
    return SignedLog(1, lb * Fraction(2 * m, n))


@dataclass(frozen=True)
class GrowthRow:
    N: int
    m: int
    n: int
    root: SignedLog | None
    floor: SignedLog
    below_floor: bool
    combined_ok: bool | None

    def to_json(self) -> dict:
        r = self.root
        return {
            "N": self.N,
            "m_N": self.m,
            "n": self.n,
            "root": None if r is None else r.to_json(),
            "root_float": None if r is None else (0.0 if r.is_zero else float(r.logmag.exp()) if float(r.logmag) < 700 else None),
            "floor": self.floor.to_json(),
            "floor_float": 0.0 if self.floor.is_zero else (float(self.floor.logmag.exp()) if float(self.floor.logmag) < 700 else None),
            "below_floor": self.below_floor,
            "combined_ok": self.combined_ok,
        }


def taylor_growth_scan(sol: SolutionId, x0, t0, N_range, prec: int = DEFAULT_PREC) -> list:
    """Rows (N, n, root, floor) for n in {2m_N, 2m_N + 1}.

    A row is flagged ``below_floor`` when its computed root is certainly below
    the floor. Rows whose derivative is exactly zero (even orders at the
    origin) carry the zero root and are not flagged: the floor bounds the
    combined quantity (|h^(2m)| + |h^(2m+1)|) / (2m+1)!, reported as
    ``combined_ok`` on the odd row.
    """
    rows = []
    for N in N_range:
        m = level_order(sol, x0, N, prec)
        ders = {}
        for n in (2 * m, 2 * m + 1):
            d = time_derivative(sol, n, x0, t0, prec)
            ders[n] = d
            root = taylor_coefficient(sol, n, x0, t0, prec, deriv=d)
            floor = analytic_floor_log(sol, x0, N, m, n, d.prec)
            below = False
            if root is not None and not root.is_zero and not floor.is_zero:
                below = root.certainly_lt(floor)
            combined = None
            if n == 2 * m + 1:
                lo = Ball._raw((ders[2 * m].abs_lower() + d.abs_lower()).lower(), fzero, d.prec)
                if lo.is_positive():
                    # (|h^(2m)| + |h^(2m+1)|) / (2m+1)! >= B^(2m)
                    lhs = lo.log() - log_factorial(n, d.prec)
                    fl = analytic_floor_log(sol, x0, N, m, 2 * m, d.prec)
                    combined = True if fl.is_zero else decide_ge(lhs, fl.logmag)
            rows.append(GrowthRow(N, m, n, root, floor, below, combined))
    return rows


@dataclass(frozen=True)
class ProofReplayRecord:
    solution: SolutionId
    x0: object
    t0: object
    N: int
    m_N: int
    F_table: tuple
    F_tail: SignedLog
    dominance: bool | None
    lower_bound_ok: bool | None
    coefficient_root: SignedLog | None
    lower: LowerBoundResult | None = None

    def to_json(self) -> dict:
        r = self.coefficient_root
        return {
            "solution": self.solution.label(),
            "x0": str(self.x0),
            "t0": str(self.t0),
            "N": self.N,
            "m_N": self.m_N,
            "F_table_log10": [round(f.log10(), 6) for f in self.F_table],
            "F_tail_log10": None if self.F_tail.is_zero else round(self.F_tail.log10(), 6),
            "dominance": self.dominance,
            "lower_bound_ok": self.lower_bound_ok,
            "chain_ok": None if self.lower is None else self.lower.chain_ok,
            "coefficient_root": None if r is None else r.to_json(),
            "coefficient_root_log10": None if r is None or r.is_zero else round(r.log10(), 6),
        }


def replay_level(sol: SolutionId, x0, t0, N: int, prec: int = DEFAULT_PREC) -> ProofReplayRecord:
    dom = dominance_check(sol, x0, N, prec)
    m = dom.m
    xb = Ball.coerce(x0, prec)
    e = _eps_of(sol, prec)
    F = tuple(SignedLog(1, lacunary_log_term(2 * m, k, xb, e, prec)) for k in range(1, dom.K + 1))
    F_tail = SignedLog(1, lacunary_log_term(2 * m, dom.K + 1, xb, e, prec) + ln2(prec))
    lb = lower_bound_check(sol, x0, t0, N, prec, dominance=dom)
    root = taylor_coefficient(sol, 2 * m + 1, x0, t0, prec, deriv=lb.odd)
    return ProofReplayRecord(sol, x0, t0, N, m, F, F_tail, dom.passed, lb.passed, root, lb)
