# cython: language_level=3, boundscheck=False, wraparound=False
"""MPFR interval kernels mirroring ``_pykernels``.

Every quantity is an interval ``[lo, hi]`` with endpoints rounded outward by
MPFR (correctly rounded), then collapsed to a midpoint/radius pair at the end.
Inputs and outputs are raw mantissa/exponent integers so the Python side can
rebuild ``Ball`` objects without sharing any C state.
"""

from libc.stdlib cimport free, malloc

cdef extern from "gmp.h":
    ctypedef struct __mpz_struct:
        pass
    ctypedef __mpz_struct mpz_t[1]
    ctypedef __mpz_struct *mpz_ptr
    void mpz_init(mpz_ptr)
    void mpz_clear(mpz_ptr)
    void mpz_import(mpz_ptr, size_t, int, size_t, int, size_t, const void *)
    void *mpz_export(void *, size_t *, int, size_t, int, size_t, mpz_ptr)
    size_t mpz_sizeinbase(mpz_ptr, int)
    int mpz_sgn(mpz_ptr)
    void mpz_neg(mpz_ptr, mpz_ptr)

cdef extern from "mpfr.h":
    ctypedef struct __mpfr_struct:
        pass
    ctypedef __mpfr_struct mpfr_t[1]
    ctypedef __mpfr_struct *mpfr_ptr
    ctypedef long mpfr_prec_t
    ctypedef long mpfr_exp_t
    ctypedef enum mpfr_rnd_t:
        MPFR_RNDN
        MPFR_RNDZ
        MPFR_RNDU
        MPFR_RNDD
    void mpfr_init2(mpfr_ptr, mpfr_prec_t)
    void mpfr_clear(mpfr_ptr)
    int mpfr_set(mpfr_ptr, mpfr_ptr, mpfr_rnd_t)
    int mpfr_set_si(mpfr_ptr, long, mpfr_rnd_t)
    int mpfr_set_z_2exp(mpfr_ptr, mpz_ptr, mpfr_exp_t, mpfr_rnd_t)
    mpfr_exp_t mpfr_get_z_2exp(mpz_ptr, mpfr_ptr)
    int mpfr_add(mpfr_ptr, mpfr_ptr, mpfr_ptr, mpfr_rnd_t)
    int mpfr_sub(mpfr_ptr, mpfr_ptr, mpfr_ptr, mpfr_rnd_t)
    int mpfr_mul(mpfr_ptr, mpfr_ptr, mpfr_ptr, mpfr_rnd_t)
    int mpfr_div(mpfr_ptr, mpfr_ptr, mpfr_ptr, mpfr_rnd_t)
    int mpfr_si_div(mpfr_ptr, long, mpfr_ptr, mpfr_rnd_t)
    int mpfr_mul_2si(mpfr_ptr, mpfr_ptr, long, mpfr_rnd_t)
    int mpfr_mul_si(mpfr_ptr, mpfr_ptr, long, mpfr_rnd_t)
    int mpfr_neg(mpfr_ptr, mpfr_ptr, mpfr_rnd_t)
    int mpfr_abs(mpfr_ptr, mpfr_ptr, mpfr_rnd_t)
    int mpfr_exp(mpfr_ptr, mpfr_ptr, mpfr_rnd_t)
    int mpfr_sqrt(mpfr_ptr, mpfr_ptr, mpfr_rnd_t)
    int mpfr_sin(mpfr_ptr, mpfr_ptr, mpfr_rnd_t)
    int mpfr_cos(mpfr_ptr, mpfr_ptr, mpfr_rnd_t)
    int mpfr_const_pi(mpfr_ptr, mpfr_rnd_t)
    int mpfr_const_log2(mpfr_ptr, mpfr_rnd_t)
    int mpfr_sgn(mpfr_ptr)
    int mpfr_zero_p(mpfr_ptr)
    int mpfr_cmp(mpfr_ptr, mpfr_ptr)
    int mpfr_cmp_si(mpfr_ptr, long)
    mpfr_exp_t mpfr_get_emin_min()
    mpfr_exp_t mpfr_get_emax_max()
    int mpfr_set_emin(mpfr_exp_t)
    int mpfr_set_emax(mpfr_exp_t)
    void mpfr_clear_flags()
    int mpfr_overflow_p()
    int mpfr_underflow_p()
    int mpfr_nanflag_p()

mpfr_set_emin(mpfr_get_emin_min())
mpfr_set_emax(mpfr_get_emax_max())

DEF RAD_PREC = 30


cdef class Iv:
    cdef mpfr_t lo
    cdef mpfr_t hi

    def __cinit__(self, long prec):
        mpfr_init2(self.lo, prec)
        mpfr_init2(self.hi, prec)

    def __dealloc__(self):
        mpfr_clear(self.lo)
        mpfr_clear(self.hi)


cdef void _set_mpz(mpz_ptr z, object n):
    cdef bytes b
    cdef bint neg = n < 0
    if neg:
        n = -n
    cdef size_t nbytes = (n.bit_length() + 7) // 8
    b = n.to_bytes(nbytes, "big")
    mpz_import(z, nbytes, 1, 1, 1, 0, <const char *>b)
    if neg:
        mpz_neg(z, z)


cdef object _get_int(mpz_ptr z):
    cdef size_t count = 0
    cdef size_t nbytes = (mpz_sizeinbase(z, 2) + 7) // 8
    cdef char *buf = <char *>malloc(nbytes + 1)
    if buf == NULL:
        raise MemoryError()
    try:
        mpz_export(buf, &count, 1, 1, 1, 0, z)
        res = int.from_bytes(buf[:count], "big")
    finally:
        free(buf)
    return -res if mpz_sgn(z) < 0 else res


cdef void _set_raw(mpfr_ptr r, tuple v, mpfr_rnd_t rnd):
    """Set ``r`` from a raw libmp tuple (sign, man, exp, bc), rounding by ``rnd``."""
    cdef mpz_t z
    sign, man, exp, bc = v
    if not man:
        mpfr_set_si(r, 0, MPFR_RNDN)
        return
    mpz_init(z)
    _set_mpz(z, -man if sign else man)
    mpfr_set_z_2exp(r, z, exp, rnd)
    mpz_clear(z)


cdef tuple _get_raw(mpfr_ptr r):
    """(man, exp) integers with r == man * 2**exp."""
    cdef mpz_t z
    cdef mpfr_exp_t e
    if mpfr_zero_p(r):
        return (0, 0)
    mpz_init(z)
    e = mpfr_get_z_2exp(z, r)
    man = _get_int(z)
    mpz_clear(z)
    return (man, e)


cdef Iv iv_from_ball(tuple mid, tuple rad, long prec):
    cdef Iv r = Iv(prec)
    cdef mpfr_t m, d
    mpfr_init2(m, max(mid[3], 2))
    mpfr_init2(d, max(rad[3], 2))
    _set_raw(m, mid, MPFR_RNDN)
    _set_raw(d, rad, MPFR_RNDU)
    mpfr_sub(r.lo, m, d, MPFR_RNDD)
    mpfr_add(r.hi, m, d, MPFR_RNDU)
    mpfr_clear(m)
    mpfr_clear(d)
    return r


cdef tuple iv_to_ball(Iv v, long prec):
    cdef mpfr_t m, r1, r2
    mpfr_init2(m, prec)
    mpfr_init2(r1, RAD_PREC)
    mpfr_init2(r2, RAD_PREC)
    mpfr_add(m, v.lo, v.hi, MPFR_RNDN)
    mpfr_mul_2si(m, m, -1, MPFR_RNDN)
    mpfr_sub(r1, v.hi, m, MPFR_RNDU)
    mpfr_sub(r2, m, v.lo, MPFR_RNDU)
    if mpfr_cmp(r2, r1) > 0:
        mpfr_set(r1, r2, MPFR_RNDU)
    if mpfr_sgn(r1) < 0:
        mpfr_set_si(r1, 0, MPFR_RNDN)
    out = _get_raw(m) + _get_raw(r1)
    mpfr_clear(m)
    mpfr_clear(r1)
    mpfr_clear(r2)
    return out


cdef inline void iv_set_si(Iv r, long c):
    mpfr_set_si(r.lo, c, MPFR_RNDD)
    mpfr_set_si(r.hi, c, MPFR_RNDU)


cdef inline void iv_copy(Iv r, Iv a):
    mpfr_set(r.lo, a.lo, MPFR_RNDD)
    mpfr_set(r.hi, a.hi, MPFR_RNDU)


cdef inline void iv_add(Iv r, Iv a, Iv b):
    mpfr_add(r.lo, a.lo, b.lo, MPFR_RNDD)
    mpfr_add(r.hi, a.hi, b.hi, MPFR_RNDU)


cdef void iv_sub(Iv r, Iv a, Iv b, Iv tmp):
    mpfr_sub(tmp.lo, a.lo, b.hi, MPFR_RNDD)
    mpfr_sub(tmp.hi, a.hi, b.lo, MPFR_RNDU)
    iv_copy(r, tmp)


cdef void iv_neg(Iv r, Iv a, Iv tmp):
    mpfr_neg(tmp.lo, a.hi, MPFR_RNDD)
    mpfr_neg(tmp.hi, a.lo, MPFR_RNDU)
    iv_copy(r, tmp)


cdef void iv_mul(Iv r, Iv a, Iv b, Iv tmp, Iv tmp2):
    # tmp holds running min/max, tmp2 scratch
    mpfr_mul(tmp.lo, a.lo, b.lo, MPFR_RNDD)
    mpfr_mul(tmp.hi, a.lo, b.lo, MPFR_RNDU)
    mpfr_mul(tmp2.lo, a.lo, b.hi, MPFR_RNDD)
    mpfr_mul(tmp2.hi, a.lo, b.hi, MPFR_RNDU)
    if mpfr_cmp(tmp2.lo, tmp.lo) < 0:
        mpfr_set(tmp.lo, tmp2.lo, MPFR_RNDD)
    if mpfr_cmp(tmp2.hi, tmp.hi) > 0:
        mpfr_set(tmp.hi, tmp2.hi, MPFR_RNDU)
    mpfr_mul(tmp2.lo, a.hi, b.lo, MPFR_RNDD)
    mpfr_mul(tmp2.hi, a.hi, b.lo, MPFR_RNDU)
    if mpfr_cmp(tmp2.lo, tmp.lo) < 0:
        mpfr_set(tmp.lo, tmp2.lo, MPFR_RNDD)
    if mpfr_cmp(tmp2.hi, tmp.hi) > 0:
        mpfr_set(tmp.hi, tmp2.hi, MPFR_RNDU)
    mpfr_mul(tmp2.lo, a.hi, b.hi, MPFR_RNDD)
    mpfr_mul(tmp2.hi, a.hi, b.hi, MPFR_RNDU)
    if mpfr_cmp(tmp2.lo, tmp.lo) < 0:
        mpfr_set(tmp.lo, tmp2.lo, MPFR_RNDD)
    if mpfr_cmp(tmp2.hi, tmp.hi) > 0:
        mpfr_set(tmp.hi, tmp2.hi, MPFR_RNDU)
    iv_copy(r, tmp)


cdef void iv_sqr(Iv r, Iv a, Iv tmp, Iv tmp2):
    if mpfr_sgn(a.lo) >= 0 or mpfr_sgn(a.hi) <= 0:
        iv_mul(r, a, a, tmp, tmp2)
        return
    mpfr_abs(tmp2.lo, a.lo, MPFR_RNDU)
    if mpfr_cmp(a.hi, tmp2.lo) > 0:
        mpfr_set(tmp2.lo, a.hi, MPFR_RNDU)
    mpfr_mul(r.hi, tmp2.lo, tmp2.lo, MPFR_RNDU)
    mpfr_set_si(r.lo, 0, MPFR_RNDD)


cdef inline void iv_mul_si(Iv r, Iv a, long c, Iv tmp):
    if c >= 0:
        mpfr_mul_si(r.lo, a.lo, c, MPFR_RNDD)
        mpfr_mul_si(r.hi, a.hi, c, MPFR_RNDU)
    else:
        mpfr_mul_si(tmp.lo, a.hi, c, MPFR_RNDD)
        mpfr_mul_si(tmp.hi, a.lo, c, MPFR_RNDU)
        iv_copy(r, tmp)


cdef inline void iv_mul_2si(Iv r, Iv a, long e):
    mpfr_mul_2si(r.lo, a.lo, e, MPFR_RNDD)
    mpfr_mul_2si(r.hi, a.hi, e, MPFR_RNDU)


cdef inline void iv_exp(Iv r, Iv a):
    mpfr_exp(r.lo, a.lo, MPFR_RNDD)
    mpfr_exp(r.hi, a.hi, MPFR_RNDU)


cdef void iv_sqrt(Iv r, Iv a) except *:
    if mpfr_sgn(a.lo) < 0:
        raise ValueError("sqrt of an interval reaching below zero")
    mpfr_sqrt(r.lo, a.lo, MPFR_RNDD)
    mpfr_sqrt(r.hi, a.hi, MPFR_RNDU)


cdef void iv_inv(Iv r, Iv a, Iv tmp) except *:
    if mpfr_sgn(a.lo) <= 0 and mpfr_sgn(a.hi) >= 0:
        raise ValueError("division by an interval containing zero")
    mpfr_si_div(tmp.lo, 1, a.hi, MPFR_RNDD)
    mpfr_si_div(tmp.hi, 1, a.lo, MPFR_RNDU)
    iv_copy(r, tmp)


cdef void iv_trig(Iv r, Iv a, bint cosine, long prec):
    """sin or cos through the midpoint with a 1-Lipschitz radius term."""
    cdef mpfr_t m, d, s
    mpfr_init2(m, prec)
    mpfr_init2(d, RAD_PREC)
    mpfr_init2(s, prec)
    mpfr_add(m, a.lo, a.hi, MPFR_RNDN)
    mpfr_mul_2si(m, m, -1, MPFR_RNDN)
    mpfr_sub(d, a.hi, m, MPFR_RNDU)
    mpfr_sub(s, m, a.lo, MPFR_RNDU)
    if mpfr_cmp(s, d) > 0:
        mpfr_set(d, s, MPFR_RNDU)
    if mpfr_cmp_si(d, 2) >= 0:
        mpfr_set_si(r.lo, -1, MPFR_RNDD)
        mpfr_set_si(r.hi, 1, MPFR_RNDU)
    else:
        if cosine:
            mpfr_cos(s, m, MPFR_RNDD)
        else:
            mpfr_sin(s, m, MPFR_RNDD)
        mpfr_sub(r.lo, s, d, MPFR_RNDD)
        if cosine:
            mpfr_cos(s, m, MPFR_RNDU)
        else:
            mpfr_sin(s, m, MPFR_RNDU)
        mpfr_add(r.hi, s, d, MPFR_RNDU)
        if mpfr_cmp_si(r.lo, -1) < 0:
            mpfr_set_si(r.lo, -1, MPFR_RNDD)
        if mpfr_cmp_si(r.hi, 1) > 0:
            mpfr_set_si(r.hi, 1, MPFR_RNDU)
    mpfr_clear(m)
    mpfr_clear(d)
    mpfr_clear(s)


cdef void _check_flags() except *:
    if mpfr_overflow_p() or mpfr_underflow_p() or mpfr_nanflag_p():
        raise ArithmeticError("MPFR exponent range or NaN flag raised in kernel")


def lacunary_sum(long n, tuple xm, tuple xr, tuple tm, tuple tr, object eps, long k_lo, long k_hi, long prec):
    """Compiled twin of ``_pykernels.lacunary_sum``; eps is None or (mid, rad)."""
    cdef long texp = 0
    cdef long xexp = 0
    if tm[1]:
        texp = max(0, tm[2] + tm[3])
    if xm[1]:
        xexp = max(0, xm[2] + xm[3])
    cdef long wp = prec + 2 * k_hi + 40 + texp + xexp
    cdef int q = n % 4
    cdef long k
    cdef Iv x = iv_from_ball(xm, xr, wp)
    cdef Iv t = iv_from_ball(tm, tr, wp)
    cdef Iv acc = Iv(wp)
    cdef Iv slope = Iv(wp)
    cdef Iv a = Iv(wp)
    cdef Iv xk = Iv(wp)
    cdef Iv w = Iv(wp)
    cdef Iv th = Iv(wp)
    cdef Iv tmp = Iv(wp)
    cdef Iv tmp2 = Iv(wp)
    mpfr_clear_flags()
    iv_set_si(acc, 0)
    if eps is not None:
        e = iv_from_ball(eps[0], eps[1], wp)
        mpfr_const_log2(tmp.lo, MPFR_RNDD)
        mpfr_const_log2(tmp.hi, MPFR_RNDU)
        iv_set_si(slope, 1)
        iv_add(slope, slope, e)
        iv_mul(slope, slope, tmp, tmp2, w)
    for k in range(k_lo, k_hi + 1):
        iv_mul_2si(xk, x, k)
        if eps is None:
            iv_set_si(a, 1)
            iv_mul_2si(a, a, k)
        else:
            iv_mul_si(a, slope, k, tmp)
            iv_exp(a, a)
        iv_add(w, a, xk)
        iv_neg(w, w, tmp)
        iv_exp(w, w)
        iv_mul_2si(th, t, 2 * k + 1)
        iv_sub(th, th, xk, tmp)
        iv_trig(th, th, q % 2 == 1, wp)
        if q >= 2:
            iv_neg(th, th, tmp)
        iv_mul(w, w, th, tmp, tmp2)
        iv_mul_2si(w, w, n * (2 * k + 1))
        iv_add(acc, acc, w)
    _check_flags()
    return iv_to_ball(acc, prec)


cdef class _HeatState:
    """Scratch intervals reused across heat-kernel terms."""
    cdef Iv y, s, two_sq, z, phi, c, h, hp, hn, tmp, tmp2, tmp3, pi4

    def __cinit__(self, long wp):
        self.y = Iv(wp)
        self.s = Iv(wp)
        self.two_sq = Iv(wp)
        self.z = Iv(wp)
        self.phi = Iv(wp)
        self.c = Iv(wp)
        self.h = Iv(wp)
        self.hp = Iv(wp)
        self.hn = Iv(wp)
        self.tmp = Iv(wp)
        self.tmp2 = Iv(wp)
        self.tmp3 = Iv(wp)
        self.pi4 = Iv(wp)
        mpfr_const_pi(self.pi4.lo, MPFR_RNDD)
        mpfr_const_pi(self.pi4.hi, MPFR_RNDU)
        iv_mul_2si(self.pi4, self.pi4, 2)


cdef void _heat_setup(_HeatState st) except *:
    """two_sq = 2 sqrt(s), z = y / two_sq, phi = Phi(y, s), c = -1 / two_sq."""
    if mpfr_sgn(st.s.lo) <= 0:
        raise ValueError("heat kernel derivative needs s > 0 certified")
    iv_sqrt(st.two_sq, st.s)
    iv_mul_2si(st.two_sq, st.two_sq, 1)
    iv_inv(st.c, st.two_sq, st.tmp)
    iv_mul(st.z, st.y, st.c, st.tmp, st.tmp2)
    iv_neg(st.c, st.c, st.tmp)
    # phi = exp(-y^2 / (4 s)) / sqrt(4 pi s)
    iv_sqr(st.phi, st.y, st.tmp, st.tmp2)
    iv_mul_2si(st.tmp3, st.s, 2)
    iv_inv(st.tmp3, st.tmp3, st.tmp)
    iv_mul(st.phi, st.phi, st.tmp3, st.tmp, st.tmp2)
    iv_neg(st.phi, st.phi, st.tmp)
    iv_exp(st.phi, st.phi)
    iv_mul(st.tmp3, st.pi4, st.s, st.tmp, st.tmp2)
    iv_sqrt(st.tmp3, st.tmp3)
    iv_inv(st.tmp3, st.tmp3, st.tmp)
    iv_mul(st.phi, st.phi, st.tmp3, st.tmp, st.tmp2)


cdef void _hermite_step(_HeatState st, long j):
    """(hp, h) <- (h, 2 z h - 2 j hp)."""
    iv_mul(st.hn, st.z, st.h, st.tmp, st.tmp2)
    iv_mul_2si(st.hn, st.hn, 1)
    iv_mul_si(st.tmp3, st.hp, 2 * j, st.tmp)
    iv_sub(st.hn, st.hn, st.tmp3, st.tmp)
    iv_copy(st.hp, st.h)
    iv_copy(st.h, st.hn)


def heat_dx_orders(long nmax, tuple ym, tuple yr, tuple sm, tuple sr, long prec):
    cdef long wp = prec + 32
    cdef long j
    cdef _HeatState st = _HeatState(wp)
    cdef Iv scale = Iv(wp)
    cdef Iv term = Iv(wp)
    mpfr_clear_flags()
    st.y = iv_from_ball(ym, yr, wp)
    st.s = iv_from_ball(sm, sr, wp)
    _heat_setup(st)
    out = [iv_to_ball(st.phi, prec)]
    iv_set_si(st.hp, 1)
    iv_mul_2si(st.h, st.z, 1)
    iv_set_si(scale, 1)
    for j in range(1, nmax + 1):
        iv_mul(scale, scale, st.c, st.tmp, st.tmp2)
        iv_mul(term, scale, st.h, st.tmp, st.tmp2)
        iv_mul(term, term, st.phi, st.tmp, st.tmp2)
        out.append(iv_to_ball(term, prec))
        _hermite_step(st, j)
    _check_flags()
    return out


def heat_dx_sum(long n, tuple ym, tuple yr, list s_list, list w_list, long prec):
    """Sum_j w_j d^n/dx^n Phi(y, s_j); s_list/w_list hold (mid, rad) pairs."""
    cdef long wp = prec + 32
    cdef long j
    cdef _HeatState st = _HeatState(wp)
    cdef Iv acc = Iv(wp)
    cdef Iv term = Iv(wp)
    cdef Iv w = Iv(wp)
    mpfr_clear_flags()
    st.y = iv_from_ball(ym, yr, wp)
    iv_set_si(acc, 0)
    for sp, wpair in zip(s_list, w_list):
        st.s = iv_from_ball(sp[0], sp[1], wp)
        _heat_setup(st)
        iv_set_si(st.hp, 1)
        iv_mul_2si(st.h, st.z, 1)
        if n == 0:
            iv_copy(st.h, st.hp)
        else:
            for j in range(1, n):
                _hermite_step(st, j)
        # (-1/(2 sqrt s))^n by repeated multiplication keeps the interval tight
        iv_set_si(term, 1)
        for j in range(n):
            iv_mul(term, term, st.c, st.tmp, st.tmp2)
        iv_mul(term, term, st.h, st.tmp, st.tmp2)
        iv_mul(term, term, st.phi, st.tmp, st.tmp2)
        w = iv_from_ball(wpair[0], wpair[1], wp)
        iv_mul(term, term, w, st.tmp, st.tmp2)
        iv_add(acc, acc, term)
    _check_flags()
    return iv_to_ball(acc, prec)
