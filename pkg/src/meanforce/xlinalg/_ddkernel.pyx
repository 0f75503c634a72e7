# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Double-double (~106-bit) complex kernels: matmul and Hermitian Jacobi.

Matrices are float64 arrays of shape (n, n, 4) holding
(re_hi, re_lo, im_hi, im_lo) per entry.  Error-free transforms follow the
standard QD-library constructions (two_sum / fma-based two_prod).
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, fma

cnp.import_array()

ctypedef struct dd:
    double hi
    double lo

ctypedef struct cdd:
    dd re
    dd im


cdef inline dd dd_make(double hi, double lo) noexcept nogil:
    cdef dd r
    r.hi = hi
    r.lo = lo
    return r


cdef inline dd dd_quick_two_sum(double a, double b) noexcept nogil:
    cdef dd r
    r.hi = a + b
    r.lo = b - (r.hi - a)
    return r


cdef inline dd dd_two_sum(double a, double b) noexcept nogil:
    cdef dd r
    cdef double v
    r.hi = a + b
    v = r.hi - a
    r.lo = (a - (r.hi - v)) + (b - v)
    return r


cdef inline dd dd_two_prod(double a, double b) noexcept nogil:
    cdef dd r
    r.hi = a * b
    r.lo = fma(a, b, -r.hi)
    return r


cdef inline dd dd_add(dd a, dd b) noexcept nogil:
    cdef dd s, t
    s = dd_two_sum(a.hi, b.hi)
    t = dd_two_sum(a.lo, b.lo)
    s.lo += t.hi
    s = dd_quick_two_sum(s.hi, s.lo)
    s.lo += t.lo
    return dd_quick_two_sum(s.hi, s.lo)


cdef inline dd dd_neg(dd a) noexcept nogil:
    return dd_make(-a.hi, -a.lo)


cdef inline dd dd_sub(dd a, dd b) noexcept nogil:
    return dd_add(a, dd_neg(b))


cdef inline dd dd_mul(dd a, dd b) noexcept nogil:
    cdef dd p
    p = dd_two_prod(a.hi, b.hi)
    p.lo += a.hi * b.lo + a.lo * b.hi
    return dd_quick_two_sum(p.hi, p.lo)


cdef inline dd dd_mul_d(dd a, double b) noexcept nogil:
    cdef dd p
    p = dd_two_prod(a.hi, b)
    p.lo += a.lo * b
    return dd_quick_two_sum(p.hi, p.lo)


cdef inline dd dd_div(dd a, dd b) noexcept nogil:
    cdef double q1, q2, q3
    cdef dd r
    q1 = a.hi / b.hi
    r = dd_sub(a, dd_mul_d(b, q1))
    q2 = r.hi / b.hi
    r = dd_sub(r, dd_mul_d(b, q2))
    q3 = r.hi / b.hi
    r = dd_quick_two_sum(q1, q2)
    return dd_add(r, dd_make(q3, 0.0))


cdef inline dd dd_sqrt(dd a) noexcept nogil:
    cdef double x, ax
    cdef dd err
    if a.hi <= 0.0:
        return dd_make(0.0, 0.0)
    x = 1.0 / sqrt(a.hi)
    ax = a.hi * x
    err = dd_sub(a, dd_mul(dd_make(ax, 0.0), dd_make(ax, 0.0)))
    return dd_quick_two_sum(ax, err.hi * (x * 0.5))


cdef inline cdd cdd_add(cdd a, cdd b) noexcept nogil:
    cdef cdd r
    r.re = dd_add(a.re, b.re)
    r.im = dd_add(a.im, b.im)
    return r


cdef inline cdd cdd_sub(cdd a, cdd b) noexcept nogil:
    cdef cdd r
    r.re = dd_sub(a.re, b.re)
    r.im = dd_sub(a.im, b.im)
    return r


cdef inline cdd cdd_mul(cdd a, cdd b) noexcept nogil:
    cdef cdd r
    r.re = dd_sub(dd_mul(a.re, b.re), dd_mul(a.im, b.im))
    r.im = dd_add(dd_mul(a.re, b.im), dd_mul(a.im, b.re))
    return r


cdef inline cdd cdd_conj(cdd a) noexcept nogil:
    cdef cdd r
    r.re = a.re
    r.im = dd_neg(a.im)
    return r


cdef inline cdd cdd_scale(cdd a, dd s) noexcept nogil:
    cdef cdd r
    r.re = dd_mul(a.re, s)
    r.im = dd_mul(a.im, s)
    return r


cdef inline dd cdd_abs2(cdd a) noexcept nogil:
    return dd_add(dd_mul(a.re, a.re), dd_mul(a.im, a.im))


cdef inline cdd load(double[:, :, ::1] m, Py_ssize_t i, Py_ssize_t j) noexcept nogil:
    cdef cdd r
    r.re.hi = m[i, j, 0]
    r.re.lo = m[i, j, 1]
    r.im.hi = m[i, j, 2]
    r.im.lo = m[i, j, 3]
    return r


cdef inline void store(double[:, :, ::1] m, Py_ssize_t i, Py_ssize_t j, cdd v) noexcept nogil:
    m[i, j, 0] = v.re.hi
    m[i, j, 1] = v.re.lo
    m[i, j, 2] = v.im.hi
    m[i, j, 3] = v.im.lo


def matmul(double[:, :, ::1] A, double[:, :, ::1] B):
    """C = A @ B in double-double complex arithmetic."""
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t m = B.shape[1]
    cdef Py_ssize_t kk = A.shape[1]
    if B.shape[0] != kk:
        raise ValueError("shape mismatch")
    out = np.zeros((n, m, 4), dtype=np.float64)
    cdef double[:, :, ::1] C = out
    cdef Py_ssize_t i, j, k
    cdef cdd acc, a, b
    with nogil:
        for i in range(n):
            for j in range(m):
                acc.re = dd_make(0.0, 0.0)
                acc.im = dd_make(0.0, 0.0)
                for k in range(kk):
                    a = load(A, i, k)
                    b = load(B, k, j)
                    acc = cdd_add(acc, cdd_mul(a, b))
                store(C, i, j, acc)
    return out


def jacobi_eigen(double[:, :, ::1] Ain, int max_sweeps=60, double tol_factor=7.888609052210118e-31):
    """Cyclic Jacobi eigendecomposition of a Hermitian dd matrix.

    Returns (eigenvalues (n,2) dd reals, eigenvectors (n,n,4), sweeps,
    converged flag).  Rotations sweep (p, q) in fixed row-major order, so the
    result is bit-deterministic.  Default stop tolerance is 2^-100 relative
    to the Frobenius norm.
    """
    cdef Py_ssize_t n = Ain.shape[0]
    awork = np.array(Ain, dtype=np.float64, copy=True)
    vwork = np.zeros((n, n, 4), dtype=np.float64)
    wout = np.zeros((n, 2), dtype=np.float64)
    cdef double[:, :, ::1] a = awork
    cdef double[:, :, ::1] v = vwork
    cdef double[:, ::1] w = wout
    cdef Py_ssize_t i, j, p, q
    cdef double fnorm = 0.0, stop_tol, skip_tol, maxoff, mhi
    cdef dd m2, mm, app, aqq, tau, t2, den, t, c, s, one
    cdef cdd apq, e, se, cse, x, y, nx, ny
    cdef int sweep = 0
    cdef bint converged = False

    for i in range(n):
        v[i, i, 0] = 1.0
        for j in range(n):
            fnorm += a[i, j, 0] * a[i, j, 0] + a[i, j, 2] * a[i, j, 2]
    fnorm = sqrt(fnorm)
    if fnorm == 0.0:
        return wout, vwork, 0, True

    stop_tol = fnorm * tol_factor
    skip_tol = stop_tol / (4.0 * n)
    one = dd_make(1.0, 0.0)

    with nogil:
        while sweep < max_sweeps:
            maxoff = 0.0
            for p in range(n - 1):
                for q in range(p + 1, n):
                    mhi = sqrt(a[p, q, 0] * a[p, q, 0] + a[p, q, 2] * a[p, q, 2])
                    if mhi > maxoff:
                        maxoff = mhi
            if maxoff <= stop_tol:
                converged = True
                break
            sweep += 1
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = load(a, p, q)
                    m2 = cdd_abs2(apq)
                    mm = dd_sqrt(m2)
                    if mm.hi <= skip_tol:
                        continue
                    # unit phase of the pivot and the classic rotation angle
                    e.re = dd_div(apq.re, mm)
                    e.im = dd_div(apq.im, mm)
                    app = load(a, p, p).re
                    aqq = load(a, q, q).re
                    tau = dd_div(dd_sub(aqq, app), dd_mul_d(mm, 2.0))
                    t2 = dd_sqrt(dd_add(dd_mul(tau, tau), one))
                    # roots of t^2 - 2 tau t - 1: pick the small-|t| one
                    if tau.hi >= 0.0:
                        den = dd_add(tau, t2)
                        t = dd_neg(dd_div(one, den))
                    else:
                        den = dd_sub(t2, tau)
                        t = dd_div(one, den)
                    c = dd_div(one, dd_sqrt(dd_add(dd_mul(t, t), one)))
                    s = dd_mul(t, c)
                    se = cdd_scale(e, s)
                    cse = cdd_conj(se)
                    # A <- A R  (columns p, q)
                    for i in range(n):
                        x = load(a, i, p)
                        y = load(a, i, q)
                        nx = cdd_add(cdd_scale(x, c), cdd_mul(y, cse))
                        ny = cdd_sub(cdd_scale(y, c), cdd_mul(x, se))
                        store(a, i, p, nx)
                        store(a, i, q, ny)
                    # A <- R^dagger A  (rows p, q)
                    for j in range(n):
                        x = load(a, p, j)
                        y = load(a, q, j)
                        nx = cdd_add(cdd_scale(x, c), cdd_mul(y, se))
                        ny = cdd_sub(cdd_scale(y, c), cdd_mul(x, cse))
                        store(a, p, j, nx)
                        store(a, q, j, ny)
                    # V <- V R
                    for i in range(n):
                        x = load(v, i, p)
                        y = load(v, i, q)
                        nx = cdd_add(cdd_scale(x, c), cdd_mul(y, cse))
                        ny = cdd_sub(cdd_scale(y, c), cdd_mul(x, se))
                        store(v, i, p, nx)
                        store(v, i, q, ny)
                    # enforce exact Hermitian structure at the pivot
                    a[p, q, 0] = 0.0
                    a[p, q, 1] = 0.0
                    a[p, q, 2] = 0.0
                    a[p, q, 3] = 0.0
                    a[q, p, 0] = 0.0
                    a[q, p, 1] = 0.0
                    a[q, p, 2] = 0.0
                    a[q, p, 3] = 0.0
                    a[p, p, 2] = 0.0
                    a[p, p, 3] = 0.0
                    a[q, q, 2] = 0.0
                    a[q, q, 3] = 0.0

    for i in range(n):
        w[i, 0] = a[i, i, 0]
        w[i, 1] = a[i, i, 1]
    return wout, vwork, sweep, converged
