# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: QMC sequential-conditioning sweep and Levinson
log-determinant. Mirrors _ref.py; selected at import by _kernels/__init__.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport erfc, log, sqrt, fabs, exp, INFINITY

cnp.import_array()

BACKEND_NAME = "cython"

cdef double _P_LO = 1e-300
cdef double _P_HI = 1.0 - 1e-16
cdef double _SQRT1_2 = 0.7071067811865476


cdef inline double _phi_cdf(double x) nogil:
    return 0.5 * erfc(-x * _SQRT1_2)


cdef double _phi_inv(double p) nogil:
    # Wichura's AS241 (PPND16): double-precision inverse normal CDF.
    cdef double q = p - 0.5
    cdef double r, num, den
    if fabs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r
                    + 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r
                  + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r
                + 1.3314166789178437745e2) * r + 3.3871328727963666080e0)
        den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r
                    + 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r
                  + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r
                + 4.2313330701600911252e1) * r + 1.0)
        return q * num / den
    if q < 0.0:
        r = p
    else:
        r = 1.0 - p
    if r <= 0.0:
        return -INFINITY if q < 0.0 else INFINITY
    r = sqrt(-log(r))
    if r <= 5.0:
        r = r - 1.6
        num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r
                    + 2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r
                  + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r
                + 4.63033784615654529590e0) * r + 1.42343711074968357734e0)
        den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r
                    + 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r
                  + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r
                + 2.05319162663775882187e0) * r + 1.0)
    else:
        r = r - 5.0
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                    + 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r
                  + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r
                + 5.46378491116411436990e0) * r + 6.65790464350110377720e0)
        den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r
                    + 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r
                  + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r
                + 5.99832206555887937690e-1) * r + 1.0)
    if q < 0.0:
        return -num / den
    return num / den


def qmc_logprods(double[:, ::1] chol, double[::1] hi, double[:, ::1] pts,
                 bint tent):
    # point-blocked layout: per dimension j, sweep all points so the
    # conditional-mean update is a run of saxpy rows the compiler can
    # vectorize, and the special-function calls stay in tight loops
    cdef Py_ssize_t n = chol.shape[0]
    cdef Py_ssize_t n_pts = pts.shape[0]
    if n_pts == 0:
        n_pts = 1
    out = np.empty(n_pts, dtype=np.float64)
    cdef double[::1] logprod = out
    ybuf = np.empty(((n - 1 if n > 1 else 1), n_pts), dtype=np.float64)
    cdef double[:, ::1] y = ybuf
    cbuf = np.empty(n_pts, dtype=np.float64)
    dbuf = np.empty(n_pts, dtype=np.float64)
    sbuf = np.empty(n_pts, dtype=np.float64)
    cdef double[::1] c = cbuf
    cdef double[::1] d = dbuf
    cdef double[::1] s = sbuf
    cdef Py_ssize_t i, j, k
    cdef double c0, d0, x, arg, rdiag, dc, a, cc, dd
    cdef double *yrow

    rdiag = chol[0, 0]
    c0 = _phi_cdf(-hi[0] / rdiag)
    d0 = _phi_cdf(hi[0] / rdiag)
    dc = d0 - c0
    if dc < _P_LO:
        dc = _P_LO
    with nogil:
        for i in range(n_pts):
            logprod[i] = log(dc)
            c[i] = c0
            d[i] = d0
        for j in range(1, n):
            for i in range(n_pts):
                x = pts[i, j - 1]
                if tent:
                    x = fabs(2.0 * x - 1.0)
                arg = c[i] + x * (d[i] - c[i])
                if arg < _P_LO:
                    arg = _P_LO
                elif arg > _P_HI:
                    arg = _P_HI
                y[j - 1, i] = _phi_inv(arg)
            for i in range(n_pts):
                s[i] = 0.0
            for k in range(j):
                a = chol[j, k]
                if a != 0.0:
                    yrow = &y[k, 0]
                    for i in range(n_pts):
                        s[i] += a * yrow[i]
            rdiag = chol[j, j]
            for i in range(n_pts):
                cc = _phi_cdf((-hi[j] - s[i]) / rdiag)
                dd = _phi_cdf((hi[j] - s[i]) / rdiag)
                c[i] = cc
                d[i] = dd
                dd = dd - cc
                if dd < _P_LO:
                    dd = _P_LO
                logprod[i] += log(dd)
    return out


def levinson_logdet(double[::1] r, Py_ssize_t n):
    cdef double v, logdet, k, acc
    cdef Py_ssize_t m, i, m_cur
    if r[0] <= 0.0:
        return 0.0, 0
    v = r[0]
    logdet = log(v)
    abuf = np.empty(n if n > 1 else 1, dtype=np.float64)
    cdef double[::1] a = abuf
    m_cur = 0
    for m in range(1, n):
        acc = 0.0
        for i in range(m_cur):
            acc += a[i] * r[m - 1 - i]
        k = (r[m] - acc) / v
        for i in range(m_cur // 2):
            acc = a[i]
            a[i] = acc - k * a[m_cur - 1 - i]
            a[m_cur - 1 - i] = a[m_cur - 1 - i] - k * acc
        if m_cur % 2 == 1:
            a[m_cur // 2] = a[m_cur // 2] * (1.0 - k)
        a[m_cur] = k
        m_cur += 1
        v *= (1.0 - k * k)
        if v <= 0.0 or v != v:
            return logdet, m
        logdet += log(v)
    return logdet, -1
