"""Pure numpy/scipy reference implementations of the hot kernels.

These are the fallback backend when the compiled extension is unavailable.
Both backends must agree to ~1e-10 relative; tests enforce this.
"""

import numpy as np
from scipy.special import ndtr, ndtri

BACKEND_NAME = "python"

# Shared clamps: keep inverse-normal arguments inside the f64-representable
# open interval so a zero conditional width cannot poison the recursion.
_P_LO = 1e-300
_P_HI = 1.0 - 1e-16
_LOG_FLOOR = -745.0


def qmc_logprods(chol, hi, pts, tent):
    """Sequential-conditioning log-products for a centered Gaussian box.

    chol  : (n, n) lower Cholesky factor of the covariance
    hi    : (n,) upper limits; the box is the symmetric [-hi, hi]
    pts   : (n_pts, n-1) quadrature points in [0, 1)
    tent  : apply the baker / tent periodization |2x - 1|

    Returns the (n_pts,) array of log of the per-point conditional products.
    """
    chol = np.asarray(chol, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    pts = np.asarray(pts, dtype=np.float64)
    n = chol.shape[0]
    n_pts = pts.shape[0] if n > 1 else max(pts.shape[0], 1)

    c = np.full(n_pts, ndtr(-hi[0] / chol[0, 0]))
    d = np.full(n_pts, ndtr(hi[0] / chol[0, 0]))
    logprod = np.log(np.maximum(d - c, _P_LO))
    if n == 1:
        return logprod

    y = np.empty((n - 1, n_pts))
    for j in range(1, n):
        x = pts[:, j - 1]
        if tent:
            x = np.abs(2.0 * x - 1.0)
        arg = np.clip(c + x * (d - c), _P_LO, _P_HI)
        y[j - 1] = ndtri(arg)
        s = chol[j, :j] @ y[:j]
        rdiag = chol[j, j]
        c = ndtr((-hi[j] - s) / rdiag)
        d = ndtr((hi[j] - s) / rdiag)
        logprod += np.log(np.maximum(d - c, _P_LO))
    return logprod


def levinson_logdet(r, n):
    """Log-determinant of the n x n symmetric Toeplitz matrix with first row r.

    Uses the Durbin recursion on prediction-error variances:
    ln det = sum_m ln v_m. Returns (logdet, fail_index); fail_index is -1 on
    success, else the step at which a prediction-error variance lost
    positivity (matrix not positive definite).
    """
    r = np.asarray(r, dtype=np.float64)
    if r[0] <= 0.0:
        return 0.0, 0
    v = r[0]
    logdet = np.log(v)
    a = np.empty(n)  # reflection/AR coefficients of the current order
    m_cur = 0
    for m in range(1, n):
        if m == 1:
            k = r[1] / v
        else:
            k = (r[m] - a[:m_cur] @ r[m - 1:0:-1]) / v
        if m_cur:
            # no in-place aliasing: the reversed slice overlaps a[:m_cur]
            a[:m_cur] = a[:m_cur] - k * a[m_cur - 1::-1]
        a[m_cur] = k
        m_cur += 1
        v *= (1.0 - k * k)
        if v <= 0.0 or not np.isfinite(v):
            return logdet, m
        logdet += np.log(v)
    return logdet, -1
