"""Singularity-aware quadrature helpers for spectral densities.

All routines work on the positive half-axis [0, pi] and exploit the
symmetry of spectral measures. Densities with an integrable |u|^(1-2H)
singularity at the origin (long-memory case H > 1/2) are regularized by
the substitution u = s^(1/(2-2H)), which turns the singular factor into a
constant and leaves a smooth integrand for Gauss-Kronrod rules.
"""

import math

import numpy as np
from scipy.integrate import quad

from .errors import QuadratureToleranceError

#: below this k the plain weighted rule beats the oscillatory (QAWO) one
_OSC_SWITCH = 8


def _substituted(density, power):
    """Return g(s) = density(s**power) * power * s**(power-1)."""

    def g(s):
        if s <= 0.0:
            return 0.0
        u = s ** power
        return density(u) * power * s ** (power - 1.0)

    return g


def integrate_density(density, a, b, *, singular_exponent=None, tol=1e-10):
    """Integral of `density` over [a, b] in [0, pi]; returns (value, err)."""
    if b <= a:
        return 0.0, 0.0
    total, err = 0.0, 0.0
    if a == 0.0 and singular_exponent is not None and singular_exponent < 0.0:
        # u^(sing) with sing = 1-2H in (-1, 0): substitute u = s^power
        power = 1.0 / (1.0 + singular_exponent)
        cut = min(b, 0.5)
        v, e = quad(_substituted(density, power), 0.0, cut ** (1.0 / power),
                    epsabs=tol, epsrel=tol, limit=200)
        total += v
        err += e
        a = cut
    if b > a:
        v, e = quad(density, a, b, epsabs=tol, epsrel=tol, limit=200)
        total += v
        err += e
    return total, err


def integrate_density_cos(density, k, a, b, *, singular_exponent=None,
                          tol=1e-9):
    """Integral of density(u) * cos(k u) over [a, b]; returns (value, err)."""
    if b <= a:
        return 0.0, 0.0
    k = int(k)
    if k == 0:
        return integrate_density(density, a, b,
                                 singular_exponent=singular_exponent, tol=tol)
    total, err = 0.0, 0.0
    if a == 0.0 and singular_exponent is not None and singular_exponent < 0.0:
        power = 1.0 / (1.0 + singular_exponent)
        # keep the substituted piece under one cosine period
        cut = min(b, 1.0 / k, 0.5)
        g = _substituted(density, power)
        v, e = quad(lambda s: g(s) * math.cos(k * s ** power),
                    0.0, cut ** (1.0 / power), epsabs=tol, epsrel=tol,
                    limit=200)
        total += v
        err += e
        a = cut
    if b > a:
        if k >= _OSC_SWITCH:
            v, e = quad(density, a, b, weight="cos", wvar=k,
                        epsabs=tol, epsrel=tol, limit=max(100, 4 * k))
        else:
            v, e = quad(lambda u: density(u) * math.cos(k * u), a, b,
                        epsabs=tol, epsrel=tol, limit=200)
        total += v
        err += e
    return total, err


def integrate_log_density(density, a, b, *, singular_exponent=None,
                          tol=1e-9):
    """Integral of ln density over [a, b] with the origin log-singularity
    removed analytically when `singular_exponent` is given:
    ln p = sing*ln u + ln(p * u^(-sing)), and int_0^d ln u du = d(ln d - 1).
    """
    if b <= a:
        return 0.0
    total = 0.0
    if a == 0.0 and singular_exponent is not None and singular_exponent != 0.0:
        cut = min(b, 0.25)
        sing = singular_exponent

        def regular_part(u):
            return math.log(density(u) * u ** (-sing))

        v, _ = quad(regular_part, 0.0, cut, epsabs=tol, epsrel=tol, limit=200)
        total += v + sing * cut * (math.log(cut) - 1.0)
        a = cut
    if b > a:
        v, _ = quad(lambda u: math.log(density(u)), a, b,
                    epsabs=tol, epsrel=tol, limit=200)
        total += v
    return total


def gauss_panels(a, b, panels, order=12):
    """Composite Gauss-Legendre nodes/weights on [a, b]."""
    x0, w0 = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    x = (mid[:, None] + half[:, None] * x0[None, :]).ravel()
    w = (half[:, None] * np.broadcast_to(w0, (panels, x0.size))).ravel()
    return x, w


def spectral_grid(density_vec, pieces, k_max, *, singular_exponent=None,
                  order=12, phase_per_panel=2.5):
    """Nodes/weights resolving cos(k u) up to k_max on a union of pieces.

    density_vec must accept an ndarray of positive frequencies. Pieces are
    disjoint (lo, hi) intervals of [0, pi]; a piece starting at 0 with a
    singular density is handled by the power substitution. Returns (x, w)
    with w already containing the density values, i.e.
    sum w_i cos(k x_i) ~ int density(u) cos(ku) du over the pieces.
    """
    xs, ws = [], []
    for lo, hi in pieces:
        if hi <= lo:
            continue
        if lo == 0.0 and singular_exponent is not None and singular_exponent < 0.0:
            power = 1.0 / (1.0 + singular_exponent)
            cut = min(hi, 0.5)
            s_hi = cut ** (1.0 / power)
            panels = max(8, int(math.ceil(k_max * cut / (2.0 * math.pi))))
            s, w = gauss_panels(0.0, s_hi, panels, order)
            u = s ** power
            xs.append(u)
            ws.append(w * density_vec(u) * power * s ** (power - 1.0))
            lo = cut
        if hi > lo:
            panels = max(4, int(math.ceil(k_max * (hi - lo) / phase_per_panel)))
            u, w = gauss_panels(lo, hi, panels, order)
            xs.append(u)
            ws.append(w * density_vec(u))
    if not xs:
        return np.empty(0), np.empty(0)
    return np.concatenate(xs), np.concatenate(ws)


def require_tolerance(err, tol):
    """Raise the contract error when an achieved error misses `tol`."""
    if err > tol:
        raise QuadratureToleranceError(tol, err)
