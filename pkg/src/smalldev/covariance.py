"""Autocovariances, Toeplitz log-determinants and partial-sum covariances."""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky as _cholesky
from scipy.linalg import toeplitz as _toeplitz

from . import _kernels
from .errors import (HorizonError, QuadratureToleranceError,
                     SingularCovarianceError)
from .quadrature import (integrate_density, integrate_density_cos,
                         integrate_log_density, spectral_grid)
from .spectral import TWO_PI, SpectralMeasure

#: eigenvalues above this (relative) floor are clipped to zero, lower is an error
PSD_CLIP = 1e-10


def fgn_autocovariance_exact(hurst, k):
    """Second difference of |t|^{2H}/2: exact FGN autocovariance."""
    k = np.abs(np.asarray(k, dtype=np.float64))
    h2 = 2.0 * hurst
    return 0.5 * ((k + 1.0) ** h2 - 2.0 * k ** h2 + np.abs(k - 1.0) ** h2)


def _atom_cos_sum(atoms, ks):
    if not atoms:
        return np.zeros(np.shape(ks))
    us = np.array([u for u, _ in atoms])
    ws = np.array([w for _, w in atoms])
    return np.cos(np.multiply.outer(np.asarray(ks, dtype=np.float64), us)) @ ws


def autocovariance(measure, k, tol=1e-8):
    """r(k) by spectral integration: int cos(ku) p(u) du + atom cosine sum.

    This is the quadrature code path; `CovarianceModel.from_measure` holds
    the closed forms it is validated against.
    """
    if k < 0:
        raise ValueError("lag must be nonnegative")
    total, err = 0.0, 0.0
    if measure.has_density:
        for lo, hi in measure.support_pieces():
            expo = measure.density_singular_exponent() if lo == 0.0 else None
            v, e = integrate_density_cos(measure.density_scalar, k, lo, hi,
                                         singular_exponent=expo, tol=tol / 4)
            total += v
            err += e
        total *= 2.0
        err *= 2.0
        if err > tol:
            raise QuadratureToleranceError(tol, err)
    total += float(_atom_cos_sum(measure.atoms, k))
    return total


@dataclass(frozen=True)
class CovarianceModel:
    """Stationary autocovariance sequence r(0..k_max) with its source."""

    autocov: np.ndarray
    label: str = ""
    source: SpectralMeasure = None

    def __post_init__(self):
        r = np.ascontiguousarray(np.asarray(self.autocov, dtype=np.float64))
        object.__setattr__(self, "autocov", r)
        if r[0] <= 0.0:
            raise ValueError("r(0) must be positive")
        if np.any(np.abs(r) > r[0] * (1.0 + 1e-12)):
            raise ValueError("|r(k)| <= r(0) violated")

    @property
    def k_max(self):
        return len(self.autocov) - 1

    @classmethod
    def from_measure(cls, measure, k_max, tol=1e-8):
        """Build r(0..k_max), using closed forms where the family has one."""
        ks = np.arange(k_max + 1)
        atoms_part = _atom_cos_sum(measure.atoms, ks)
        if not measure.has_density:
            r = atoms_part
        elif measure.family == "flat" and not measure.zones:
            r = atoms_part.copy()
            r[0] += measure.scale
        elif measure.family == "fgn" and not measure.zones:
            r = atoms_part + measure.scale * fgn_autocovariance_exact(
                measure.hurst, ks)
        elif measure.family == "fgn" and measure.zone_mode == "exclude":
            # closed form minus the zone integrals on a shared spectral grid
            r = atoms_part + measure.scale * fgn_autocovariance_exact(
                measure.hurst, ks)
            full = SpectralMeasure(family="fgn", hurst=measure.hurst,
                                   trunc=measure.trunc, scale=measure.scale)
            x, w = spectral_grid(full.density, list(measure.zones), k_max,
                                 singular_exponent=full.density_singular_exponent())
            r -= 2.0 * _grid_cos(ks, x, w)
        else:
            base = measure.density_part()
            x, w = spectral_grid(
                base.density, base.support_pieces(), k_max,
                singular_exponent=base.density_singular_exponent())
            r = atoms_part + 2.0 * _grid_cos(ks, x, w)
        return cls(r, label=measure.label, source=measure)

    def toeplitz(self, n):
        if n > self.k_max + 1:
            raise HorizonError(
                f"autocovariance horizon too short: need r(0..{n - 1}), "
                f"have r(0..{self.k_max})")
        return _toeplitz(self.autocov[:n])

    def partial_sum_variances(self, n):
        """E|S_m|^2 for m = 1..n via cumulative sums of r."""
        if n > self.k_max + 1:
            raise HorizonError(
                f"autocovariance horizon too short: need r(0..{n - 1}), "
                f"have r(0..{self.k_max})")
        r = self.autocov[:n]
        # E|S_m|^2 = m r0 + 2 sum_{k=1}^{m-1} (m-k) r(k)
        csum = np.cumsum(r[1:])
        cwsum = np.cumsum(np.arange(1, n) * r[1:])
        m = np.arange(1, n + 1, dtype=np.float64)
        out = m * r[0]
        out[1:] += 2.0 * (m[1:] * csum[:n - 1] - cwsum[:n - 1])
        return out


def _grid_cos(ks, x, w, chunk=512):
    out = np.empty(len(ks))
    for i in range(0, len(ks), chunk):
        kk = ks[i:i + chunk]
        out[i:i + chunk] = np.cos(np.multiply.outer(
            kk.astype(np.float64), x)) @ w
    return out


@dataclass(frozen=True)
class PartialSumCovariance:
    """Covariance matrix of the partial sums S_1..S_n."""

    matrix: np.ndarray
    n: int

    @property
    def variances(self):
        return np.diag(self.matrix)


def partial_sum_covariance(model, n):
    """Sigma[i,j] = E S_{i+1} S_{j+1} = double cumulative sum of r(a-b)."""
    toe = model.toeplitz(n)
    sig = np.cumsum(np.cumsum(toe, axis=0), axis=1)
    sig = 0.5 * (sig + sig.T)
    return PartialSumCovariance(sig, n)


def toeplitz_logdet(model, n, method="levinson"):
    """ln det of the n x n Toeplitz covariance.

    method "levinson" runs the O(n^2) prediction-error recursion (compiled
    kernel when available); "cholesky" factorizes the dense matrix. Both
    agree to 1e-8 relative and raise on loss of positive definiteness.
    """
    if method == "levinson":
        if n > model.k_max + 1:
            raise HorizonError(
                f"autocovariance horizon too short: need r(0..{n - 1}), "
                f"have r(0..{model.k_max})")
        logdet, fail = _kernels.levinson_logdet(model.autocov, n)
        if fail >= 0:
            raise SingularCovarianceError(
                f"prediction-error variance lost positivity at step {fail}")
        return float(logdet)
    if method == "cholesky":
        toe = model.toeplitz(n)
        try:
            chol = _cholesky(toe, lower=True)
        except np.linalg.LinAlgError as exc:
            raise SingularCovarianceError(str(exc)) from exc
        return float(2.0 * np.sum(np.log(np.diag(chol))))
    raise ValueError(f"unknown method {method!r}")


def szego_logdet_limit(measure, tol=1e-9):
    """(1/2pi) int ln(2 pi p(u)) du, the per-step log-determinant limit.

    Requires an almost-everywhere positive density; raises otherwise via a
    divergent value check in the caller (`rates.szego_rate` wraps this with
    the structural Kolmogorov test).
    """
    total = 0.0
    for lo, hi in measure.support_pieces():
        expo = measure.singular_exponent() if lo == 0.0 else None
        total += integrate_log_density(measure.density_scalar, lo, hi,
                                       singular_exponent=expo, tol=tol)
    # both half-axes, then normalize
    return math.log(TWO_PI) + 2.0 * total / TWO_PI


def variance_ratio_diagnostic(model, hurst, ell, grid):
    """Ratios E|S_n|^2 / (n^{2H} l(1/n)) on the given n grid."""
    grid = sorted(int(n) for n in grid)
    variances = model.partial_sum_variances(grid[-1])
    out = []
    for n in grid:
        norm = float(n) ** (2.0 * hurst) * ell(1.0 / n)
        out.append((n, float(variances[n - 1] / norm)))
    return out


def repaired_cholesky(matrix, clip=PSD_CLIP):
    """Cholesky factor with the near-PSD repair policy.

    Eigenvalues in [-clip * max_eig, 0) are clipped to zero (quadrature
    noise), anything lower raises; the clipped matrix gets a tiny diagonal
    ridge so the factorization exists.
    """
    try:
        return np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        pass
    eigvals, eigvecs = np.linalg.eigh(matrix)
    top = float(eigvals[-1])
    if top <= 0.0:
        raise SingularCovarianceError("matrix has no positive eigenvalue")
    if eigvals[0] < -clip * top:
        raise SingularCovarianceError(
            f"eigenvalue {eigvals[0]:.3e} below repair threshold "
            f"{-clip * top:.3e}")
    warnings.warn("clipping tiny negative covariance eigenvalues",
                  stacklevel=2)
    clipped = (eigvecs * np.clip(eigvals, 0.0, None)) @ eigvecs.T
    ridge = clip * top
    return np.linalg.cholesky(clipped + ridge * np.eye(len(matrix)))
