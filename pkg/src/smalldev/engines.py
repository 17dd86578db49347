"""Three independent routes to the band probability
P{ max_{1<=m<=n} |S_m| <= f }: randomized-lattice sequential conditioning,
direct Monte Carlo counting, and (for i.i.d. steps) the spectrum of the
Gaussian kernel operator on [-f, f]. Purely atomic measures get exact
low-dimensional reductions.
"""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh
from scipy.special import logsumexp, ndtr
from scipy.stats import qmc as _sobol

from . import _kernels
from .covariance import CovarianceModel, partial_sum_covariance
from .errors import DegenerateCovarianceError, SmallDevError
from .lattice import cbc_lattice
from .sampler import (STREAM_QMC, iter_step_chunks, make_rng,
                      make_spawnable_rng)

LOG_P_FLOOR = -745.0  # exp underflows below this; log_p stays exact


@dataclass(frozen=True)
class BandProbability:
    """A log-probability with its error estimate and provenance."""

    log_p: float
    p: float
    err: float          # standard error of p (0 when p underflows)
    rel_err: float      # standard error relative to p, valid in log domain
    method: str
    n: int
    f: float
    seed: int = 0
    flag: str = "ok"    # "ok" | "low-hits" | "upper-bound"

    def to_payload(self):
        return {"method": self.method, "N": self.n, "f": self.f,
                "log_p": self.log_p, "p": self.p, "err": self.err,
                "rel_err": self.rel_err, "seed": self.seed,
                "flag": self.flag}


def _combine(value_a, err_a, value_b, err_b):
    return abs(value_a - value_b), math.hypot(err_a, err_b)


def agree_within(a, b, sigmas=3.0):
    """Two BandProbability estimates consistent on the p scale."""
    gap, err = _combine(a.p, a.err, b.p, b.err)
    return gap <= sigmas * max(err, 1e-300)


# ---------------------------------------------------------------------------
# Randomized lattice rule with sequential conditioning
# ---------------------------------------------------------------------------

def rectangle_probability_qmc(sigma_matrix, half_widths, samples=2 ** 14,
                              randomizations=16, seed=0, threads=1,
                              point_set="sobol"):
    """P{ |X_i| <= half_widths[i] for all i } for X ~ N(0, sigma_matrix).

    Sequential conditioning in natural index order over a randomized QMC
    point set: Owen-scrambled Sobol (default) or a randomly shifted rank-1
    lattice with tent periodization. The estimate averages the independent
    randomizations and the error is their standard error. Accumulation
    happens in the log domain so astronomically small probabilities stay
    meaningful.
    """
    sigma_matrix = np.asarray(sigma_matrix, dtype=np.float64)
    n = sigma_matrix.shape[0]
    half_widths = np.broadcast_to(
        np.asarray(half_widths, dtype=np.float64), (n,)).copy()
    try:
        chol = np.linalg.cholesky(sigma_matrix)
    except np.linalg.LinAlgError as exc:
        raise DegenerateCovarianceError(str(exc)) from exc
    if n == 1:
        p = float(ndtr(half_widths[0] / chol[0, 0])
                  - ndtr(-half_widths[0] / chol[0, 0]))
        logp = math.log(p) if p > 0.0 else LOG_P_FLOOR
        return logp, p, 1e-16, 1e-16
    chol = np.ascontiguousarray(chol)

    if point_set == "lattice":
        gen, n_pts = cbc_lattice(n - 1, max(samples // randomizations, 3))
        base = (np.outer(np.arange(1, n_pts + 1),
                         np.asarray(gen, dtype=np.float64)) / n_pts) % 1.0
        shifts = make_rng(seed, STREAM_QMC).random((randomizations, n - 1))

        def one_replicate(index):
            pts = np.ascontiguousarray((base + shifts[index][None, :]) % 1.0)
            logs = _kernels.qmc_logprods(chol, half_widths, pts, True)
            return float(logsumexp(logs) - math.log(len(pts)))
    elif point_set == "sobol":
        n_pts = 1 << max(int(samples // randomizations).bit_length() - 1, 2)

        def one_replicate(index):
            eng = _sobol.Sobol(d=n - 1, scramble=True,
                               seed=make_spawnable_rng(seed, STREAM_QMC,
                                                       index))
            pts = np.ascontiguousarray(eng.random(n_pts))
            logs = _kernels.qmc_logprods(chol, half_widths, pts, False)
            return float(logsumexp(logs) - math.log(len(pts)))
    else:
        raise ValueError(f"unknown point set {point_set!r}")

    indices = range(randomizations)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            shift_logs = list(pool.map(one_replicate, indices))
    else:
        shift_logs = [one_replicate(i) for i in indices]
    shift_logs = np.array(shift_logs)

    log_p = float(logsumexp(shift_logs) - math.log(randomizations))
    scaled = np.exp(shift_logs - shift_logs.max())
    rel = float(np.std(scaled, ddof=1) / scaled.mean()
                / math.sqrt(randomizations))
    p = math.exp(log_p) if log_p > LOG_P_FLOOR else 0.0
    return log_p, p, rel * p, rel


def band_probability_qmc(sigma, f, samples=2 ** 14, randomizations=16,
                         seed=0, threads=1, point_set="sobol"):
    """Band probability from a PartialSumCovariance via randomized QMC."""
    log_p, p, err, rel = rectangle_probability_qmc(
        sigma.matrix, float(f), samples=samples,
        randomizations=randomizations, seed=seed, threads=threads,
        point_set=point_set)
    return BandProbability(log_p, p, err, rel, "qmc", sigma.n, float(f),
                           seed=seed)


# ---------------------------------------------------------------------------
# Monte Carlo counting
# ---------------------------------------------------------------------------

def band_probability_mc(measure, n, f, samples=10 ** 5, seed=0,
                        chunk=65536, dtype=np.float64):
    """Direct counting of paths staying inside the band.

    When fewer than 25 hits are observed the estimate is flagged; with zero
    hits only the rule-of-three upper confidence bound is returned.
    """
    hits = 0
    for steps in iter_step_chunks(measure, n, samples, seed, chunk=chunk,
                                  dtype=dtype):
        np.cumsum(steps, axis=1, out=steps)
        np.abs(steps, out=steps)
        hits += int(np.count_nonzero(steps.max(axis=1) <= f))
    if hits == 0:
        p_bound = 3.0 / samples
        return BandProbability(math.log(p_bound), p_bound, p_bound, 1.0,
                               "mc", n, float(f), seed=seed,
                               flag="upper-bound")
    p = hits / samples
    err = math.sqrt(p * (1.0 - p) / samples)
    flag = "ok" if hits >= 25 else "low-hits"
    return BandProbability(math.log(p), p, err, err / p, "mc", n, float(f),
                           seed=seed, flag=flag)


# ---------------------------------------------------------------------------
# Gaussian kernel operator on [-f, f] (i.i.d. steps)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransferRate:
    """Per-step decay rate of the constant-band probability, i.i.d. case."""

    f: float
    c: float          # ln lambda_1, the limit of (1/n) ln p
    lambda1: float
    nodes: int
    err: float        # |ln lambda_1(nodes) - ln lambda_1(2 nodes)|
    spectral_gap: float  # lambda_2 / lambda_1, convergence diagnostic


def _kernel_top_eigs(f, nodes):
    x, w = np.polynomial.legendre.leggauss(nodes)
    x = x * f
    w = w * f
    sw = np.sqrt(w)
    kern = (sw[:, None]
            * np.exp(-0.5 * (x[:, None] - x[None, :]) ** 2)
            / math.sqrt(2.0 * math.pi) * sw[None, :])
    vals = eigh(kern, eigvals_only=True)
    return float(vals[-1]), float(vals[-2])

def transfer_rate(f, nodes=200):
    """Largest eigenvalue of g -> int_{-f}^f phi(x-y) g(y) dy.

    Symmetrized Gauss-Legendre discretization; the reported error is the
    change of ln lambda_1 under node doubling.
    """
    if f <= 0.0:
        raise ValueError("band half-width must be positive")
    if nodes < 16:
        raise ValueError("need at least 16 quadrature nodes")
    l1, l2 = _kernel_top_eigs(f, nodes)
    l1d, _ = _kernel_top_eigs(f, 2 * nodes)
    if not 0.0 < l1 < 1.0:
        raise SmallDevError(f"top eigenvalue {l1} outside (0,1)")
    return TransferRate(f=float(f), c=math.log(l1), lambda1=l1, nodes=nodes,
                        err=abs(math.log(l1) - math.log(l1d)),
                        spectral_gap=l2 / l1)


def iid_band_probability_operator(f, n, nodes=400):
    """Numerically exact i.i.d. band log-probability by operator iteration.

    P = int phi(x) u_{n-1}(x) dx with u_0 = 1 and u_{m+1} = K u_m on
    Gauss-Legendre nodes; used as a cross-engine oracle.
    """
    x, w = np.polynomial.legendre.leggauss(nodes)
    x = x * f
    w = w * f
    phi = np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    kern = np.exp(-0.5 * (x[:, None] - x[None, :]) ** 2) \
        / math.sqrt(2.0 * math.pi) * w[None, :]
    u = np.ones(nodes)
    log_scale = 0.0
    for _ in range(n - 1):
        u = kern @ u
        peak = u.max()
        u /= peak
        log_scale += math.log(peak)
    return float(np.log(np.sum(w * phi * u)) + log_scale)


# ---------------------------------------------------------------------------
# Exact reductions for purely atomic measures
# ---------------------------------------------------------------------------

def _atomic_coefficient_matrix(measure, n):
    """Rows m=1..n of coefficients over the independent atom coordinates."""
    cols = []
    j = np.arange(1, n + 1, dtype=np.float64)
    pos = sorted({abs(u) for u, _ in measure.atoms
                  if abs(u) not in (0.0, math.pi)})
    for u, w in measure.atoms:
        if u == 0.0:
            cols.append(math.sqrt(w) * j)
        elif u == -math.pi:
            cols.append(math.sqrt(w)
                        * np.cumsum(np.where(np.arange(1, n + 1) % 2 == 1,
                                             -1.0, 1.0)))
    for u in pos:
        w = next(wt for uu, wt in measure.atoms if abs(uu) == u)
        amp = math.sqrt(2.0 * w)
        cols.append(amp * np.cumsum(np.cos(j * u)))
        cols.append(amp * np.cumsum(np.sin(j * u)))
    return np.column_stack(cols)


def _interval_probability(lead, rest, shift_rows, f):
    """P-interval of the lead coordinate given outer values.

    shift_rows: (points, n) contributions of the outer coordinates. Returns
    ndtr(hi) - ndtr(lo) clipped at zero, per point.
    """
    n = len(lead)
    n_pts = shift_rows.shape[0]
    nonzero = np.abs(lead) > 1e-12
    lo = np.full(n_pts, -np.inf)
    hi = np.full(n_pts, np.inf)
    for m in range(n):
        if nonzero[m]:
            left = (-f - shift_rows[:, m]) / lead[m]
            right = (f - shift_rows[:, m]) / lead[m]
            lo = np.maximum(lo, np.minimum(left, right))
            hi = np.minimum(hi, np.maximum(left, right))
        else:
            lo = np.where(np.abs(shift_rows[:, m]) <= f, lo, np.inf)
    return np.clip(ndtr(hi) - ndtr(lo), 0.0, None)


def band_probability_atomic(measure, n, f):
    """Exact band probability for purely atomic measures (<= 4 coordinates).

    Writes S_m = sum_c A[m, c] Z_c with independent standard normal Z; the
    coordinate with the largest coefficient is integrated analytically and
    the remaining ones by quadrature over the (bounded) feasible region.
    """
    if not measure.is_purely_atomic:
        raise DegenerateCovarianceError("measure has a density component")
    a_mat = _atomic_coefficient_matrix(measure, n)
    # drop numerically null coordinates (e.g. sine column of a pure cosine)
    live = np.linalg.norm(a_mat, axis=0) > 1e-12 * np.linalg.norm(a_mat)
    a_mat = a_mat[:, live]
    m_dim = a_mat.shape[1]
    if m_dim > 4:
        raise DegenerateCovarianceError(
            f"atomic reduction supports up to 4 coordinates, got {m_dim}")

    lead_idx = int(np.argmax(np.abs(a_mat).max(axis=0)))
    lead = a_mat[:, lead_idx]
    rest = np.delete(a_mat, lead_idx, axis=1)
    if m_dim == 1:
        width = f / np.abs(lead[np.abs(lead) > 1e-12]).max()
        p = float(2.0 * ndtr(width) - 1.0)
        return BandProbability(math.log(p) if p > 0 else LOG_P_FLOOR, p,
                               1e-15, 1e-15, "atomic-exact", n, float(f))

    # feasible z is contained in |z_c| <= f * ||row_c of pinv(A)||_1
    pinv_rows = np.abs(np.linalg.pinv(a_mat)).sum(axis=1)
    radii = np.minimum(12.0, 1.05 * f * np.delete(pinv_rows, lead_idx))

    if m_dim == 2:
        from scipy.integrate import quad as _quad
        radius = float(radii[0])
        col = rest[:, 0]

        def integrand(z):
            row = (z * col)[None, :]
            inner = _interval_probability(lead, rest, row, f)
            return float(inner[0]) * math.exp(-0.5 * z * z) \
                / math.sqrt(2.0 * math.pi)

        p, _ = _quad(integrand, -radius, radius, limit=200,
                     epsabs=1e-12, epsrel=1e-10)
        err = 1e-10
    else:
        order = 48
        x0, w0 = np.polynomial.legendre.leggauss(order)
        axes = [(x0 * r, w0 * r) for r in radii]
        grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
        zs = np.stack([g.ravel() for g in grids], axis=1)
        wgrids = np.meshgrid(*[a[1] for a in axes], indexing="ij")
        wts = np.ones(len(zs))
        for g in wgrids:
            wts *= g.ravel()
        dens = np.exp(-0.5 * (zs ** 2).sum(axis=1)) \
            / (2.0 * math.pi) ** ((m_dim - 1) / 2.0)
        inner = _interval_probability(lead, rest, zs @ rest.T, f)
        p = float(np.sum(wts * dens * inner))
        err = 1e-6 * max(p, 1e-300)

    p = min(max(p, 0.0), 1.0)
    logp = math.log(p) if p > 0.0 else LOG_P_FLOOR
    return BandProbability(logp, p, err, err / max(p, 1e-300),
                           "atomic-exact", n, float(f))


# ---------------------------------------------------------------------------
# Measure-level convenience front end
# ---------------------------------------------------------------------------

def band_probability(measure, n, f, method="qmc", seed=0, samples=None,
                     randomizations=16, threads=1, model=None):
    """Dispatch a band probability computation for a spectral measure."""
    start = time.perf_counter()
    if method == "qmc":
        if measure.is_purely_atomic:
            result = band_probability_atomic(measure, n, f)
        else:
            if model is None:
                model = CovarianceModel.from_measure(measure, n)
            sigma = partial_sum_covariance(model, n)
            result = band_probability_qmc(
                sigma, f, samples=samples or 2 ** 14,
                randomizations=randomizations, seed=seed, threads=threads)
    elif method == "mc":
        result = band_probability_mc(measure, n, f,
                                     samples=samples or 10 ** 5, seed=seed)
    elif method == "atomic":
        result = band_probability_atomic(measure, n, f)
    else:
        raise ValueError(f"unknown engine {method!r}")
    elapsed = (time.perf_counter() - start) * 1000.0
    object.__setattr__(result, "_wall_time_ms", elapsed)
    return result
