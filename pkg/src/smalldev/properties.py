"""Statistical invariant suites: correlation inequality, monotonicity under
added components, log-concavity, bound sandwich, sampler agreement.

Each suite returns a PropertyResult; the CLI `validate` command and the
acceptance tests both run them across seeds.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import ks_2samp

from .covariance import CovarianceModel, partial_sum_covariance
from .engines import band_probability_qmc, rectangle_probability_qmc
from .rates import regularized_lower_bound, volumetric_upper_bound
from .sampler import make_rng, sample_cholesky, sample_circulant
from .spectral import atomic_measure, fgn_measure, iid_measure

QMC_KW = dict(samples=2 ** 13, randomizations=16)


@dataclass(frozen=True)
class PropertyResult:
    name: str
    seed: int
    passed: bool
    detail: str


def _random_measure(rng):
    """A random mixed measure with a flat part and a few symmetric atoms."""
    flat = float(rng.uniform(0.3, 1.0))
    atoms = []
    for _ in range(int(rng.integers(1, 4))):
        u = float(rng.uniform(0.15, math.pi - 0.15))
        w = float(rng.uniform(0.05, 0.4))
        atoms.append((u, w))
    return iid_measure(flat), atoms


def correlation_inequality(seed):
    """P(both index sets constrained) >= product of the marginals, within
    3 combined replicate errors: symmetric convex sets under a centered
    Gaussian vector."""
    rng = make_rng(seed, 11)
    flat_measure, atoms = _random_measure(rng)
    measure = atomic_measure(atoms, label="mix")
    model_r = (CovarianceModel.from_measure(flat_measure, 8).autocov
               + CovarianceModel.from_measure(measure, 8).autocov)
    model = CovarianceModel(model_r, label="random-mix")
    n = int(rng.integers(4, 7))
    sigma = partial_sum_covariance(model, n).matrix

    idx = np.arange(n)
    set_a = idx[rng.random(n) < 0.6]
    set_b = idx[rng.random(n) < 0.6]
    if len(set_a) == 0:
        set_a = idx[:1]
    if len(set_b) == 0:
        set_b = idx[-1:]
    scale = math.sqrt(float(np.max(np.diag(sigma))))
    eps_a = float(rng.uniform(0.7, 1.6)) * scale
    eps_b = float(rng.uniform(0.7, 1.6)) * scale

    wide = 1e6 * scale
    w_a = np.full(n, wide)
    w_a[set_a] = eps_a
    w_b = np.full(n, wide)
    w_b[set_b] = eps_b
    w_ab = np.minimum(w_a, w_b)

    _, p_a, e_a, _ = rectangle_probability_qmc(sigma, w_a, seed=seed, **QMC_KW)
    _, p_b, e_b, _ = rectangle_probability_qmc(sigma, w_b, seed=seed + 1,
                                               **QMC_KW)
    _, p_ab, e_ab, _ = rectangle_probability_qmc(sigma, w_ab, seed=seed + 2,
                                                 **QMC_KW)
    margin = 3.0 * math.sqrt(e_ab ** 2 + (p_b * e_a) ** 2 + (p_a * e_b) ** 2)
    ok = p_ab >= p_a * p_b - margin
    return PropertyResult(
        "correlation-inequality", seed, bool(ok),
        f"p(A1&A2)={p_ab:.6f} vs p(A1)p(A2)={p_a * p_b:.6f} margin={margin:.2e}")


def anderson_monotonicity(seed):
    """Adding an independent spectral component can only shrink the band
    probability (exact inequality, tested within 3 combined errors)."""
    rng = make_rng(seed, 12)
    n = 8
    f = float(rng.uniform(0.8, 1.6))
    base = iid_measure(0.7)
    extra = atomic_measure([(float(rng.uniform(0.3, 2.8)), 0.15)])
    r_base = CovarianceModel.from_measure(base, n).autocov
    r_sum = r_base + CovarianceModel.from_measure(extra, n).autocov

    sig_base = partial_sum_covariance(CovarianceModel(r_base), n)
    sig_sum = partial_sum_covariance(CovarianceModel(r_sum), n)
    res_base = band_probability_qmc(sig_base, f, seed=seed, **QMC_KW)
    res_sum = band_probability_qmc(sig_sum, f, seed=seed + 1, **QMC_KW)
    margin = 3.0 * math.hypot(res_base.err, res_sum.err)
    ok = res_sum.p <= res_base.p + margin
    return PropertyResult(
        "anderson-monotonicity", seed, bool(ok),
        f"p(mu'+nu)={res_sum.p:.6f} <= p(mu')={res_base.p:.6f} + {margin:.2e}")


def log_concavity(seed):
    """ln p(f) is concave in f: midpoint above the chord, within errors."""
    rng = make_rng(seed, 13)
    n = 8
    f_mid = float(rng.uniform(0.9, 1.3))
    step = float(rng.uniform(0.15, 0.3))
    model = CovarianceModel.from_measure(iid_measure(), n)
    sigma = partial_sum_covariance(model, n)
    vals = []
    for i, f in enumerate((f_mid - step, f_mid, f_mid + step)):
        res = band_probability_qmc(sigma, f, seed=seed + i, **QMC_KW)
        vals.append(res)
    chord = 0.5 * (vals[0].log_p + vals[2].log_p)
    margin = 3.0 * math.sqrt(vals[1].rel_err ** 2
                             + 0.25 * vals[0].rel_err ** 2
                             + 0.25 * vals[2].rel_err ** 2)
    ok = vals[1].log_p >= chord - margin
    return PropertyResult(
        "log-concavity", seed, bool(ok),
        f"ln p(mid)={vals[1].log_p:.5f} >= chord {chord:.5f} - {margin:.2e}")


def bound_sandwich(seed):
    """Regularized lower bound <= engine ln p <= volumetric upper bound."""
    rng = make_rng(seed, 14)
    checks = []
    for measure in (iid_measure(), fgn_measure(0.7)):
        n = int(rng.integers(8, 65))
        f = float(rng.uniform(0.3, 1.0))
        model = CovarianceModel.from_measure(measure, n)
        sigma = partial_sum_covariance(model, n)
        res = band_probability_qmc(sigma, f, seed=seed, **QMC_KW)
        upper = volumetric_upper_bound(model, n, f)
        lower = regularized_lower_bound(model, n, f)
        slack = 3.0 * res.rel_err
        checks.append(lower - slack <= res.log_p <= upper + slack)
    ok = all(checks)
    return PropertyResult("bound-sandwich", seed, bool(ok),
                          f"lower<=lnp<=upper for iid/fgn: {checks}")


def sampler_agreement(seed):
    """Circulant and Cholesky samplers produce the same max-statistic law
    (two-sample Kolmogorov-Smirnov at the 1e-3 level)."""
    n, count = 64, 3000
    model = CovarianceModel.from_measure(fgn_measure(0.7), 64)
    a = sample_circulant(model, n, count, seed)
    b = sample_cholesky(model, n, count, seed + 1)
    stat = ks_2samp(a.max_abs(), b.max_abs())
    ok = stat.pvalue >= 1e-3
    return PropertyResult("sampler-agreement", seed, bool(ok),
                          f"KS stat={stat.statistic:.4f} p={stat.pvalue:.4f}")


ALL_SUITES = (correlation_inequality, anderson_monotonicity, log_concavity,
              bound_sandwich, sampler_agreement)


def run_suites(seeds=(11, 12, 13, 14, 15), suites=ALL_SUITES):
    results = []
    for suite in suites:
        for seed in seeds:
            results.append(suite(seed))
    return results
