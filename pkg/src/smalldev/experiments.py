"""Preset experiments: each one pits an asymptotic prediction against an
engine measurement and reports PASS/FAIL at its stated tolerance. Shared
by the CLI `reproduce` command and the acceptance test suite."""

import math
from dataclasses import dataclass, field

import numpy as np

from .covariance import CovarianceModel, fgn_autocovariance_exact, \
    partial_sum_covariance
from .engines import (band_probability_mc, band_probability_qmc,
                      transfer_rate)
from .properties import run_suites
from .rates import (DIRAC_EXPECTED, MOGULSKII_CONSTANT, KappaConfig,
                    conditional_variance_bound, dirac_example_check,
                    estimate_kappa, szego_bracket)
from .spectral import (PerturbationSchedule, fgn_measure, iid_measure,
                       perturbed_measure)
from .covariance import autocovariance

PRESETS = ("mogulskii", "szego", "dirac", "transfer", "counterexample",
           "kappa", "fgn-oracle", "exact-variance", "validate")


@dataclass
class ExperimentReport:
    name: str
    passed: bool
    summary: str
    columns: tuple = ()
    rows: list = field(default_factory=list)
    notes: list = field(default_factory=list)


# -- criterion 1 -------------------------------------------------------------

def fgn_oracle_check(tol=1e-6, k_max=64):
    """Spectral-quadrature autocovariance vs the closed difference form."""
    rows, worst = [], 0.0
    for hurst in (0.3, 0.5, 0.7):
        measure = fgn_measure(hurst)
        exact = fgn_autocovariance_exact(hurst, np.arange(k_max + 1))
        for k in range(k_max + 1):
            got = autocovariance(measure, k)
            dev = abs(got - float(exact[k]))
            worst = max(worst, dev)
            if k % 16 == 0:
                rows.append((hurst, k, got, float(exact[k]), dev))
    return ExperimentReport(
        name="fgn-oracle", passed=worst <= tol,
        summary=f"max |quadrature - closed form| = {worst:.2e} (tol {tol})",
        columns=("H", "k", "quadrature", "closed_form", "abs_dev"),
        rows=rows)


# -- criterion 2 -------------------------------------------------------------

def exact_variance_check(tol=1e-8, n_max=512):
    """Partial-sum variances of the long-memory measure are exactly n^{2H}."""
    rows, worst = [], 0.0
    for hurst in (0.3, 0.5, 0.7):
        model = CovarianceModel.from_measure(fgn_measure(hurst), n_max)
        variances = model.partial_sum_variances(n_max)
        target = np.arange(1, n_max + 1) ** (2.0 * hurst)
        dev = float(np.max(np.abs(variances - target)))
        worst = max(worst, dev)
        rows.append((hurst, n_max, dev))
    return ExperimentReport(
        name="exact-variance", passed=worst <= tol,
        summary=f"max |E S_n^2 - n^(2H)| = {worst:.2e} for n<=512 (tol {tol})",
        columns=("H", "n_max", "max_abs_dev"), rows=rows)


# -- criterion 3 -------------------------------------------------------------

def szego_gap(seed=2026, f=0.05, n_ladder=(8, 16, 32), samples=2 ** 14):
    """Two-term very-small-deviation formula vs the QMC engine."""
    measure = iid_measure()
    bracket = szego_bracket(measure)
    model = CovarianceModel.from_measure(measure, n_ladder[-1])
    rows, gaps = [], []
    for n in n_ladder:
        sigma = partial_sum_covariance(model, n)
        res = band_probability_qmc(sigma, f, samples=samples, seed=seed)
        predicted = n * math.log(f) - n * bracket
        gap = abs(res.log_p - predicted) / n
        gaps.append(gap)
        rows.append((n, res.log_p, predicted, gap))
    decreasing = all(gaps[i + 1] < gaps[i] for i in range(len(gaps) - 1))
    small = gaps[-1] < 0.05
    return ExperimentReport(
        name="szego", passed=decreasing and small,
        summary=(f"per-step gaps {['%.2e' % g for g in gaps]}; "
                 f"decreasing={decreasing}, gap(N={n_ladder[-1]})<0.05: "
                 f"{small}"),
        columns=("N", "measured_log_p", "predicted_log_p", "gap_per_step"),
        rows=rows,
        notes=[f"bracket ln pi + (1/4pi) int ln p = {bracket:.6f}"])


# -- criterion 4 -------------------------------------------------------------

def transfer_asymptote(f_grid=(2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0),
                       nodes=200, tolerances=((6.0, 0.05), (10.0, 0.02))):
    """Per-step rate ln lambda_1(f) against the inverse-square asymptote."""
    rows = []
    shifted = []
    for f in f_grid:
        rate = transfer_rate(f, nodes=nodes)
        asym = -MOGULSKII_CONSTANT / (f * f)
        rel = abs(rate.c - asym) / abs(asym)
        rows.append((f, rate.c, asym, rel, rate.err, rate.spectral_gap))
        shifted.append(-rate.c * (f + 0.5826) ** 2)
    checks, fails = [], []
    for f_req, tol in tolerances:
        row = next(r for r in rows if abs(r[0] - f_req) < 1e-9)
        ok = row[3] < tol
        checks.append(ok)
        if not ok:
            fails.append(f"rel gap {row[3]:.3f} at f={f_req} (tol {tol})")
    stable = all(r[4] < 1e-8 for r in rows)
    return ExperimentReport(
        name="transfer", passed=all(checks) and stable,
        summary=("node-doubling stable" if stable else "node instability")
        + ("; " + "; ".join(fails) if fails
           else "; inverse-square tolerances met"),
        columns=("f", "ln_lambda1", "asymptote", "rel_gap", "node_err",
                 "spectral_gap"),
        rows=rows,
        notes=[
            "shifted-width diagnostic |ln lambda1|*(f+0.5826)^2 = "
            + ", ".join(f"{v:.4f}" for v in shifted)
            + f" (target {MOGULSKII_CONSTANT:.4f}); the plain inverse-square "
              "gap decays only like 1.17/f"])


# -- criterion 5 -------------------------------------------------------------

def constant_boundary_check(seed=2026, f=1.0, samples=2 ** 15):
    """Ladder-extrapolated per-step rate vs the kernel eigenvalue, plus the
    conditional-variance upper bound."""
    measure = iid_measure()
    model = CovarianceModel.from_measure(measure, 128)
    logps = {}
    for n in (64, 128):
        sigma = partial_sum_covariance(model, n)
        logps[n] = band_probability_qmc(sigma, f, samples=samples, seed=seed)
    c_extrap = (logps[128].log_p - logps[64].log_p) / 64.0
    rate = transfer_rate(f)
    rel = abs(c_extrap - rate.c) / abs(rate.c)
    bound = conditional_variance_bound(f)
    per_step = logps[128].log_p / 128.0
    slack = 3.0 * logps[128].rel_err / 128.0
    bound_ok = per_step <= bound + slack
    rows = [(n, logps[n].log_p, logps[n].log_p / n, logps[n].rel_err)
            for n in (64, 128)]
    return ExperimentReport(
        name="constant-boundary", passed=(rel < 0.02) and bound_ok,
        summary=(f"extrapolated rate {c_extrap:.6f} vs ln lambda1 "
                 f"{rate.c:.6f} (rel {rel:.4f}, tol 2%); "
                 f"per-step {per_step:.4f} <= ln(2Phi(f)-1) = {bound:.4f}: "
                 f"{bound_ok}"),
        columns=("N", "log_p", "log_p_over_N", "rel_err"), rows=rows)


# -- criterion 6 -------------------------------------------------------------

def dirac_exponents():
    """Fitted (ln f, ln N) exponents for the four atomic reference cases."""
    rows, ok = [], True
    for case in DIRAC_EXPECTED:
        rep = dirac_example_check(case)
        ok = ok and rep.passed
        rows.append((case, rep.exponent_f, rep.exponent_n,
                     rep.expected[0], rep.expected[1], rep.passed))
    return ExperimentReport(
        name="dirac", passed=ok,
        summary="; ".join(f"{r[0]}: ({r[1]:.2f},{r[2]:.2f}) vs {r[3:5]}"
                          for r in rows),
        columns=("case", "exp_f", "exp_n", "want_f", "want_n", "pass"),
        rows=rows)


# -- criterion 7 -------------------------------------------------------------

def mogulskii_trend(seed=2026, rungs=((64, 2_000_000), (256, 90_000_000))):
    """Counting-engine trend of -ln p / (N f^{-2}) toward pi^2/8 for the
    growing boundary f_N = N^{1/4} (trend check only: the full asymptotic
    is not reproducible at desk scale)."""
    measure = iid_measure()
    rows, ratios = [], []
    flagged = False
    for n, samples in rungs:
        f = float(n) ** 0.25
        res = band_probability_mc(measure, n, f, samples=samples, seed=seed,
                                  chunk=2 ** 17, dtype=np.float32)
        ratio = -res.log_p / (n * f ** -2.0)
        ratios.append(ratio)
        flagged = flagged or res.flag != "ok"
        se = res.rel_err / (n * f ** -2.0)
        rows.append((n, f, samples, res.p, res.log_p, ratio, se, res.flag))
    lo, hi = 0.6 * MOGULSKII_CONSTANT, 1.6 * MOGULSKII_CONSTANT
    in_range = all(lo <= r <= hi for r in ratios)
    toward = abs(ratios[-1] - MOGULSKII_CONSTANT) < abs(
        ratios[0] - MOGULSKII_CONSTANT)
    return ExperimentReport(
        name="mogulskii", passed=in_range and toward and not flagged,
        summary=(f"ratios {['%.4f' % r for r in ratios]} in "
                 f"[{lo:.3f},{hi:.3f}]={in_range}, toward pi^2/8="
                 f"{MOGULSKII_CONSTANT:.4f}: {toward}; hit floor ok: "
                 f"{not flagged}"),
        columns=("N", "f", "paths", "p_hat", "log_p", "ratio", "ratio_se",
                 "flag"),
        rows=rows,
        notes=["trend check only; the full asymptotic is out of desk scale"])


# -- criterion 8 -------------------------------------------------------------

def kappa_recovery(config=None):
    target = MOGULSKII_CONSTANT
    est = estimate_kappa(0.5, config or KappaConfig())
    half = 0.5 * (est.ci[1] - est.ci[0])
    contains = est.ci[0] <= target <= est.ci[1]
    return ExperimentReport(
        name="kappa", passed=contains and half < 0.15,
        summary=(f"kappa_hat={est.kappa:.4f} CI=({est.ci[0]:.4f},"
                 f"{est.ci[1]:.4f}); contains pi^2/8={target:.4f}: "
                 f"{contains}; half-width {half:.4f} < 0.15: {half < 0.15}"),
        columns=("f", "n1", "n2", "extrapolated_ratio"),
        rows=[list(r) for r in est.rungs],
        notes=[f"per-seed estimates: "
               f"{[round(float(k), 4) for k in est.per_seed]}"])


# -- criterion 9 -------------------------------------------------------------

def validate_properties(seeds=(11, 12, 13, 14, 15)):
    results = run_suites(seeds)
    ok = all(r.passed for r in results)
    rows = [(r.name, r.seed, r.passed, r.detail) for r in results]
    return ExperimentReport(
        name="validate", passed=ok,
        summary=f"{sum(r.passed for r in results)}/{len(results)} "
                "property checks passed",
        columns=("suite", "seed", "pass", "detail"), rows=rows)


# -- criterion 10 ------------------------------------------------------------

def counterexample_direction(seed=2026, hurst=0.9, beta=0.25,
                             levels=((1.25, 3, 2), (2.1, 10, 128)),
                             samples=2 ** 18, replicates=4):
    """Normalized log-probability ratio of the atomically perturbed measure
    vs the long-memory baseline at the top schedule level; replicated QMC,
    three-combined-error comparison."""
    schedule = PerturbationSchedule(hurst, levels, beta=beta)
    pert = perturbed_measure(schedule)
    base = fgn_measure(hurst)
    n2 = levels[-1][2]
    f2 = schedule.boundary_value(n2)
    scale = n2 * f2 ** (-1.0 / hurst)
    pert_sig = partial_sum_covariance(
        CovarianceModel.from_measure(pert, n2), n2)
    base_sig = partial_sum_covariance(
        CovarianceModel.from_measure(base, n2), n2)
    diffs, rows = [], []
    for i in range(replicates):
        rp = band_probability_qmc(pert_sig, f2, samples=samples,
                                  seed=seed + 10 * i)
        rb = band_probability_qmc(base_sig, f2, samples=samples,
                                  seed=seed + 10 * i + 5)
        diffs.append(rp.log_p - rb.log_p)
        rows.append((i, rp.log_p, rp.rel_err, rb.log_p, rb.rel_err,
                     diffs[-1]))
    diffs = np.array(diffs)
    mean = float(diffs.mean())
    se = float(diffs.std(ddof=1) / math.sqrt(len(diffs)))
    ratio_gain = mean / scale
    ok = mean > 3.0 * se and mean > 0.0
    return ExperimentReport(
        name="counterexample", passed=ok,
        summary=(f"ln p difference (perturbed - fgn) = {mean:+.4f} +- {se:.4f}"
                 f" over {replicates} replicates at (N={n2}, f={f2:.3f}); "
                 f"normalized ratio gain {ratio_gain:+.5f}; "
                 f"3-sigma positive: {ok}"),
        columns=("replicate", "log_p_pert", "rel_err_pert", "log_p_fgn",
                 "rel_err_fgn", "diff"),
        rows=rows,
        notes=["the infinite-limit statement is explicitly not "
               "desk-verifiable; this checks the finite-size direction"])


RUNNERS = {
    "mogulskii": mogulskii_trend,
    "szego": szego_gap,
    "dirac": dirac_exponents,
    "transfer": transfer_asymptote,
    "counterexample": counterexample_direction,
    "kappa": kappa_recovery,
    "fgn-oracle": fgn_oracle_check,
    "exact-variance": exact_variance_check,
    "validate": validate_properties,
}
