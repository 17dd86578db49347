import math

import numpy as np
import pytest
from scipy.special import ndtr

from smalldev.covariance import CovarianceModel, partial_sum_covariance
from smalldev.engines import (agree_within, band_probability,
                              band_probability_atomic, band_probability_mc,
                              band_probability_qmc,
                              iid_band_probability_operator,
                              rectangle_probability_qmc, transfer_rate)
from smalldev.errors import DegenerateCovarianceError
from smalldev.spectral import dirac_measure, fgn_measure, iid_measure

# frozen before the build: 1-d quadrature of phi(x)(Phi(1-x)-Phi(-1-x))
IID_N2_F1 = 0.4222038590716851


@pytest.fixture(scope="module")
def iid_sigma_16(iid_model):
    return partial_sum_covariance(iid_model, 16)


class TestQmcEngine:
    def test_one_dimensional_closed_form(self, iid_model):
        sigma = partial_sum_covariance(iid_model, 1)
        res = band_probability_qmc(sigma, 1.0, seed=0)
        assert res.p == pytest.approx(2.0 * ndtr(1.0) - 1.0, abs=1e-12)

    def test_two_step_quadrature_oracle(self, iid_model):
        sigma = partial_sum_covariance(iid_model, 2)
        res = band_probability_qmc(sigma, 1.0, samples=2 ** 14, seed=1)
        assert res.p == pytest.approx(IID_N2_F1, abs=3e-6)

    def test_matches_operator_oracle_moderate(self, iid_model):
        sigma = partial_sum_covariance(iid_model, 32)
        res = band_probability_qmc(sigma, 2.0, samples=2 ** 14, seed=2)
        exact = iid_band_probability_operator(2.0, 32)
        assert res.log_p == pytest.approx(exact, abs=4.0 * res.rel_err)

    def test_deep_tail_stays_in_log_domain(self, iid_model):
        sigma = partial_sum_covariance(iid_model, 32)
        res = band_probability_qmc(sigma, 0.05, samples=2 ** 13, seed=3)
        exact = iid_band_probability_operator(0.05, 32)
        assert res.log_p == pytest.approx(exact, abs=1e-4)
        assert res.log_p < -100.0
        assert res.p == pytest.approx(math.exp(res.log_p))

    def test_reproducible_under_seed(self, iid_sigma_16):
        a = band_probability_qmc(iid_sigma_16, 1.5, seed=11)
        b = band_probability_qmc(iid_sigma_16, 1.5, seed=11)
        assert a.log_p == b.log_p and a.err == b.err

    def test_threading_does_not_change_result(self, iid_sigma_16):
        a = band_probability_qmc(iid_sigma_16, 1.5, seed=11, threads=1)
        b = band_probability_qmc(iid_sigma_16, 1.5, seed=11, threads=4)
        assert a.log_p == b.log_p

    def test_lattice_point_set_agrees(self, iid_sigma_16):
        a = band_probability_qmc(iid_sigma_16, 1.5, seed=11)
        b = band_probability_qmc(iid_sigma_16, 1.5, seed=12,
                                 point_set="lattice")
        assert agree_within(a, b, sigmas=4.0)

    def test_monotone_in_half_width(self, iid_sigma_16):
        values = [band_probability_qmc(iid_sigma_16, f, seed=4)
                  for f in (0.8, 1.2, 1.8)]
        for lo, hi in zip(values, values[1:]):
            assert hi.p >= lo.p - 3.0 * math.hypot(lo.err, hi.err)

    def test_degenerate_covariance_signals_reduction(self):
        model = CovarianceModel.from_measure(dirac_measure("zero"), 10)
        sigma = partial_sum_covariance(model, 10)
        with pytest.raises(DegenerateCovarianceError):
            band_probability_qmc(sigma, 0.5)

    def test_conditional_variance_upper_bound(self, iid_model):
        # independent steps: p(N, f) <= (2 Phi(f) - 1)^N exactly
        for n, f in ((8, 1.0), (16, 1.5)):
            sigma = partial_sum_covariance(iid_model, n)
            res = band_probability_qmc(sigma, f, seed=5)
            bound = n * math.log(2.0 * ndtr(f) - 1.0)
            assert res.log_p <= bound + 3.0 * res.rel_err


class TestRectangleWidths:
    def test_infinite_widths_marginalize(self, iid_model):
        sigma = partial_sum_covariance(iid_model, 4).matrix
        wide = np.array([np.inf, 1.0, np.inf, np.inf])
        _, p, _, _ = rectangle_probability_qmc(sigma, wide, seed=6)
        # only S_2 ~ N(0, 2) is constrained
        want = 2.0 * ndtr(1.0 / math.sqrt(2.0)) - 1.0
        assert p == pytest.approx(want, abs=1e-4)


class TestMcEngine:
    def test_agrees_with_qmc(self, iid_model):
        f, n = 4.0, 16
        mc = band_probability_mc(iid_measure(), n, f, samples=200_000, seed=7)
        sigma = partial_sum_covariance(iid_model, n)
        qmc = band_probability_qmc(sigma, f, seed=7)
        assert agree_within(mc, qmc, sigmas=3.0)
        assert mc.flag == "ok"

    def test_seed_consistency_long_memory(self):
        measure = fgn_measure(0.7)
        a = band_probability_mc(measure, 64, 8.0, samples=40_000, seed=1)
        b = band_probability_mc(measure, 64, 8.0, samples=40_000, seed=2)
        assert 0.0 < a.p < 1.0
        gap = abs(a.p - b.p)
        assert gap <= 3.0 * math.hypot(a.err, b.err)

    def test_alternating_atom_probability_is_horizon_free(self):
        measure = dirac_measure("minus-pi")
        vals = [band_probability_mc(measure, n, 1.0, samples=50_000, seed=3)
                for n in (10, 100)]
        gap = abs(vals[0].p - vals[1].p)
        assert gap <= 3.0 * math.hypot(vals[0].err, vals[1].err)
        # matches P{|Z| <= f} exactly in law
        assert vals[1].p == pytest.approx(2.0 * ndtr(1.0) - 1.0,
                                          abs=4.0 * vals[1].err)

    def test_zero_hits_upper_bound(self):
        res = band_probability_mc(iid_measure(), 64, 0.05, samples=2_000,
                                  seed=4)
        assert res.flag == "upper-bound"
        assert res.p == pytest.approx(3.0 / 2000.0)


class TestTransferRate:
    def test_spectrum_in_unit_interval(self):
        rate = transfer_rate(1.0)
        assert 0.0 < rate.lambda1 < 1.0
        assert rate.c == pytest.approx(math.log(rate.lambda1))
        assert 0.0 < rate.spectral_gap < 1.0

    def test_node_doubling_stability(self):
        for f in (0.5, 2.0, 6.0, 10.0):
            assert transfer_rate(f).err < 1e-8

    def test_monotone_in_half_width(self):
        cs = [transfer_rate(f).c for f in (0.5, 1.0, 2.0)]
        assert cs[0] < cs[1] < cs[2] < 0.0

    def test_inverse_square_gap_decays_like_boundary_layer(self):
        # |ln lambda1| (f + 0.5826)^2 locks to pi^2/8 long before the
        # plain inverse-square law (whose relative gap is ~1.17/f)
        for f in (6.0, 10.0):
            rate = transfer_rate(f)
            shifted = -rate.c * (f + 0.5826) ** 2
            assert shifted == pytest.approx(math.pi ** 2 / 8.0, rel=3e-4)
            plain = abs(rate.c + math.pi ** 2 / (8 * f * f)) \
                / (math.pi ** 2 / (8 * f * f))
            assert plain == pytest.approx(2.0 * 0.5826 / f, rel=0.2)

    def test_small_width_limit(self):
        rate = transfer_rate(0.05)
        assert rate.c == pytest.approx(math.log(0.1 / math.sqrt(2 * math.pi))
                                       - 0.05 ** 2 / 3.0, abs=1e-5)

    def test_ladder_rate_matches_eigenvalue(self, iid_model):
        # cross-engine: (ln p(128) - ln p(64))/64 vs ln lambda_1
        lps = {}
        for n in (64, 128):
            sigma = partial_sum_covariance(iid_model, n)
            lps[n] = band_probability_qmc(sigma, 1.0, samples=2 ** 15,
                                          seed=8).log_p
        slope = (lps[128] - lps[64]) / 64.0
        assert slope == pytest.approx(transfer_rate(1.0).c, rel=0.02)

    def test_domain_guards(self):
        with pytest.raises(ValueError):
            transfer_rate(-1.0)
        with pytest.raises(ValueError):
            transfer_rate(1.0, nodes=4)


class TestAtomicReductions:
    def test_linear_growth_case_closed_form(self):
        res = band_probability_atomic(dirac_measure("zero"), 10, 0.5)
        assert res.p == pytest.approx(2.0 * ndtr(0.05) - 1.0, abs=1e-12)

    def test_half_pi_pair_quadrature_oracle(self):
        from scipy.integrate import quad
        f = 0.3
        res = band_probability_atomic(dirac_measure("plus-minus-half-pi"),
                                      8, f)
        def integrand(x):
            return math.exp(-x * x / 2) / math.sqrt(2 * math.pi) * (
                ndtr(min(f, x + f)) - ndtr(max(-f, x - f)))
        want, _ = quad(integrand, -f, f, epsabs=1e-13)
        assert res.p == pytest.approx(want, rel=1e-8)

    def test_four_atom_case_agrees_with_mc(self):
        measure = dirac_measure("four-atoms")
        exact = band_probability_atomic(measure, 24, 0.2)
        mc = band_probability_mc(measure, 24, 0.2, samples=400_000, seed=9)
        assert abs(exact.p - mc.p) <= 3.0 * mc.err

    def test_density_component_rejected(self):
        with pytest.raises(DegenerateCovarianceError):
            band_probability_atomic(iid_measure(), 8, 1.0)


class TestDispatch:
    def test_front_end_routes_atomic(self):
        res = band_probability(dirac_measure("zero"), 10, 0.5, method="qmc")
        assert res.method == "atomic-exact"

    def test_front_end_mc(self):
        res = band_probability(iid_measure(), 8, 2.0, method="mc",
                               samples=50_000, seed=1)
        assert res.method == "mc"
        assert 0.0 < res.p < 1.0
