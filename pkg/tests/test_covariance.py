import math

import numpy as np
import pytest
from scipy.integrate import quad

from smalldev.covariance import (CovarianceModel, PartialSumCovariance,
                                 autocovariance, fgn_autocovariance_exact,
                                 partial_sum_covariance, repaired_cholesky,
                                 szego_logdet_limit, toeplitz_logdet,
                                 variance_ratio_diagnostic)
from smalldev.errors import HorizonError, SingularCovarianceError
from smalldev.spectral import (ELL_ONE, PerturbationSchedule, atomic_measure,
                               dirac_measure, fgn_measure, iid_measure,
                               perturbed_measure)


class TestAutocovariance:
    @pytest.mark.parametrize("hurst", [0.3, 0.5, 0.7])
    def test_matches_closed_difference_form(self, hurst):
        measure = fgn_measure(hurst)
        exact = fgn_autocovariance_exact(hurst, np.arange(65))
        for k in (0, 1, 2, 3, 5, 8, 13, 21, 34, 55, 64):
            assert autocovariance(measure, k) == pytest.approx(
                float(exact[k]), abs=1e-6)

    def test_independent_steps_have_no_lag_one(self):
        assert autocovariance(fgn_measure(0.5), 1) == pytest.approx(0.0,
                                                                    abs=1e-8)

    def test_zero_frequency_atom(self):
        measure = dirac_measure("zero")
        for k in (0, 1, 7):
            assert autocovariance(measure, k) == pytest.approx(1.0)

    def test_negative_lag_rejected(self):
        with pytest.raises(ValueError):
            autocovariance(iid_measure(), -1)


class TestCovarianceModel:
    def test_cauchy_schwarz_guard(self):
        with pytest.raises(ValueError):
            CovarianceModel(np.array([1.0, 1.5]))

    def test_from_measure_closed_forms(self):
        model = CovarianceModel.from_measure(iid_measure(2.0), 8)
        assert model.autocov[0] == pytest.approx(2.0)
        assert np.allclose(model.autocov[1:], 0.0)

    def test_zoned_model_matches_per_lag_quadrature(self):
        sched = PerturbationSchedule(0.7, [(1.5, 8, 4), (5.0, 96, 256)])
        measure = perturbed_measure(sched)
        model = CovarianceModel.from_measure(measure, 128)
        for k in (0, 3, 17, 101):
            assert model.autocov[k] == pytest.approx(
                autocovariance(measure, k), abs=1e-8)

    def test_toeplitz_psd_for_constructed_measures(self):
        for measure in (iid_measure(), fgn_measure(0.3), fgn_measure(0.7),
                        dirac_measure("plus-minus-half-pi")):
            model = CovarianceModel.from_measure(measure, 64)
            eigvals = np.linalg.eigvalsh(model.toeplitz(64))
            assert eigvals[0] >= -1e-10 * model.autocov[0]


class TestPartialSumCovariance:
    def test_random_walk_structure(self, iid_model):
        sigma = partial_sum_covariance(iid_model, 16)
        want = np.minimum.outer(np.arange(1, 17), np.arange(1, 17))
        assert np.allclose(sigma.matrix, want)

    def test_long_memory_exact_diagonal(self, fgn07_model):
        sigma = partial_sum_covariance(fgn07_model, 512)
        n = np.arange(1, 513)
        assert np.abs(sigma.variances - n ** 1.4).max() < 1e-8

    def test_rank_one_atom(self):
        model = CovarianceModel.from_measure(dirac_measure("zero"), 12)
        sigma = partial_sum_covariance(model, 12)
        want = np.outer(np.arange(1, 13), np.arange(1, 13))
        assert np.allclose(sigma.matrix, want)

    def test_double_sum_matches_spectral_integration(self, fgn07):
        # independent code path: int (e^{inu}-1)(e^{-imu}-1)/|1-e^{iu}|^2 p du
        model = CovarianceModel.from_measure(fgn07, 16)
        sigma = partial_sum_covariance(model, 16)
        rng = np.random.default_rng(5)
        for _ in range(4):
            n, m = sorted(rng.integers(1, 17, size=2))
            def integrand(u):
                num = (np.exp(1j * n * u) - 1) * (np.exp(-1j * m * u) - 1)
                den = abs(1 - np.exp(1j * u)) ** 2
                return (num / den).real * fgn07.density_scalar(u)
            val, _ = quad(integrand, -math.pi, math.pi, limit=400,
                          points=[0.0])
            assert sigma.matrix[n - 1, m - 1] == pytest.approx(val, abs=1e-6)

    def test_horizon_guard(self, iid_model):
        with pytest.raises(HorizonError):
            partial_sum_covariance(iid_model, 2000)


class TestToeplitzLogdet:
    def test_identity(self, iid_model):
        for n in (1, 7, 64):
            assert toeplitz_logdet(iid_model, n) == pytest.approx(0.0,
                                                                  abs=1e-12)

    def test_scaled_identity(self):
        model = CovarianceModel.from_measure(iid_measure(2.5), 32)
        assert toeplitz_logdet(model, 10) == pytest.approx(
            10.0 * math.log(2.5))

    def test_methods_agree(self, fgn07_model):
        for n in (8, 64, 512):
            lev = toeplitz_logdet(fgn07_model, n, "levinson")
            cho = toeplitz_logdet(fgn07_model, n, "cholesky")
            assert lev == pytest.approx(cho, rel=1e-8)

    def test_per_step_limit(self, fgn07, fgn07_model):
        per_step = toeplitz_logdet(fgn07_model, 256) / 256.0
        assert per_step == pytest.approx(szego_logdet_limit(fgn07), abs=0.02)

    def test_singular_rejected(self):
        model = CovarianceModel.from_measure(dirac_measure("zero"), 8)
        with pytest.raises(SingularCovarianceError):
            toeplitz_logdet(model, 4)


class TestVarianceRatio:
    def test_long_memory_ratios_are_one(self, fgn07_model):
        rows = variance_ratio_diagnostic(fgn07_model, 0.7, ELL_ONE,
                                         [4, 16, 64, 256])
        assert all(r == pytest.approx(1.0, abs=1e-10) for _, r in rows)

    def test_iid_ratios_are_one(self, iid_model):
        rows = variance_ratio_diagnostic(iid_model, 0.5, ELL_ONE, [8, 32])
        assert all(r == pytest.approx(1.0, abs=1e-12) for _, r in rows)

    def test_perturbed_ratio_drifts_to_one(self):
        sched = PerturbationSchedule(0.7, [(4.0, 64, 4096)])
        measure = perturbed_measure(sched)
        model = CovarianceModel.from_measure(measure, 4096)
        grid = [2 ** k for k in range(6, 13)]
        rows = variance_ratio_diagnostic(model, 0.7, ELL_ONE, grid)
        ratios = [r for _, r in rows]
        assert all(0.8 <= r <= 1.2 for r in ratios)
        assert abs(ratios[-1] - 1.0) < abs(ratios[0] - 1.0)


class TestRepairedCholesky:
    def test_clips_tiny_negatives(self):
        mat = np.diag([1.0, 1.0, -1e-12])
        with pytest.warns(UserWarning):
            chol = repaired_cholesky(mat)
        assert np.all(np.isfinite(chol))

    def test_rejects_structural_negatives(self):
        with pytest.raises(SingularCovarianceError):
            repaired_cholesky(np.diag([1.0, -0.5]))
