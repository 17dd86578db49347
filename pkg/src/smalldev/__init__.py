"""smalldev: band probabilities of partial sums of stationary Gaussian
sequences, computed, simulated, bounded and cross-checked at desk scale."""

from ._kernels import BACKEND
from .spectral import (SpectralMeasure, SlowlyVaryingFn, HurstParams,
                       PerturbationSchedule, fgn_measure, iid_measure,
                       dirac_measure, atomic_measure, perturbed_measure,
                       fgn_spectral_density, adjoint_slowly_varying,
                       scaling_d, tail_mass_ratio, ELL_ONE, log_power_ell)
from .covariance import (CovarianceModel, PartialSumCovariance,
                         autocovariance, partial_sum_covariance,
                         toeplitz_logdet, variance_ratio_diagnostic)
from .sampler import (PathBatch, sample_circulant, sample_cholesky,
                      sample_atoms, sample_measure)
from .engines import (BandProbability, TransferRate, band_probability,
                      band_probability_qmc, band_probability_mc,
                      band_probability_atomic, transfer_rate)

__version__ = "0.1.0"
