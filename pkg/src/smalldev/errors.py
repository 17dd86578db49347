"""Exception types shared across the package."""


class SmallDevError(Exception):
    """Base class for all package-specific errors."""


class SingularPointError(SmallDevError):
    """Density evaluated at a non-integrable point (u = 0 with H > 1/2)."""


class AdjointIterationError(SmallDevError):
    """Adjoint fixed-point iteration failed to converge."""

    def __init__(self, residual, iterations):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"adjoint iteration diverged: residual {residual:.3e} "
            f"after {iterations} iterations")


class InvalidScheduleError(SmallDevError):
    """Perturbation schedule violates a construction condition."""


class QuadratureToleranceError(SmallDevError):
    """Adaptive quadrature could not reach the requested tolerance."""

    def __init__(self, requested, achieved):
        self.requested = requested
        self.achieved = achieved
        super().__init__(
            f"quadrature tolerance not met: requested {requested:.1e}, "
            f"achieved {achieved:.1e}")


class HorizonError(SmallDevError):
    """Autocovariance horizon too short for the requested operation."""


class SingularCovarianceError(SmallDevError):
    """Covariance matrix not positive definite."""

    def __init__(self, detail=""):
        msg = "singular covariance (Kolmogorov criterion may fail)"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class EmbeddingError(SmallDevError):
    """Circulant embedding produced a significantly negative eigenvalue."""


class DegenerateCovarianceError(SmallDevError):
    """Covariance is numerically singular; analytic reduction applies."""

    def __init__(self, detail=""):
        msg = "degenerate covariance: use analytic reduction"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class AtomSamplerError(SmallDevError):
    """Trigonometric sampler called on a measure with a density part."""


class RegimeError(SmallDevError):
    """Boundary regime outside a theorem's validity range."""

    def __init__(self, regime, needed):
        self.regime = regime
        super().__init__(
            f"theorem not applicable in this regime: boundary is "
            f"'{regime}', needs '{needed}'")


class IrregularSequenceError(SmallDevError):
    """Kolmogorov integral diverges; the Szego term is undefined."""

    def __init__(self):
        super().__init__("irregular sequence: Szego term undefined")
