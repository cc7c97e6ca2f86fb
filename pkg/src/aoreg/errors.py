"""Exception types shared across the package."""


class AoregError(Exception):
    """Base class for package-specific failures."""


class DimensionError(AoregError, ValueError):
    """Inputs with inconsistent or invalid shapes."""


class ConfigError(AoregError, ValueError):
    """Invalid or unparsable experiment configuration."""


class StabilityError(AoregError, RuntimeError):
    """A matrix required to be Hurwitz is not."""


class AssumptionError(AoregError, RuntimeError):
    """Stabilizability or regulator-solvability prerequisites do not hold."""


class RankConditionError(AoregError, RuntimeError):
    """A data-richness (persistent excitation) rank condition failed."""


class DataQualityError(AoregError, RuntimeError):
    """Learned quantities are numerically unusable (e.g. a value matrix
    that should be positive definite is not)."""


class ConvergenceError(AoregError, RuntimeError):
    """Iteration budget exhausted before the stopping rule fired."""


class SimulationDivergedError(AoregError, RuntimeError):
    """State norm blew up or became non-finite during integration."""
