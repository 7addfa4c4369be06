"""Exception hierarchy shared by all modules."""


class KahlerLagError(Exception):
    """Base class for every error raised by the package."""


class DomainError(KahlerLagError, ValueError):
    """A point lies outside the declared chart domain."""


class DegenerateMetricError(KahlerLagError):
    """The metric is singular or not positive definite at a sampled point."""


class NotHolomorphicError(KahlerLagError):
    """A field or function failed its Cauchy-Riemann residual check."""


class HypothesisError(KahlerLagError):
    """A theorem's hypothesis is not met by the supplied data."""


class DegenerateImmersionError(KahlerLagError):
    """The immersion loses rank or its frame degenerates."""


class ExtensionError(KahlerLagError):
    """Holomorphic extension failed (coefficient decay or singular Jacobian)."""


class ConfigError(KahlerLagError):
    """Scenario configuration could not be parsed or validated."""
