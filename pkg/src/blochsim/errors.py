"""Exception types shared across the package.

The CLI maps these onto distinct exit codes (config 2, divergence 3,
analysis 4); everything else is an ordinary ValueError.
"""


class BlochsimError(Exception):
    """Base class for package-specific failures."""


class ConfigError(BlochsimError):
    """Invalid or unusable experiment configuration."""


class IntegrationError(BlochsimError):
    """ODE integration failed its accuracy contract (e.g. Wronskian loss)."""


class SearchError(BlochsimError):
    """Root bracketing / band-edge search failed within the scan window."""


class DivergenceError(BlochsimError):
    """Time integration produced NaN/Inf or lost the conserved norm."""


class AnalysisError(BlochsimError):
    """Trajectory analysis could not produce the requested statistic."""
