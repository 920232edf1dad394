"""Bloch oscillations of a BEC in a tilted optical lattice.

Subpackages cover the full pipeline: physical units and scales (`units`),
Mathieu band structure and Wannier functions (`mathieu_bands`), the
closed-form semiclassical ground state (`semiclassical`), the tight-binding
DNLS integrator (`dnls`), center-of-mass / pseudo-period analysis
(`observables`), a direct continuum NLS solver used for cross-validation
(`continuum`), and the experiment runner (`cli`).
"""

__version__ = "0.1.0"

from . import continuum, dnls, mathieu_bands, observables, semiclassical, units
from .errors import (
    AnalysisError,
    BlochsimError,
    ConfigError,
    DivergenceError,
    IntegrationError,
    SearchError,
)

__all__ = [
    "__version__",
    "units",
    "mathieu_bands",
    "semiclassical",
    "dnls",
    "observables",
    "continuum",
    "BlochsimError",
    "ConfigError",
    "DivergenceError",
    "AnalysisError",
    "IntegrationError",
    "SearchError",
]
