"""Constructive integrability toolkit: exact operator algebra, symmetry and
conservation-law checks, transform-based exact solutions, spectral solvers,
resonance dynamics and three-body simulation."""

from .errors import ConfigError, IntegrabilityError, NumericalError

__version__ = "0.1.0"

__all__ = ["ConfigError", "IntegrabilityError", "NumericalError", "__version__"]
