"""Regret functions induced by convex optimization over state spaces.

Subpackages cover the state-space primitives, value functions and
regret, a zoo of closed-form divergences, numerical checks for
monotonicity / sufficiency / locality, and the four application
domains: coding, scoring rules, spin-system thermodynamics and
log-optimal portfolios.
"""

from . import (
    coding,
    divergence_zoo,
    portfolio,
    regret_core,
    scoring,
    state_space,
    statmech,
    sufficiency_checks,
)
from .errors import RegretlabError

__version__ = "0.1.0"

__all__ = [
    "state_space",
    "regret_core",
    "divergence_zoo",
    "sufficiency_checks",
    "coding",
    "scoring",
    "statmech",
    "portfolio",
    "RegretlabError",
    "__version__",
]
