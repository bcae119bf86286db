"""Robust control with complexity aversion over finite outcome spaces.

The core criterion penalizes a distortion ``p`` of a reference model ``q`` by relative
entropy with weight ``1/lam`` and by Shannon entropy with weight ``mu``. Modules cover the
static closed forms, misspecification-learning dynamics, equilibrium analysis, and the
rational-inattention, growth and capacity applications.
"""

__version__ = "0.1.0"

from .errors import (
    AssumptionViolation,
    ConfigError,
    DomainError,
    Infeasible,
    InternalConsistencyError,
    NonConvergenceError,
    PreconditionError,
    RegimeError,
    RobustCXError,
    StructuralError,
)
from .info_core import FiniteDistribution, PayoffTable, StructuredModel
from .robust_static import RobustParams, worst_case

__all__ = [
    "AssumptionViolation",
    "ConfigError",
    "DomainError",
    "FiniteDistribution",
    "Infeasible",
    "InternalConsistencyError",
    "NonConvergenceError",
    "PayoffTable",
    "PreconditionError",
    "RegimeError",
    "RobustCXError",
    "RobustParams",
    "StructuralError",
    "StructuredModel",
    "__version__",
    "worst_case",
]
