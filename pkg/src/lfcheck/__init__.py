"""High-precision recursion coefficients for generalized discrete
orthogonal polynomial weights, computed two independent ways and
cross-verified against the structural identities they must satisfy."""

__version__ = "0.1.0"

from .numerics import NumericalBreakdown, PrecisionContext
from .weights import Family, WeightSpec, make_spec
from .moments import compute_moments
from .chol_core import CoefficientTable, coefficients_from_moments
from .lf_engines import (IdentityResiduals, LFSeeds, LFVariant, run_variant,
                         seed_from_moments)

__all__ = [
    "CoefficientTable",
    "Family",
    "IdentityResiduals",
    "LFSeeds",
    "LFVariant",
    "NumericalBreakdown",
    "PrecisionContext",
    "WeightSpec",
    "__version__",
    "coefficients_from_moments",
    "compute_moments",
    "make_spec",
    "run_variant",
    "seed_from_moments",
]
