"""Simulation of a double-dot electron continuously monitored by a point contact.

Units: hbar = e = 1. Rates, energies and currents share one unit; times are
their inverse.
"""
from .errors import (
    NumericalError,
    ParameterError,
    QPCError,
    RegimeWarning,
    SchemaError,
)
from .model import (
    CountingDistribution,
    DetectorMicroParams,
    InitialCondition,
    NResolvedState,
    ReducedDensityMatrix,
    SystemParams,
    build_initial,
)

__version__ = "0.1.0"

__all__ = [
    "CountingDistribution",
    "DetectorMicroParams",
    "InitialCondition",
    "NResolvedState",
    "NumericalError",
    "ParameterError",
    "QPCError",
    "ReducedDensityMatrix",
    "RegimeWarning",
    "SchemaError",
    "SystemParams",
    "build_initial",
    "__version__",
]
