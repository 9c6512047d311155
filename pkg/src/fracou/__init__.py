"""Fractional Ornstein-Uhlenbeck numerics.

Covariance kernels for fractional, subfractional, bifractional Brownian
motion and Hermite processes; singular-kernel quadrature; stationary
moments, auto-covariances and their asymptotic regimes for OU processes of
the first and second kind; exact path simulation and Monte-Carlo checks.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DomainError,
    FracOUError,
    NonStationaryDriverError,
    NotPositiveDefiniteError,
    QuadratureError,
    SingularityError,
    UnsupportedProcessError,
)
from .kernels import FBM, BiFBM, Hermite, HolderExponent, ProcessSpec, SubFBM  # noqa: E402
from .quadrature import QuadConfig, QuadResult  # noqa: E402
from .analytics import AsymptoticRegime, FirstKind, OUSpec, SecondKind  # noqa: E402
from .simulate import Grid, PathEnsemble  # noqa: E402
from .montecarlo import CovEstimate  # noqa: E402

__all__ = [
    "__version__",
    "FracOUError",
    "DomainError",
    "SingularityError",
    "NonStationaryDriverError",
    "UnsupportedProcessError",
    "QuadratureError",
    "NotPositiveDefiniteError",
    "ProcessSpec",
    "FBM",
    "SubFBM",
    "BiFBM",
    "Hermite",
    "HolderExponent",
    "QuadConfig",
    "QuadResult",
    "OUSpec",
    "FirstKind",
    "SecondKind",
    "AsymptoticRegime",
    "Grid",
    "PathEnsemble",
    "CovEstimate",
]
