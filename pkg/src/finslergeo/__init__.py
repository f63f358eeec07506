"""Numerical Finsler geometry at desk scale.

Builds the full tensor tower of a closed-form Finsler function (fundamental
tensor, Cartan torsion, spray, Berwald and Cartan connections, curvatures),
classifies metrics, and verifies the curvature identities that tie the tower
together.  All derivatives come from exact truncated Taylor (jet) arithmetic,
never finite differences.
"""

__version__ = "0.1.0"

from .jets import DEFAULT_JET_ORDER, Jet, JetDomainError, JetError, JetOrderError, lift, partial
from .metrics import (
    ChartPoint,
    FixtureValidationError,
    MetricFixture,
    SampleSpec,
    UnknownFixtureError,
    builtin_fixture,
    fixture_names,
    sample_points,
    validate_fixture,
)

__all__ = [
    "DEFAULT_JET_ORDER",
    "Jet",
    "JetDomainError",
    "JetError",
    "JetOrderError",
    "lift",
    "partial",
    "ChartPoint",
    "MetricFixture",
    "SampleSpec",
    "UnknownFixtureError",
    "FixtureValidationError",
    "builtin_fixture",
    "fixture_names",
    "sample_points",
    "validate_fixture",
]
