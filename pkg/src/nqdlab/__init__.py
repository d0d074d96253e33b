"""Numerical laboratory for strong laws of weighted sums under pairwise negative quadrant dependence."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree without install
    __version__ = "0.1.0"

from .marginals import Marginal, MarginalError, parse_marginal  # noqa: E402
from .scaling import MomentInequalityProfile, ScalingFamily, TruncationWindow  # noqa: E402
from .series import EngineConfig, SeriesDiagnostic  # noqa: E402

__all__ = [
    "EngineConfig",
    "Marginal",
    "MarginalError",
    "MomentInequalityProfile",
    "ScalingFamily",
    "SeriesDiagnostic",
    "TruncationWindow",
    "__version__",
    "parse_marginal",
]
