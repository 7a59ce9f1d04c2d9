"""Bell-inequality violation and entanglement of the Hawking radiation of
analogue black holes in quasi-one-dimensional Bose-Einstein condensates."""

__version__ = "0.1.0"

from .flow_config import FlowConfig, FlowKind, build_config  # noqa: E402
from .bdg_scattering import ScatteringMatrix, smatrix  # noqa: E402
from .gaussian_state import SecondMoments, covariance, ppt_measure, second_moments  # noqa: E402

__all__ = [
    "FlowConfig", "FlowKind", "build_config", "ScatteringMatrix", "smatrix",
    "SecondMoments", "covariance", "ppt_measure", "second_moments",
]
