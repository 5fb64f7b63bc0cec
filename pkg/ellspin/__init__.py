"""
EllSpin - deformed Inozemtsev chain and dynamical elliptic spin-Ruijsenaars laboratory
"""

__version__ = "1.0.0"
__author__ = "EllSpin Contributors"

from ellspin.utils.logger import configure_library_logging

configure_library_logging()

from ellspin.config import get_settings  # noqa: E402
from ellspin.elliptic import EllipticParams, GeneralTheta, theta, vartheta  # noqa: E402
from ellspin.chain import ChainParams, SpinOperator, spectrum, spectral_distance  # noqa: E402
from ellspin.qmbs import QmbsParams  # noqa: E402

__all__ = [
    "get_settings",
    "EllipticParams",
    "GeneralTheta",
    "theta",
    "vartheta",
    "ChainParams",
    "SpinOperator",
    "spectrum",
    "spectral_distance",
    "QmbsParams",
    "__version__",
]
