"""Nonclassicality of photon-added squeezed vacuum states and their thermal decoherence."""

from .errors import PasvError
from .pasv_core import PasvParams, PhasePoint, mandel_q, mean_photon, norm_factor_sq_inv, wigner
from .thermal_channel import ChannelParams, threshold_time_m1, wigner_evolved

__all__ = [
    "ChannelParams",
    "PasvError",
    "PasvParams",
    "PhasePoint",
    "mandel_q",
    "mean_photon",
    "norm_factor_sq_inv",
    "threshold_time_m1",
    "wigner",
    "wigner_evolved",
]

__version__ = "0.1.0"
