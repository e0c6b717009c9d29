"""Security bounds and asymptotic key rates for differential-phase-shift QKD
with a small random delay set."""

from snrdps.bounds import binary_entropy, eph_bound, omega, omega_h, theorem1_bound
from snrdps.keyrate import (
    ChannelModel,
    RateModel,
    RatePoint,
    detection_Q,
    eve_allocation,
    hph_bound,
    key_rate_G,
    optimize_mu,
    poisson_p,
    rrdps_rate,
)
from snrdps.linalg import InvalidInputError
from snrdps.povm import ProtocolParams

__version__ = "0.1.0"

__all__ = [
    "ChannelModel",
    "InvalidInputError",
    "ProtocolParams",
    "RateModel",
    "RatePoint",
    "binary_entropy",
    "detection_Q",
    "eph_bound",
    "eve_allocation",
    "hph_bound",
    "key_rate_G",
    "omega",
    "omega_h",
    "optimize_mu",
    "poisson_p",
    "rrdps_rate",
    "theorem1_bound",
]
