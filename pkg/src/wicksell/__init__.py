"""Wicksell corpuscle problem.

Estimation of the distribution F of squared sphere radii from squared radii of
the circles a random plane cuts out of them, with Monte Carlo harnesses for the
isotonic inverse estimator, its flat-regime limit process and the local
perturbation path behind its efficiency bound.
"""

from ._backend import COMPILED
from .errors import InputError, NumericalError, WicksellError
from .estimators import ConcaveMajorant, f_hat, f_naive, lcm, u_n, v_hat, v_n
from .models import (
    CdfModel,
    DiscreteExample,
    FlatMixture,
    GammaModel,
    HolderPoint,
    ObservationModel,
    PointMass,
    SmoothnessSpec,
    Uniform01,
    cdf_eval,
    g_eval,
    h_smooth,
    m0,
    parse_model,
    u_exact,
    v_exact,
)
from .sampling import RngStream, SampleSet, sample_dataset, sample_observation

__all__ = [
    "COMPILED",
    "CdfModel",
    "ConcaveMajorant",
    "DiscreteExample",
    "FlatMixture",
    "GammaModel",
    "HolderPoint",
    "InputError",
    "NumericalError",
    "ObservationModel",
    "PointMass",
    "RngStream",
    "SampleSet",
    "SmoothnessSpec",
    "Uniform01",
    "WicksellError",
    "cdf_eval",
    "f_hat",
    "f_naive",
    "g_eval",
    "h_smooth",
    "lcm",
    "m0",
    "parse_model",
    "sample_dataset",
    "sample_observation",
    "u_exact",
    "u_n",
    "v_exact",
    "v_hat",
    "v_n",
]

__version__ = "0.1.0"
