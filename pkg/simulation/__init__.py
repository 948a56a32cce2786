"""
Synthetic test functions, elevation grids and seeded noise models.
"""

from .functions import FunctionKind, FunctionSpec, sample_function
from .noise import RNG_ALGORITHM, BernoulliUniform, Bounded, Gaussian, NoiseModel, apply_noise, make_rng, noise_model

__all__ = [
    "FunctionKind",
    "FunctionSpec",
    "sample_function",
    "RNG_ALGORITHM",
    "BernoulliUniform",
    "Bounded",
    "Gaussian",
    "NoiseModel",
    "apply_noise",
    "make_rng",
    "noise_model",
]
