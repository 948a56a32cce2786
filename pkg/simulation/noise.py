"""
Noise models on modulo-1 samples and the seeded generators behind them.

Every draw comes from a Philox counter-based generator keyed by
``SeedSequence([seed, trial])``, so a trial's noise depends only on the
master seed and its index, not on scheduling order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import ClassVar, Union

import numpy as np

from solver.angular import Mod1Samples, wrap_mod1
from solver.errors import InvalidSpecError

logger = logging.getLogger(__name__)

RNG_ALGORITHM = "numpy.Philox"


def make_rng(seed: int, trial: int = 0) -> np.random.Generator:
    if seed < 0 or trial < 0:
        raise InvalidSpecError(f"seed and trial index must be >= 0, got {seed}, {trial}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, trial])))


@dataclass(frozen=True)
class Bounded:
    """Additive ``delta_i ~ U[-gamma, gamma]`` before wrapping."""

    gamma: float
    kind: ClassVar[str] = "bounded"

    def __post_init__(self):
        if not 0.0 <= self.gamma < 0.5:
            raise InvalidSpecError(f"bounded noise gamma must lie in [0, 0.5), got {self.gamma}")

    @property
    def level(self) -> float:
        return self.gamma

    def draw(self, clean: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return wrap_mod1(clean + rng.uniform(-self.gamma, self.gamma, clean.shape[0]))


@dataclass(frozen=True)
class BernoulliUniform:
    """Each residue replaced by ``U[0, 1)`` with probability ``p``."""

    p: float
    kind: ClassVar[str] = "bernoulli"

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise InvalidSpecError(f"Bernoulli probability p must lie in [0, 1], got {self.p}")

    @property
    def level(self) -> float:
        return self.p

    def draw(self, clean: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        n = clean.shape[0]
        mask = rng.random(n) < self.p
        uniform = rng.random(n)
        return np.where(mask, uniform, wrap_mod1(clean))


@dataclass(frozen=True)
class Gaussian:
    """Additive ``eta_i ~ N(0, sigma^2)`` before wrapping."""

    sigma: float
    kind: ClassVar[str] = "gaussian"

    def __post_init__(self):
        if not self.sigma >= 0.0:
            raise InvalidSpecError(f"Gaussian sigma must be >= 0, got {self.sigma}")

    @property
    def level(self) -> float:
        return self.sigma

    def draw(self, clean: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return wrap_mod1(clean + rng.normal(0.0, self.sigma, clean.shape[0]))


NoiseModel = Union[Bounded, BernoulliUniform, Gaussian]
NOISE_KINDS = {cls.kind: cls for cls in (Bounded, BernoulliUniform, Gaussian)}


def noise_model(kind: str, level: float) -> NoiseModel:
    """Build a model from its CLI name ("bounded", "bernoulli", "gaussian") and level."""
    try:
        cls = NOISE_KINDS[kind.strip().lower()]
    except KeyError:
        raise InvalidSpecError(
            f"unknown noise model {kind!r} (expected one of {', '.join(NOISE_KINDS)})"
        ) from None
    return cls(level)


def apply_noise(clean: np.ndarray, model: NoiseModel, seed: int, trial: int = 0) -> Mod1Samples:
    clean = np.asarray(clean, dtype=np.float64).reshape(-1)
    y = model.draw(clean, make_rng(seed, trial))
    logger.debug("%s noise level %g applied to %d samples (seed %d, trial %d)", model.kind, model.level, clean.shape[0], seed, trial)
    return Mod1Samples(y)
