"""
Closed-form lower bounds on the correlation ``<h_bar, g_bar>/n`` between the
clean embedding and the relaxed solution, and the admissibility conditions
under which each bound is proven.

Only the right-hand sides are evaluated. The success-probability statements
that accompany the random-noise bounds carry unspecified absolute constants
and are not modelled; ``*_PART1`` bounds are informational columns.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional

import numpy as np

from solver.angular import CircleEmbedding
from solver.errors import InadmissibleParametersError, InvalidSpecError
from solver.grid_graph import SparseLaplacian, laplacian_quadform

logger = logging.getLogger(__name__)

HOLDS_SLACK = 1e-9


class BoundKind(Enum):
    COROLLARY1 = "Corollary1"
    THEOREM1 = "Theorem1"
    BERNOULLI_PART1 = "BernoulliPart1"
    BERNOULLI_PART2 = "BernoulliPart2"
    GAUSSIAN_PART1 = "GaussianPart1"
    GAUSSIAN_PART2 = "GaussianPart2"
    MULTIVARIATE_COR = "MultivariateCor"
    MULTIVARIATE_THEOREM = "MultivariateTheorem"

    def __str__(self) -> str:
        return self.value

    @property
    def informational(self) -> bool:
        return self in (BoundKind.BERNOULLI_PART1, BoundKind.GAUSSIAN_PART1)


@dataclass(frozen=True)
class BoundInputs:
    lam: float
    k: int
    M: float
    alpha: float
    n: int
    d: int = 1
    delta: Optional[float] = None  # realized ||z_bar - h_bar|| / sqrt(n)
    p: Optional[float] = None
    sigma: Optional[float] = None
    epsilon: Optional[float] = None
    zHz: Optional[float] = None  # z_bar^T H z_bar
    perpendicular: bool = False

    def __post_init__(self):
        if self.n < 2:
            raise InvalidSpecError(f"bounds need n >= 2, got {self.n}")
        if self.k < 1 or self.d < 1:
            raise InvalidSpecError(f"k and d must be >= 1, got k={self.k}, d={self.d}")
        if not self.M > 0.0:
            raise InvalidSpecError(f"Hölder constant M must be > 0, got {self.M}")
        if not 0.0 < self.alpha <= 1.0:
            raise InvalidSpecError(f"Hölder exponent alpha must lie in (0, 1], got {self.alpha}")
        if self.lam < 0.0:
            raise InvalidSpecError(f"lambda must be >= 0, got {self.lam}")


@dataclass(frozen=True)
class BoundReport:
    kind: BoundKind
    correlation: float
    bound: float
    holds: bool
    inputs: BoundInputs


# ---------------------------------------------------------------------------
# Building blocks
# ---------------------------------------------------------------------------


def neighbourhood_size(k: int, d: int) -> int:
    """``(2k+1)^d - 1``, the largest vertex degree."""
    return (2 * k + 1) ** d - 1


def holder_quadform_bound(lam: float, k: int, M: float, alpha: float, n: int, d: int = 1) -> float:
    """Upper bound on ``(1/2n) h_bar^T H h_bar`` for clean samples of a (M, alpha)-Hölder f.

    For d = 1 this is ``lam pi^2 M^2 (2k)^(2 alpha + 1) / n^(2 alpha)``.
    """
    return (
        lam
        * math.pi**2
        * M**2
        * (2 * k) ** (2 * alpha)
        * d ** (2 * alpha)
        * neighbourhood_size(k, d)
        / n ** (2 * alpha / d)
    )


def clean_quadform(laplacian: SparseLaplacian, lam: float, h: CircleEmbedding) -> float:
    """``(1/2n) h_bar^T H h_bar``."""
    return lam * laplacian_quadform(laplacian, h.z) / (2 * h.n)


def _require(condition: bool, inequality: str, detail: str = ""):
    if not condition:
        raise InadmissibleParametersError(inequality, detail)


def _lambda_univariate(b: BoundInputs):
    _require(b.d == 1, "d = 1", f"got d={b.d}")
    _require(b.lam < 1.0 / (4 * b.k), "lambda < 1/(4k)", f"lambda={b.lam}, k={b.k}")


def _lambda_multivariate(b: BoundInputs):
    limit = 1.0 / (2 * neighbourhood_size(b.k, b.d))
    _require(b.lam < limit, "lambda < 1/(2((2k+1)^d - 1))", f"lambda={b.lam}, limit={limit:.6g}")


def _delta(b: BoundInputs) -> float:
    _require(b.delta is not None and 0.0 <= b.delta <= 1.0, "0 <= delta <= 1", f"delta={b.delta}")
    return float(b.delta)


def _epsilon(b: BoundInputs) -> float:
    _require(b.epsilon is not None and 0.0 < b.epsilon < 0.5, "0 < epsilon < 1/2", f"epsilon={b.epsilon}")
    return float(b.epsilon)


def _zhz_term(b: BoundInputs, denominator: float) -> float:
    _require(b.zHz is not None and b.zHz >= 0.0, "z_bar^T H z_bar supplied and >= 0", f"zHz={b.zHz}")
    return (b.zHz / (2 * b.n)) / denominator**2


def _gauss_decay(b: BoundInputs, eps: float) -> float:
    _require(b.sigma is not None and b.sigma >= 0.0, "sigma >= 0", f"sigma={b.sigma}")
    decay = (1.0 - eps) * math.exp(-2 * math.pi**2 * b.sigma**2)
    _require(decay >= 0.5, "(1 - epsilon) exp(-2 pi^2 sigma^2) >= 1/2", f"value={decay:.6g}")
    return decay


def _bernoulli_p(b: BoundInputs, eps: float) -> float:
    _require(b.p is not None and 0.0 <= b.p <= 1.0, "0 <= p <= 1", f"p={b.p}")
    _require(b.p + eps <= 0.5, "p + epsilon <= 1/2", f"p={b.p}, epsilon={eps}")
    return float(b.p)


# ---------------------------------------------------------------------------
# Bound evaluation
# ---------------------------------------------------------------------------


def bound_value(kind: BoundKind, b: BoundInputs) -> float:
    """Right-hand side of the requested bound; raises if the inputs are outside its range."""
    holder = holder_quadform_bound(b.lam, b.k, b.M, b.alpha, b.n, b.d)
    lam_k = 4 * b.lam * b.k

    if kind is BoundKind.COROLLARY1:
        _lambda_univariate(b)
        return 1.0 - 1.5 * _delta(b) - holder

    if kind is BoundKind.MULTIVARIATE_COR:
        _lambda_multivariate(b)
        return 1.0 - 1.5 * _delta(b) - holder

    if kind is BoundKind.THEOREM1:
        _require(b.d == 1, "d = 1", f"got d={b.d}")
        delta = _delta(b)
        if b.perpendicular:
            _lambda_univariate(b)
            den = 1.0 + lam_k - lam_k * math.sin(math.pi / (2 * b.n)) ** 2
        else:
            den = lam_k + 1.0
        return 1.0 - 1.5 * delta - holder + _zhz_term(b, den)

    if kind is BoundKind.MULTIVARIATE_THEOREM:
        delta = _delta(b)
        size = neighbourhood_size(b.k, b.d)
        if b.perpendicular:
            _lambda_multivariate(b)
            kappa = b.k if b.d == 1 else (b.k + 1) ** b.d - 1
            den = 1.0 + 2 * b.lam * size - 4 * b.lam * kappa * math.sin(math.pi / (2 * b.n)) ** 2
        else:
            den = 2 * b.lam * size + 1.0
        return 1.0 - 1.5 * delta - holder + _zhz_term(b, den)

    if kind in (BoundKind.BERNOULLI_PART1, BoundKind.BERNOULLI_PART2):
        _lambda_univariate(b)
        eps = _epsilon(b)
        p = _bernoulli_p(b, eps)
        root = 3.0 * math.sqrt((p + eps) / 2.0)
        if kind is BoundKind.BERNOULLI_PART2:
            return 1.0 - root - holder
        gain = b.lam * b.k * (1.0 - eps) * p / (6.0 * (lam_k + 1.0) ** 2)
        return 1.0 - (root - gain) - holder * (1.0 - (1.0 - p) ** 2 / (lam_k + 1.0) ** 2)

    if kind in (BoundKind.GAUSSIAN_PART1, BoundKind.GAUSSIAN_PART2):
        _lambda_univariate(b)
        eps = _epsilon(b)
        decay = _gauss_decay(b, eps)
        root = 3.0 * math.sqrt((1.0 - decay) / 2.0)
        if kind is BoundKind.GAUSSIAN_PART2:
            return 1.0 - root - holder
        e4 = math.exp(-4 * math.pi**2 * b.sigma**2)
        gain = b.lam * b.k / (6.0 * (lam_k + 1.0) ** 2) * (1.0 - eps) * (1.0 - e4) ** 2
        return 1.0 - (root - gain) - holder * (1.0 - e4 / (lam_k + 1.0) ** 2)

    raise InvalidSpecError(f"unknown bound kind {kind!r}")


def check_bound(kind: BoundKind, params: BoundInputs, correlation: float) -> BoundReport:
    """Evaluate ``kind`` at ``params`` and compare with a realized correlation."""
    bound = bound_value(kind, params)
    holds = bool(correlation >= bound - HOLDS_SLACK)
    if not holds and not kind.informational:
        logger.warning("%s violated: correlation %.9g < bound %.9g", kind, correlation, bound)
    return BoundReport(kind=kind, correlation=float(correlation), bound=float(bound), holds=holds, inputs=params)


def kinds_for_noise(noise_kind: str, d: int) -> List[BoundKind]:
    """Bounds reported for a noise model, asserted kinds first."""
    if noise_kind == "bounded":
        if d == 1:
            return [BoundKind.COROLLARY1, BoundKind.THEOREM1]
        return [BoundKind.MULTIVARIATE_COR, BoundKind.MULTIVARIATE_THEOREM]
    if noise_kind == "bernoulli":
        return [BoundKind.BERNOULLI_PART2, BoundKind.BERNOULLI_PART1] if d == 1 else []
    if noise_kind == "gaussian":
        return [BoundKind.GAUSSIAN_PART2, BoundKind.GAUSSIAN_PART1] if d == 1 else []
    return []


def try_bound(kind: BoundKind, params: BoundInputs, correlation: float) -> Optional[BoundReport]:
    """``check_bound`` that returns None when the parameters are inadmissible."""
    try:
        return check_bound(kind, params, correlation)
    except InadmissibleParametersError as e:
        logger.debug("%s skipped: %s", kind, e)
        return None


def zhz(laplacian: SparseLaplacian, lam: float, zbar: np.ndarray) -> float:
    """``z_bar^T H z_bar`` for a stacked vector."""
    n = laplacian.n
    return lam * (laplacian_quadform(laplacian, zbar[:n]) + laplacian_quadform(laplacian, zbar[n:]))
