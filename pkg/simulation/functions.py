"""
Built-in test functions sampled on a ``GridSpec``, with their Hölder constants.

F1 is the univariate benchmark ``4x cos^2(2 pi x) - 2 sin^2(2 pi x)``.
FXY is ``6u exp(-u^2 - v^2)`` with (u, v) in [-2, 2]^2 mapped affinely from
the unit square. BANDLIMITED is a seeded sum of the first ``modes`` Fourier
modes of a sinc spectrum.
GRID_FILE reads an elevation grid, multiplied by ``elevation_scale``.

Lipschitz constants (alpha = 1) are estimated once by dense sampling of the
derivative plus a margin equal to the largest change between neighbouring
samples, and cached.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from simulation.gridfile import read_grid
from solver.errors import InvalidSpecError, LengthMismatchError
from solver.grid_graph import GridSpec

logger = logging.getLogger(__name__)

FXY_HALF_WIDTH = 2.0  # unit square -> [-2, 2]^2
LIPSCHITZ_SAMPLES = 100_000


class FunctionKind(Enum):
    F1 = "f1"
    FXY = "fxy"
    BANDLIMITED = "bandlimited"
    GRID_FILE = "grid"

    @classmethod
    def parse(cls, value: str | FunctionKind) -> FunctionKind:
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            choices = ", ".join(k.value for k in cls)
            raise InvalidSpecError(f"unknown function {value!r} (expected one of {choices})") from None

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class FunctionSpec:
    kind: FunctionKind = FunctionKind.F1
    # bandlimited
    modes: int = 16
    scale: float = 3.0
    shift: float = 3.0
    seed: int = 0
    # grid file
    path: Optional[str] = None
    elevation_scale: float = 1.0
    # Hölder constants; None means "use the analytic/estimated value if available"
    holder_m: Optional[float] = None
    holder_alpha: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", FunctionKind.parse(self.kind))
        if not 0.0 < self.holder_alpha <= 1.0:
            raise InvalidSpecError(f"Hölder exponent alpha must lie in (0, 1], got {self.holder_alpha}")
        if self.holder_m is not None and self.holder_m <= 0.0:
            raise InvalidSpecError(f"Hölder constant M must be > 0, got {self.holder_m}")
        if self.kind is FunctionKind.BANDLIMITED and self.modes < 2:
            raise InvalidSpecError(f"bandlimited modes must be >= 2, got {self.modes}")
        if self.kind is FunctionKind.GRID_FILE and not self.path:
            raise InvalidSpecError("grid function requires a file path")

    @property
    def dimension(self) -> Optional[int]:
        """Natural dimension of the function, or None if it works in any."""
        if self.kind in (FunctionKind.F1, FunctionKind.BANDLIMITED):
            return 1
        if self.kind in (FunctionKind.FXY, FunctionKind.GRID_FILE):
            return 2
        return None

    def holder_constants(self) -> tuple[Optional[float], float]:
        """(M, alpha); M is None when unknown."""
        if self.holder_m is not None:
            return self.holder_m, self.holder_alpha
        if self.kind is FunctionKind.F1:
            return f1_lipschitz(), 1.0
        if self.kind is FunctionKind.FXY:
            return fxy_lipschitz(), 1.0
        if self.kind is FunctionKind.BANDLIMITED:
            return bandlimited_lipschitz(self.modes, self.scale, self.seed), 1.0
        return None, self.holder_alpha


# ---------------------------------------------------------------------------
# F1
# ---------------------------------------------------------------------------


def f1(x: np.ndarray) -> np.ndarray:
    return 4.0 * x * np.cos(2 * np.pi * x) ** 2 - 2.0 * np.sin(2 * np.pi * x) ** 2


def f1_derivative(x: np.ndarray) -> np.ndarray:
    s4 = np.sin(4 * np.pi * x)
    return 4.0 * np.cos(2 * np.pi * x) ** 2 - 8.0 * np.pi * x * s4 - 4.0 * np.pi * s4


def _sampled_max(values: np.ndarray) -> float:
    # largest neighbour change bounds what the sampling can miss
    margin = float(np.max(np.abs(np.diff(values, axis=0)))) if values.shape[0] > 1 else 0.0
    return float(values.max()) + margin


@functools.lru_cache(maxsize=None)
def f1_lipschitz() -> float:
    x = np.linspace(0.0, 1.0, LIPSCHITZ_SAMPLES)
    return _sampled_max(np.abs(f1_derivative(x)))


# ---------------------------------------------------------------------------
# FXY
# ---------------------------------------------------------------------------


def fxy(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    u = (2.0 * x1 - 1.0) * FXY_HALF_WIDTH
    v = (2.0 * x2 - 1.0) * FXY_HALF_WIDTH
    return 6.0 * u * np.exp(-(u**2) - v**2)


@functools.lru_cache(maxsize=None)
def fxy_lipschitz() -> float:
    """max ||grad f||_2 in unit-square coordinates."""
    side = int(math.isqrt(LIPSCHITZ_SAMPLES)) + 1
    t = np.linspace(-FXY_HALF_WIDTH, FXY_HALF_WIDTH, side)
    u, v = np.meshgrid(t, t, indexing="ij")
    e = np.exp(-(u**2) - v**2)
    du = 6.0 * e * (1.0 - 2.0 * u**2)
    dv = -12.0 * u * v * e
    norm = np.hypot(du, dv) * (2.0 * FXY_HALF_WIDTH)
    margin = max(np.abs(np.diff(norm, axis=0)).max(), np.abs(np.diff(norm, axis=1)).max())
    return float(norm.max() + margin)


# ---------------------------------------------------------------------------
# Bandlimited
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=64)
def bandlimited_weights(modes: int, seed: int) -> np.ndarray:
    """Gaussian (cos, sin) weights per mode, shape ``(modes, 2)``, largest magnitude 1."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    w = rng.standard_normal((modes, 2))
    w[0, 1] = 0.0  # sin(0) carries nothing
    w /= np.abs(w).max()
    w.setflags(write=False)
    return w


def _mode_phases(x: np.ndarray, modes: int) -> np.ndarray:
    return 2.0 * np.pi * np.asarray(x, dtype=np.float64)[:, None] * np.arange(modes)[None, :]


def bandlimited(x: np.ndarray, modes: int = 16, scale: float = 3.0, shift: float = 3.0, seed: int = 0) -> np.ndarray:
    """
    ``scale * sum_j (a_j cos(2 pi j x) + b_j sin(2 pi j x)) + shift`` over j = 0..modes-1.

    The spectrum of a sinc kernel is flat up to its cut-off, so the retained
    modes carry the Gaussian weights unshaped and nothing above ``modes - 1``.
    """
    w = bandlimited_weights(modes, seed)
    t = _mode_phases(x, modes)
    return scale * (np.cos(t) @ w[:, 0] + np.sin(t) @ w[:, 1]) + shift


def bandlimited_derivative(x: np.ndarray, modes: int = 16, scale: float = 3.0, seed: int = 0) -> np.ndarray:
    w = bandlimited_weights(modes, seed)
    t = _mode_phases(x, modes)
    j = 2.0 * np.pi * np.arange(modes)
    return scale * (np.cos(t) @ (j * w[:, 1]) - np.sin(t) @ (j * w[:, 0]))


@functools.lru_cache(maxsize=64)
def bandlimited_lipschitz(modes: int, scale: float, seed: int) -> float:
    x = np.linspace(0.0, 1.0, LIPSCHITZ_SAMPLES)
    return _sampled_max(np.abs(bandlimited_derivative(x, modes, scale, seed)))


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def sample_function(fn: FunctionSpec, spec: GridSpec) -> np.ndarray:
    """Clean samples ``f(x_i)`` in lexicographic grid order."""
    coords = spec.coordinates()
    kind = fn.kind
    if kind is FunctionKind.F1:
        if spec.d != 1:
            raise InvalidSpecError(f"f1 is univariate, got d={spec.d}")
        return f1(coords[:, 0])
    if kind is FunctionKind.BANDLIMITED:
        if spec.d != 1:
            raise InvalidSpecError(f"bandlimited function is univariate, got d={spec.d}")
        return bandlimited(coords[:, 0], fn.modes, fn.scale, fn.shift, fn.seed)
    if kind is FunctionKind.FXY:
        if spec.d != 2:
            raise InvalidSpecError(f"fxy is bivariate, got d={spec.d}")
        return fxy(coords[:, 0], coords[:, 1])
    if kind is FunctionKind.GRID_FILE:
        grid = read_grid(Path(fn.path))
        if spec.d != 2 or grid.shape != spec.shape:
            raise LengthMismatchError(f"grid file {fn.path} ({grid.shape[0]}x{grid.shape[1]}) vs grid", spec.n, grid.size)
        return fn.elevation_scale * grid.reshape(-1)
    raise InvalidSpecError(f"unknown function kind {kind!r}")


def grid_file_spec(path: str | Path, k: int) -> GridSpec:
    """``GridSpec`` matching a square grid file."""
    grid = read_grid(path)
    rows, cols = grid.shape
    if rows != cols:
        raise InvalidSpecError(f"non-square grids are not supported ({rows}x{cols})")
    return GridSpec(d=2, m=rows, k=k)
