"""
Angular embedding of modulo-1 residues onto the unit circle and back.

``embed`` maps r -> exp(2*pi*i*r); ``project_to_mod1`` reads the angle of an
arbitrary non-zero complex vector back into [0, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from solver.errors import DegenerateEntryError, InvalidSpecError, LengthMismatchError

TWO_PI = 2.0 * np.pi


def wrap_mod1(t: np.ndarray | float) -> np.ndarray:
    """``t mod 1`` into [0, 1), exact for negative inputs."""
    t = np.asarray(t, dtype=np.float64)
    r = t - np.floor(t)
    # t - floor(t) can round up to 1.0 for tiny negative t
    return np.where(r >= 1.0, 0.0, r)


@dataclass(frozen=True, eq=False)
class Mod1Samples:
    """Residues ``r_i = f(x_i) mod 1``, each in [0, 1)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if v.size and (not np.all(np.isfinite(v)) or v.min() < 0.0 or v.max() >= 1.0):
            bad = int(np.flatnonzero(~((v >= 0.0) & (v < 1.0)))[0])
            raise InvalidSpecError(f"residue {bad} = {v[bad]!r} is outside [0, 1)")
        object.__setattr__(self, "values", v)

    @classmethod
    def wrap(cls, f: np.ndarray) -> Mod1Samples:
        return cls(wrap_mod1(f))

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True, eq=False)
class CircleEmbedding:
    """Complex vector ``z`` (unit modulus when built by ``embed``) and its stacked [Re; Im] form."""

    z: np.ndarray

    @property
    def n(self) -> int:
        return int(self.z.shape[0])

    @property
    def stacked(self) -> np.ndarray:
        return np.concatenate([self.z.real, self.z.imag])

    @classmethod
    def from_stacked(cls, zbar: np.ndarray) -> CircleEmbedding:
        zbar = np.asarray(zbar, dtype=np.float64)
        if zbar.ndim != 1 or zbar.shape[0] % 2:
            raise LengthMismatchError("stacked embedding", 2 * (zbar.shape[0] // 2), zbar.shape[0])
        n = zbar.shape[0] // 2
        return cls(zbar[:n] + 1j * zbar[n:])


def embed(y: Mod1Samples) -> CircleEmbedding:
    theta = TWO_PI * y.values
    return CircleEmbedding(np.cos(theta) + 1j * np.sin(theta))


def project_to_mod1(g: np.ndarray) -> Mod1Samples:
    """Angle of each entry of ``g`` divided by 2*pi, in [0, 1). Magnitudes are ignored."""
    g = np.asarray(g)
    if not np.iscomplexobj(g):
        g = CircleEmbedding.from_stacked(g).z
    zero = np.flatnonzero(np.abs(g) == 0.0)
    if zero.size:
        raise DegenerateEntryError(int(zero[0]))
    t = np.arctan2(g.imag, g.real) / TWO_PI
    t = np.where(t < 0.0, t + 1.0, t)
    t = np.where(t >= 1.0, 0.0, t)
    return Mod1Samples(t)


def wrap_distance(t1: np.ndarray | float, t2: np.ndarray | float) -> np.ndarray | float:
    """Circle metric ``min(|t1-t2|, 1-|t1-t2|)`` on [0, 1], elementwise."""
    a = np.asarray(t1, dtype=np.float64)
    b = np.asarray(t2, dtype=np.float64)
    if a.shape != b.shape and a.ndim and b.ndim:
        raise LengthMismatchError("wrap_distance operands", a.size, b.size)
    for arr in (a, b):
        if np.any((arr < 0.0) | (arr > 1.0)) or not np.all(np.isfinite(arr)):
            raise InvalidSpecError("wrap_distance inputs must lie in [0, 1]")
    diff = np.abs(a - b)
    out = np.minimum(diff, 1.0 - diff)
    return float(out) if out.ndim == 0 else out


def wrap_distance_bound(epsilon: float) -> float:
    """Worst-case wrap distance between angles of g and h when |g_i - h_i| <= epsilon and |h_i| = 1."""
    if not 0.0 < epsilon < 0.5:
        raise InvalidSpecError(f"epsilon must lie in (0, 0.5), got {epsilon}")
    return math.asin(epsilon / (1.0 - epsilon)) / math.pi
