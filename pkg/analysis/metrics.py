"""
Error metrics for denoised residues and unwrapped samples.

The unwrapped estimate is only defined up to a global shift; ``mod_out_shift``
estimates it as the mode of the per-sample offsets after binning them into a
fixed number of equal-width bins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterable

import numpy as np

from solver.angular import CircleEmbedding, Mod1Samples, embed, wrap_distance, wrap_mod1
from solver.errors import LengthMismatchError

SHIFT_BINS = 100


@dataclass(frozen=True, eq=False)
class ShiftAlignment:
    shift: float
    bin_width: float
    aligned: np.ndarray  # f_hat + shift


def _same_length(what: str, a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape:
        raise LengthMismatchError(what, a.shape[0], b.shape[0])


def mod_out_shift(f_true: np.ndarray, f_hat: np.ndarray, bins: int = SHIFT_BINS) -> ShiftAlignment:
    """Global shift as the centre of the modal histogram bin of ``f_true - f_hat``."""
    f_true = np.asarray(f_true, dtype=np.float64)
    f_hat = np.asarray(f_hat, dtype=np.float64)
    _same_length("mod_out_shift", f_true, f_hat)
    offsets = f_true - f_hat
    median = float(np.median(offsets))
    lo, hi = float(offsets.min()), float(offsets.max())
    if hi - lo <= 1e-12 * max(1.0, abs(median)):
        return ShiftAlignment(shift=median, bin_width=0.0, aligned=f_hat + median)
    counts, edges = np.histogram(offsets, bins=bins, range=(lo, hi))
    centers = 0.5 * (edges[:-1] + edges[1:])
    modal = np.flatnonzero(counts == counts.max())
    # ties go to the bin nearest the median offset
    best = modal[np.argmin(np.abs(centers[modal] - median))]
    shift = float(centers[best])
    return ShiftAlignment(shift=shift, bin_width=float(edges[1] - edges[0]), aligned=f_hat + shift)


def rmse(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _same_length("rmse", a, b)
    return float(np.sqrt(np.mean((a - b) ** 2)))


def wrap_rmse(a: Mod1Samples | np.ndarray, b: Mod1Samples | np.ndarray) -> float:
    """RMSE in the wrap-around distance; always <= 0.5."""
    a = a.values if isinstance(a, Mod1Samples) else np.asarray(a, dtype=np.float64)
    b = b.values if isinstance(b, Mod1Samples) else np.asarray(b, dtype=np.float64)
    _same_length("wrap_rmse", a, b)
    return float(np.sqrt(np.mean(wrap_distance(a, b) ** 2)))


def clean_embedding(f: np.ndarray) -> CircleEmbedding:
    """``h = exp(2 pi i f)`` of clean samples."""
    return embed(Mod1Samples(wrap_mod1(f)))


def correlation(h_clean: CircleEmbedding, g_hat: np.ndarray) -> float:
    """``<h_bar, g_bar> / n``."""
    h = h_clean.stacked
    g_hat = np.asarray(g_hat, dtype=np.float64)
    _same_length("correlation", h, g_hat)
    return float(h @ g_hat) / h_clean.n


def realized_delta(clean: np.ndarray | CircleEmbedding, noisy: Mod1Samples) -> float:
    """``||z_bar - h_bar||_2 / sqrt(n)``."""
    h = clean if isinstance(clean, CircleEmbedding) else clean_embedding(clean)
    z = embed(noisy)
    _same_length("realized_delta", h.z, z.z)
    return float(np.linalg.norm(z.z - h.z)) / math.sqrt(h.n)


def summarize(values: Iterable[float]) -> Dict[str, float]:
    """Count, median, quartiles and IQR of the finite entries."""
    x = np.asarray(list(values), dtype=np.float64)
    finite = x[np.isfinite(x)]
    if finite.size == 0:
        return dict(count=0, median=math.nan, p25=math.nan, p75=math.nan, iqr=math.nan)
    p25, p50, p75 = np.percentile(finite, [25, 50, 75])
    return dict(
        count=int(finite.size),
        median=float(p50),
        p25=float(p25),
        p75=float(p75),
        iqr=float(p75 - p25),
    )
