"""
Sample grid, k-neighbourhood regularization graph and its sparse Laplacian.

Vertices of a d-dimensional grid with ``m`` points per axis are flattened in
lexicographic (row-major) order. Two vertices are joined when their index
tuples differ by at most ``k`` in the Chebyshev (l-infinity) metric.

No solver dependency; safe to use from scripts, notebooks and tests.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from solver.errors import DisconnectedGraphError, InvalidSpecError, LengthMismatchError

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Data model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Regular grid on [0,1]^d with ``m`` points per axis and neighbourhood radius ``k``."""

    d: int
    m: int
    k: int

    def __post_init__(self):
        if self.d < 1:
            raise InvalidSpecError(f"dimension d must be >= 1, got {self.d}")
        if self.m < 2:
            raise InvalidSpecError(f"points per axis m must be >= 2, got {self.m}")
        if self.k < 1:
            raise InvalidSpecError(f"neighbourhood radius k must be >= 1, got {self.k}")
        if self.k >= self.m:
            raise InvalidSpecError(f"radius k={self.k} must be < m={self.m}")

    @classmethod
    def chain(cls, n: int, k: int) -> GridSpec:
        """Univariate grid of ``n`` samples (m = n)."""
        return cls(d=1, m=n, k=k)

    @classmethod
    def from_count(cls, n: int, d: int, k: int) -> GridSpec:
        """Square grid holding ``n`` samples; ``n`` must be a perfect d-th power."""
        if d < 1:
            raise InvalidSpecError(f"dimension d must be >= 1, got {d}")
        m = int(round(n ** (1.0 / d)))
        # guard against float rounding on the root
        for cand in (m - 1, m, m + 1):
            if cand >= 1 and cand**d == n:
                return cls(d=d, m=cand, k=k)
        raise InvalidSpecError(
            f"{n} samples do not form a square {d}-D grid (non-square grids are not supported)"
        )

    @property
    def n(self) -> int:
        return self.m**self.d

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.m,) * self.d

    def with_radius(self, k: int) -> GridSpec:
        return GridSpec(d=self.d, m=self.m, k=k)

    def coordinates(self) -> np.ndarray:
        """Grid coordinates, shape (n, d), x = (i-1)/(m-1) per axis, lexicographic order."""
        axis = np.linspace(0.0, 1.0, self.m)
        mesh = np.meshgrid(*([axis] * self.d), indexing="ij")
        return np.stack([g.reshape(-1) for g in mesh], axis=1)

    def __str__(self) -> str:
        return f"GridSpec(d={self.d}, m={self.m}, n={self.n}, k={self.k})"


@dataclass(frozen=True, eq=False)
class NeighborGraph:
    """Undirected graph as a sorted edge list with ``i < j`` per row."""

    n: int
    edges: np.ndarray  # (E, 2) int64
    degrees: np.ndarray  # (n,) int64
    spec: GridSpec | None = None

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    def adjacency(self) -> sp.csr_matrix:
        i, j = self.edges[:, 0], self.edges[:, 1]
        ones = np.ones(self.num_edges, dtype=np.float64)
        a = sp.coo_matrix((ones, (i, j)), shape=(self.n, self.n))
        return (a + a.T).tocsr()


@dataclass(frozen=True, eq=False)
class SparseLaplacian:
    """Unweighted graph Laplacian ``L = D - A`` in CSR form."""

    n: int
    matrix: sp.csr_matrix
    _diag: np.ndarray = field(repr=False, default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self._diag is None:
            object.__setattr__(self, "_diag", self.matrix.diagonal().copy())

    @property
    def diagonal(self) -> np.ndarray:
        return self._diag

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """``L @ x``; ``x`` may be (n,) or (n, p), real or complex."""
        if x.shape[0] != self.n:
            raise LengthMismatchError("Laplacian matvec", self.n, x.shape[0])
        return self.matrix @ x

    def gershgorin_bound(self) -> float:
        """Upper bound on the largest eigenvalue: every disc lies in [0, 2 max deg]."""
        return 2.0 * float(self._diag.max()) if self.n else 0.0

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass(frozen=True)
class SpectralBounds:
    lambda_max_upper: float
    fiedler_lower: float
    kappa: int


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def _positive_offsets(d: int, k: int) -> np.ndarray:
    """Non-zero offsets in {-k..k}^d whose first non-zero coordinate is positive."""
    span = np.arange(-k, k + 1)
    mesh = np.meshgrid(*([span] * d), indexing="ij")
    offs = np.stack([g.reshape(-1) for g in mesh], axis=1)
    nonzero = offs != 0
    first = np.argmax(nonzero, axis=1)
    lead = offs[np.arange(offs.shape[0]), first]
    return offs[nonzero.any(axis=1) & (lead > 0)]


def build_graph(spec: GridSpec) -> NeighborGraph:
    """Chebyshev k-neighbourhood graph of the grid, edges sorted lexicographically."""
    d, m, n = spec.d, spec.m, spec.n
    strides = np.array([m ** (d - 1 - a) for a in range(d)], dtype=np.int64)
    heads, tails = [], []
    for off in _positive_offsets(d, spec.k):
        ranges = [np.arange(max(0, -o), m - max(0, o), dtype=np.int64) for o in off]
        if any(r.size == 0 for r in ranges):
            continue
        mesh = np.meshgrid(*ranges, indexing="ij")
        src = sum(g.reshape(-1) * s for g, s in zip(mesh, strides))
        heads.append(src)
        tails.append(src + int(np.dot(off, strides)))
    i = np.concatenate(heads)
    j = np.concatenate(tails)
    order = np.lexsort((j, i))
    edges = np.stack([i[order], j[order]], axis=1)
    degrees = np.bincount(edges[:, 0], minlength=n) + np.bincount(edges[:, 1], minlength=n)
    logger.debug("built %s with %d edges", spec, edges.shape[0])
    return NeighborGraph(n=n, edges=edges, degrees=degrees.astype(np.int64), spec=spec)


def build_laplacian(graph: NeighborGraph) -> SparseLaplacian:
    """``L_ii = deg(i)``, ``L_ij = -1`` on edges. Requires a connected graph."""
    adj = graph.adjacency()
    ncomp, _ = connected_components(adj, directed=False)
    if ncomp != 1:
        raise DisconnectedGraphError(ncomp)
    deg = np.asarray(adj.sum(axis=1)).ravel()
    lap = (sp.diags(deg) - adj).tocsr()
    lap.sort_indices()
    return SparseLaplacian(n=graph.n, matrix=lap)


def laplacian_quadform(lap: SparseLaplacian, x: np.ndarray) -> float:
    """``x^T L x = sum over edges (x_i - x_j)^2``; for complex x, ``Re(x^* L x)``."""
    x = np.asarray(x)
    if x.shape != (lap.n,):
        raise LengthMismatchError("quadform vector", lap.n, x.shape[0] if x.ndim else 0)
    if np.iscomplexobj(x):
        return laplacian_quadform(lap, x.real) + laplacian_quadform(lap, x.imag)
    value = float(x @ (lap.matrix @ x))
    return max(value, 0.0)


def spectral_bounds(spec: GridSpec) -> SpectralBounds:
    """Gershgorin upper bound on beta_n(L) and Fiedler-type lower bound on beta_2(L)."""
    d, k, n = spec.d, spec.k, spec.n
    if d == 1:
        lam_max = 4.0 * k
        kappa = k
    else:
        lam_max = 2.0 * ((2 * k + 1) ** d - 1)
        kappa = (k + 1) ** d - 1
    fiedler = 4.0 * kappa * math.sin(math.pi / (2 * n)) ** 2
    return SpectralBounds(lambda_max_upper=lam_max, fiedler_lower=fiedler, kappa=kappa)
