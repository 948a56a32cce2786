"""
Recover real-valued samples from residues, up to a global shift.

Two estimators:

* ``quotient_tracker`` walks a 1-D chain and adds one to the running quotient
  whenever consecutive residues drop by at least ``zeta``.
* ``ols_unwrap`` solves the edge-difference system
  ``f_i - f_j = sign_zeta(r_i - r_j) + r_i - r_j`` for every edge of the
  regularization graph in the minimum-norm least-squares sense. Its normal
  equations are ``L f = T^T b`` with L the unweighted graph Laplacian.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg

from solver.angular import Mod1Samples
from solver.errors import InvalidSpecError, LengthMismatchError, NumericalError, UnsupportedDimensionError
from solver.grid_graph import GridSpec, NeighborGraph, SparseLaplacian, build_laplacian

logger = logging.getLogger(__name__)

DEFAULT_ZETA = 0.5
DEFAULT_CG_RTOL = 1e-10


def _check_zeta(zeta: float):
    if not 0.0 < zeta < 1.0:
        raise InvalidSpecError(f"threshold zeta must lie in (0, 1), got {zeta}")


def sign_zeta(t: np.ndarray | float, zeta: float = DEFAULT_ZETA) -> np.ndarray | int:
    """-1 if t >= zeta, +1 if t <= -zeta, else 0."""
    _check_zeta(zeta)
    t = np.asarray(t, dtype=np.float64)
    out = np.where(t >= zeta, -1, np.where(t <= -zeta, 1, 0)).astype(np.int64)
    return int(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class UnwrapSystem:
    """One equation ``f_i - f_j = b`` per edge (i < j)."""

    edges: np.ndarray
    rhs: np.ndarray
    zeta: float
    n: int

    @classmethod
    def build(cls, r: Mod1Samples, graph: NeighborGraph, zeta: float = DEFAULT_ZETA) -> UnwrapSystem:
        _check_zeta(zeta)
        if r.n != graph.n:
            raise LengthMismatchError("residues", graph.n, r.n)
        i, j = graph.edges[:, 0], graph.edges[:, 1]
        diff = r.values[i] - r.values[j]
        return cls(edges=graph.edges, rhs=sign_zeta(diff, zeta) + diff, zeta=zeta, n=graph.n)

    def incidence(self) -> sp.csr_matrix:
        m = self.edges.shape[0]
        rows = np.repeat(np.arange(m), 2)
        cols = self.edges.reshape(-1)
        vals = np.tile([1.0, -1.0], m)
        return sp.csr_matrix((vals, (rows, cols)), shape=(m, self.n))

    def normal_rhs(self) -> np.ndarray:
        """``T^T b``."""
        i, j = self.edges[:, 0], self.edges[:, 1]
        return np.bincount(i, weights=self.rhs, minlength=self.n) - np.bincount(
            j, weights=self.rhs, minlength=self.n
        )

    def residual(self, f: np.ndarray) -> float:
        """``||T f - b||_2``."""
        i, j = self.edges[:, 0], self.edges[:, 1]
        return float(np.linalg.norm(f[i] - f[j] - self.rhs))


def quotient_tracker(r: Mod1Samples, zeta: float = DEFAULT_ZETA, spec: GridSpec | None = None) -> np.ndarray:
    """Sequential unwrap of a 1-D chain; ``f_0 = r_0``."""
    if spec is not None and spec.d > 1:
        raise UnsupportedDimensionError("quotient tracker requires d=1")
    _check_zeta(zeta)
    values = r.values
    steps = sign_zeta(np.diff(values), zeta)
    quotients = np.concatenate([[0], np.cumsum(steps)])
    return quotients.astype(np.float64) + values


def _laplacian_solve(lap: SparseLaplacian, rhs: np.ndarray, rtol: float) -> np.ndarray:
    """Mean-zero solution of the consistent singular system ``L f = rhs``."""
    bnorm = float(np.linalg.norm(rhs))
    if bnorm == 0.0:
        return np.zeros_like(rhs)
    precond = sp.diags(1.0 / lap.diagonal)
    maxiter = 20 * lap.n
    f = np.zeros_like(rhs)
    # one refinement pass on the true residual
    for _ in range(2):
        res = rhs - lap.matrix @ f
        rnorm = float(np.linalg.norm(res))
        if rnorm <= 1e-15 * bnorm:
            break
        res -= res.mean()
        delta, info = cg(lap.matrix, res, rtol=rtol, atol=0.0, maxiter=maxiter, M=precond)
        if info != 0:
            residual = float(np.linalg.norm(lap.matrix @ (f + delta) - rhs)) / bnorm
            logger.warning("unwrap solve did not converge (info=%d)", info)
            raise NumericalError("least-squares unwrap solve failed", residual, maxiter)
        f = f + delta
        f -= f.mean()
    return f


def ols_unwrap(
    r: Mod1Samples,
    graph: NeighborGraph,
    zeta: float = DEFAULT_ZETA,
    laplacian: SparseLaplacian | None = None,
    rtol: float = DEFAULT_CG_RTOL,
) -> np.ndarray:
    """Minimum-norm least-squares solution of the edge-difference system (mean zero)."""
    system = UnwrapSystem.build(r, graph, zeta)
    lap = laplacian if laplacian is not None else build_laplacian(graph)
    f = _laplacian_solve(lap, system.normal_rhs(), rtol)
    logger.debug("OLS unwrap: n=%d, residual %.3e", system.n, system.residual(f))
    return f


def unwrap(
    r: Mod1Samples,
    graph: NeighborGraph,
    method: str = "ols",
    zeta: float = DEFAULT_ZETA,
    laplacian: SparseLaplacian | None = None,
    rtol: float = DEFAULT_CG_RTOL,
) -> np.ndarray:
    """Dispatch on ``method`` in {"ols", "qt"}."""
    if method == "ols":
        return ols_unwrap(r, graph, zeta, laplacian=laplacian, rtol=rtol)
    if method == "qt":
        return quotient_tracker(r, zeta, graph.spec)
    raise InvalidSpecError(f"unknown unwrap method {method!r} (expected 'ols' or 'qt')")
