"""
Equality-constrained trust-region subproblem on the stacked circle embedding.

    minimize    g^T H g - 2 g^T zbar
    subject to  ||g||^2 = n,            H = diag(lam*L, lam*L)

The null space of H is spanned by q1 = [1;0]/sqrt(n) and q2 = [0;1]/sqrt(n), so
the case split is decided by two sums. The secular function

    phi(mu) = ||2 (2H + mu I)^{-1} zbar||^2

is evaluated matrix-free with Jacobi-preconditioned conjugate gradients; the
multiplier mu* is found by safeguarded Newton on 1/sqrt(phi) with bisection
fallback inside a bracket that is known in closed form.

``solve_trs_dense`` solves the same problem from a dense eigendecomposition of
L and is the reference used by the tests.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh
from scipy.optimize import brentq
from scipy.sparse.linalg import cg

from solver.errors import BracketError, InvalidSpecError, LengthMismatchError, NumericalError
from solver.grid_graph import SparseLaplacian, laplacian_quadform

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
PERP_TOL = 1e-10  # times n, on c1^2 + c2^2
MAX_ROOT_ITERATIONS = 200
DENSE_LIMIT = 2000


class TrsCase(Enum):
    EASY_NOT_PERP = "EasyNotPerp"
    PERP_INTERIOR = "PerpInterior"
    HARD_CASE = "HardCase"

    def __str__(self) -> str:
        return self.value


# ---------------------------------------------------------------------------
# Data model
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TrsProblem:
    """``H = diag(lam*L, lam*L)`` and the stacked embedding ``zbar`` of length 2n.

    ``beta2_lower`` is any lower bound on the Fiedler value of L; it tightens
    the bracket of the perpendicular case and defaults to the trivial 0.
    """

    laplacian: SparseLaplacian
    lam: float
    zbar: np.ndarray
    beta2_lower: float = 0.0

    def __post_init__(self):
        if not (self.lam >= 0.0 and math.isfinite(self.lam)):
            raise InvalidSpecError(f"regularization weight lambda must be >= 0, got {self.lam}")
        zbar = np.asarray(self.zbar, dtype=np.float64).reshape(-1)
        if zbar.shape[0] != 2 * self.laplacian.n:
            raise LengthMismatchError("stacked embedding zbar", 2 * self.laplacian.n, zbar.shape[0])
        if self.beta2_lower < 0.0:
            raise InvalidSpecError(f"beta2_lower must be >= 0, got {self.beta2_lower}")
        object.__setattr__(self, "zbar", zbar)

    @property
    def n(self) -> int:
        return self.laplacian.n

    def split(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return x[: self.n], x[self.n :]

    def objective(self, gbar: np.ndarray) -> float:
        re, im = self.split(gbar)
        quad = laplacian_quadform(self.laplacian, re) + laplacian_quadform(self.laplacian, im)
        return self.lam * quad - 2.0 * float(gbar @ self.zbar)


@dataclass(frozen=True, eq=False)
class TrsSolution:
    gbar: np.ndarray
    mu_star: float
    case_tag: TrsCase
    kkt_residual: float
    norm_residual: float
    objective: float
    iterations: int = 0


@dataclass(frozen=True)
class KktReport:
    norm_gap: float
    stationarity_residual: float
    psd_margin: float

    def ok(self, n: int, tol: float = DEFAULT_TOL) -> bool:
        """Within the acceptance tolerances of ``solve_trs``."""
        return (
            self.norm_gap <= 10.0 * n * tol
            and self.stationarity_residual <= max(tol, 1e-6) * math.sqrt(n)
            and self.psd_margin >= 0.0
        )


# ---------------------------------------------------------------------------
# Matrix-free building blocks
# ---------------------------------------------------------------------------


def apply_shifted(problem: TrsProblem, mu: float, x: np.ndarray) -> np.ndarray:
    """``(2H + mu I) x`` with two sparse Laplacian products."""
    if mu < 0.0:
        raise InvalidSpecError(f"shift mu must be >= 0, got {mu}")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (2 * problem.n,):
        raise LengthMismatchError("stacked vector", 2 * problem.n, x.shape[0] if x.ndim else 0)
    cols = x.reshape(2, problem.n).T
    lx = problem.laplacian.matvec(cols).T.reshape(-1)
    return 2.0 * problem.lam * lx + mu * x


def null_coefficients(problem: TrsProblem) -> Tuple[float, float]:
    """Components of ``zbar`` along q1 = [1;0]/sqrt(n) and q2 = [0;1]/sqrt(n)."""
    re, im = problem.split(problem.zbar)
    root_n = math.sqrt(problem.n)
    return float(re.sum() / root_n), float(im.sum() / root_n)


def is_perpendicular(problem: TrsProblem) -> bool:
    c1, c2 = null_coefficients(problem)
    return c1 * c1 + c2 * c2 <= PERP_TOL * problem.n


def _project_out_constants(problem: TrsProblem, x: np.ndarray) -> np.ndarray:
    re, im = problem.split(x)
    return np.concatenate([re - re.mean(), im - im.mean()])


def _shifted_solve(problem: TrsProblem, mu: float, rhs: np.ndarray, rtol: float) -> np.ndarray:
    """Solve ``(2H + mu I) x = rhs`` blockwise by Jacobi-preconditioned CG.

    With ``mu = 0`` the right-hand side must be mean-zero per block; the
    returned solution then has its constant modes removed (minimum norm).
    """
    n = problem.n
    op = (2.0 * problem.lam) * problem.laplacian.matrix
    if mu:
        op = op + mu * sp.identity(n, format="csr")
    diag = 2.0 * problem.lam * problem.laplacian.diagonal + mu
    precond = sp.diags(np.where(diag > 0.0, 1.0 / diag, 1.0))
    out = np.empty(2 * n)
    maxiter = 20 * n
    for block in range(2):
        b = rhs[block * n : (block + 1) * n]
        bnorm = float(np.linalg.norm(b))
        if bnorm == 0.0:
            out[block * n : (block + 1) * n] = 0.0
            continue
        x, info = cg(op, b, rtol=rtol, atol=0.0, maxiter=maxiter, M=precond)
        if info != 0:
            residual = float(np.linalg.norm(op @ x - b)) / bnorm
            logger.warning("CG did not converge at mu=%.6g (info=%d)", mu, info)
            raise NumericalError(
                f"shifted Laplacian solve failed at mu={mu:.6g}", residual, info if info > 0 else maxiter
            )
        if mu == 0.0:
            x = x - x.mean()
        out[block * n : (block + 1) * n] = x
    return out


class _Secular:
    """phi(mu) and its derivative for a fixed right-hand side, caching the last solve."""

    def __init__(self, problem: TrsProblem, zbar: np.ndarray, tol: float):
        self.problem = problem
        self.zbar = zbar
        self.rtol = tol / 100.0
        self.evaluations = 0

    def g(self, mu: float) -> np.ndarray:
        self.evaluations += 1
        return _shifted_solve(self.problem, mu, 2.0 * self.zbar, self.rtol)

    def phi_and_slope(self, mu: float) -> Tuple[float, float, np.ndarray]:
        gbar = self.g(mu)
        # phi'(mu) = -2 g^T (2H + mu I)^{-1} g
        w = _shifted_solve(self.problem, mu, gbar, self.rtol)
        return float(gbar @ gbar), -2.0 * float(gbar @ w), gbar


def phi(problem: TrsProblem, mu: float, tol: float = DEFAULT_TOL) -> float:
    """``||2 (2H + mu I)^{-1} zbar||^2``; ``mu = 0`` needs zbar perpendicular to N(H)."""
    if mu < 0.0:
        raise InvalidSpecError(f"phi is only defined for mu >= 0, got {mu}")
    zbar = problem.zbar
    if mu == 0.0:
        if problem.lam == 0.0 or not is_perpendicular(problem):
            raise InvalidSpecError("phi(0) requires lambda > 0 and zbar perpendicular to N(H)")
        zbar = _project_out_constants(problem, zbar)
    g = _shifted_solve(problem, mu, 2.0 * zbar, tol / 100.0)
    return float(g @ g)


# ---------------------------------------------------------------------------
# Root finding
# ---------------------------------------------------------------------------


def _find_multiplier(
    sec: _Secular, lo: float, hi: float, phi_lo: float, tol: float
) -> Tuple[float, np.ndarray, int]:
    """Root of phi(mu) = n inside [lo, hi] with phi(lo) >= n (possibly +inf)."""
    n = sec.problem.n
    phi_hi, slope_hi, g_hi = sec.phi_and_slope(hi)
    if abs(phi_hi - n) <= n * tol:
        return hi, g_hi, 1
    if phi_hi > n or phi_lo < n:
        raise BracketError("secular equation root is not bracketed", [lo, hi], [phi_lo, phi_hi])

    mu, phi_mu, slope, gbar = hi, phi_hi, slope_hi, g_hi
    target = 1.0 / math.sqrt(n)
    for it in range(1, MAX_ROOT_ITERATIONS + 1):
        if phi_mu > n:
            lo = mu
        else:
            hi = mu
        # Newton on psi(mu) = 1/sqrt(phi) - 1/sqrt(n)
        psi = 1.0 / math.sqrt(phi_mu) - target
        dpsi = -0.5 * phi_mu**-1.5 * slope
        cand = mu - psi / dpsi if dpsi != 0.0 else math.nan
        if not (lo < cand < hi):
            cand = 0.5 * (lo + hi)
        mu = cand
        phi_mu, slope, gbar = sec.phi_and_slope(mu)
        logger.debug("root iteration %d: mu=%.12g phi=%.12g", it, mu, phi_mu)
        if abs(phi_mu - n) <= n * tol or hi - lo <= 4.0 * np.finfo(float).eps * hi:
            return mu, gbar, it + 1
    logger.warning("secular root finder stopped after %d iterations", MAX_ROOT_ITERATIONS)
    return mu, gbar, MAX_ROOT_ITERATIONS + 1


def _finish(problem: TrsProblem, gbar: np.ndarray, mu: float, case: TrsCase, iterations: int) -> TrsSolution:
    kkt = float(np.linalg.norm(apply_shifted(problem, mu, gbar) - 2.0 * problem.zbar))
    return TrsSolution(
        gbar=gbar,
        mu_star=float(mu),
        case_tag=case,
        kkt_residual=kkt,
        norm_residual=abs(float(gbar @ gbar) - problem.n),
        objective=problem.objective(gbar),
        iterations=iterations,
    )


def solve_trs(problem: TrsProblem, tol: float = DEFAULT_TOL) -> TrsSolution:
    """Global minimizer of the sphere-constrained quadratic, with case tag and residuals."""
    if tol <= 0.0:
        raise InvalidSpecError(f"tol must be > 0, got {tol}")
    n = problem.n
    zbar = problem.zbar

    if problem.lam == 0.0:
        # H = 0: maximize <g, zbar> on the sphere
        gbar = zbar * (math.sqrt(n) / np.linalg.norm(zbar))
        return _finish(problem, gbar, 2.0, TrsCase.EASY_NOT_PERP, 0)

    c1, c2 = null_coefficients(problem)
    c_sq = c1 * c1 + c2 * c2
    if c_sq > PERP_TOL * n:
        # phi(mu) >= 4 c^2 / mu^2, so phi(c/sqrt(n)) >= 4n
        lo = min(2.0, math.sqrt(c_sq / n))
        logger.debug("easy case, c^2=%.6g, bracket [%.6g, 2]", c_sq, lo)
        sec = _Secular(problem, zbar, tol)
        mu, gbar, its = _find_multiplier(sec, lo, 2.0, math.inf, tol)
        return _finish(problem, gbar, mu, TrsCase.EASY_NOT_PERP, its)

    zp = _project_out_constants(problem, zbar)
    sec = _Secular(problem, zp, tol)
    g0 = sec.g(0.0)
    phi0 = float(g0 @ g0)
    if phi0 > n * (1.0 + tol):
        hi = 2.0 - 2.0 * problem.lam * problem.beta2_lower
        if hi <= 0.0:
            hi = 2.0
        logger.debug("perpendicular case, phi(0)=%.6g > n, bracket (0, %.6g]", phi0, hi)
        mu, gbar, its = _find_multiplier(sec, 0.0, hi, phi0, tol)
        return _finish(problem, gbar, mu, TrsCase.PERP_INTERIOR, its)

    # g = H^+ zbar + theta q1, theta = sqrt(n - phi(0))
    theta = math.sqrt(max(n - phi0, 0.0))
    gbar = g0.copy()
    gbar[:n] += theta / math.sqrt(n)
    logger.debug("hard case, phi(0)=%.6g, theta=%.6g", phi0, theta)
    return _finish(problem, gbar, 0.0, TrsCase.HARD_CASE, 1)


def verify_kkt(problem: TrsProblem, solution: TrsSolution) -> KktReport:
    gbar = solution.gbar
    residual = apply_shifted(problem, solution.mu_star, gbar) - 2.0 * problem.zbar
    return KktReport(
        norm_gap=abs(float(gbar @ gbar) - problem.n),
        stationarity_residual=float(np.linalg.norm(residual)),
        psd_margin=solution.mu_star,
    )


# ---------------------------------------------------------------------------
# Dense reference solver
# ---------------------------------------------------------------------------


def solve_trs_dense(problem: TrsProblem) -> TrsSolution:
    """Same case analysis from the eigendecomposition of L. Only for n <= 2000."""
    n = problem.n
    if n > DENSE_LIMIT:
        raise InvalidSpecError(f"dense TRS oracle limited to n <= {DENSE_LIMIT}, got {n}")
    if problem.lam == 0.0:
        return solve_trs(problem)

    beta, vecs = eigh(problem.laplacian.dense())
    beta = np.clip(beta, 0.0, None)
    beta[0] = 0.0
    re, im = problem.split(problem.zbar)
    a = vecs.T @ re
    b = vecs.T @ im
    weights = a * a + b * b
    lam_beta = 2.0 * problem.lam * beta

    def expand(mu: float, idx: slice) -> np.ndarray:
        scale = 2.0 / (lam_beta[idx] + mu)
        return np.concatenate([vecs[:, idx] @ (scale * a[idx]), vecs[:, idx] @ (scale * b[idx])])

    def secular(mu: float, idx: slice) -> float:
        return float(4.0 * np.sum(weights[idx] / (lam_beta[idx] + mu) ** 2)) - n

    if weights[0] > PERP_TOL * n:
        lo, hi = min(2.0, math.sqrt(weights[0] / n)), 2.0
        full = slice(0, n)
        if secular(hi, full) >= 0.0:
            mu = hi
        else:
            mu = brentq(secular, lo, hi, args=(full,), xtol=1e-15, rtol=4 * np.finfo(float).eps)
        return _finish(problem, expand(mu, full), mu, TrsCase.EASY_NOT_PERP, 0)

    rest = slice(1, n)
    phi0 = secular(0.0, rest) + n
    if phi0 > n:
        hi = 2.0 - lam_beta[1]
        mu = brentq(secular, 0.0, hi, args=(rest,), xtol=1e-15, rtol=4 * np.finfo(float).eps)
        return _finish(problem, expand(mu, rest), mu, TrsCase.PERP_INTERIOR, 0)

    gbar = np.concatenate(
        [vecs[:, rest] @ (a[rest] / (0.5 * lam_beta[rest])), vecs[:, rest] @ (b[rest] / (0.5 * lam_beta[rest]))]
    )
    gbar[:n] += math.sqrt(max(n - phi0, 0.0)) / math.sqrt(n)
    return _finish(problem, gbar, 0.0, TrsCase.HARD_CASE, 0)
