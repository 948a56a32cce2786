"""
First-order Riemannian solvers for the unit-modulus QCQP

    minimize  lam * g^* L g - 2 Re(g^* z)   over |g_i| = 1

directly on the product of circles (``solve_phases``), and for its SDP
relaxation through the Burer-Monteiro factor pair (Y, v) with unit rows and
unit norm (``solve_burer_monteiro``).

Both use Armijo backtracking with a normalization retraction, so every iterate
is feasible and accepted steps never increase the objective. Trial steps start
from the Barzilai-Borwein estimate of the last iteration. Setting
``SolverOptions.accelerate`` switches the search direction to Polak-Ribiere+
conjugate gradients (projection transport, restart when not a descent
direction).

The Burer-Monteiro phases are polished by a final descent on the circles, and
``solve_phases`` keeps the better of the runs started at z and at the rounded
TRS minimizer.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from solver.angular import CircleEmbedding, Mod1Samples, embed
from solver.errors import DegenerateRoundingError, InvalidSpecError, LengthMismatchError, Mod1Error
from solver.grid_graph import SparseLaplacian, laplacian_quadform
from solver.trs import TrsProblem, solve_trs

logger = logging.getLogger(__name__)

Point = Tuple[np.ndarray, ...]

MAX_STEP_RATIO = 1e3  # cap on the Barzilai-Borwein step, in units of the initial step


# ---------------------------------------------------------------------------
# Data model
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PhaseProblem:
    """Circle-constrained form of the denoising problem: Laplacian, weight and noisy embedding ``z``."""

    laplacian: SparseLaplacian
    lam: float
    z: np.ndarray

    def __post_init__(self):
        if self.lam < 0.0:
            raise InvalidSpecError(f"regularization weight lambda must be >= 0, got {self.lam}")
        z = np.asarray(self.z, dtype=np.complex128).reshape(-1)
        if z.shape[0] != self.laplacian.n:
            raise LengthMismatchError("embedding z", self.laplacian.n, z.shape[0])
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return self.laplacian.n

    @classmethod
    def from_samples(cls, laplacian: SparseLaplacian, lam: float, y: Mod1Samples) -> PhaseProblem:
        return cls(laplacian, lam, embed(y).z)

    @classmethod
    def from_trs(cls, problem: TrsProblem) -> PhaseProblem:
        return cls(problem.laplacian, problem.lam, CircleEmbedding.from_stacked(problem.zbar).z)


@dataclass(frozen=True)
class SolverOptions:
    max_iterations: int = 2000
    tolerance: float = 1e-6  # on ||grad|| / sqrt(n)
    armijo_c: float = 1e-4
    shrink: float = 0.5
    initial_step: Optional[float] = None  # None: 1 / (lam * 2 max deg + 2)
    min_step: float = 1e-16
    seed: int = 0
    accelerate: bool = False

    def __post_init__(self):
        if self.max_iterations < 0:
            raise InvalidSpecError(f"max_iterations must be >= 0, got {self.max_iterations}")
        for name in ("tolerance", "armijo_c", "min_step"):
            if not getattr(self, name) > 0.0:
                raise InvalidSpecError(f"{name} must be > 0, got {getattr(self, name)}")
        if not 0.0 < self.shrink < 1.0:
            raise InvalidSpecError(f"shrink must lie in (0, 1), got {self.shrink}")
        if self.armijo_c >= 1.0:
            raise InvalidSpecError(f"armijo_c must be < 1, got {self.armijo_c}")
        if self.initial_step is not None and self.initial_step <= 0.0:
            raise InvalidSpecError(f"initial_step must be > 0, got {self.initial_step}")


@dataclass
class SolverInfo:
    iterations: int = 0
    converged: bool = False
    line_search_failed: bool = False
    grad_norm: float = math.nan
    objective_history: List[float] = field(default_factory=list)

    @property
    def objective(self) -> float:
        return self.objective_history[-1] if self.objective_history else math.nan


@dataclass(frozen=True, eq=False)
class BmState:
    """Burer-Monteiro factors: ``Y`` (n x p) with unit rows and ``v`` (p,) with unit norm."""

    Y: np.ndarray
    v: np.ndarray

    @property
    def p(self) -> int:
        return int(self.Y.shape[1])

    def constraint_residual(self) -> float:
        rows = np.abs(np.einsum("ij,ij->i", self.Y, self.Y.conj()).real - 1.0)
        return float(max(rows.max(initial=0.0), abs(np.vdot(self.v, self.v).real - 1.0)))


@dataclass(frozen=True, eq=False)
class PhaseState:
    """Unit-modulus phase vector with the run that produced it."""

    g: np.ndarray
    info: SolverInfo = field(default_factory=SolverInfo)
    factors: Optional[BmState] = None
    factor_info: Optional[SolverInfo] = None  # Burer-Monteiro run before polishing

    @property
    def n(self) -> int:
        return int(self.g.shape[0])


# ---------------------------------------------------------------------------
# Objective and gradients on the product of circles
# ---------------------------------------------------------------------------


def objective(problem: PhaseProblem, g: np.ndarray) -> float:
    g = g.g if isinstance(g, PhaseState) else g
    return problem.lam * laplacian_quadform(problem.laplacian, g) - 2.0 * float(np.vdot(g, problem.z).real)


def euclidean_gradient(problem: PhaseProblem, g: np.ndarray) -> np.ndarray:
    return 2.0 * problem.lam * problem.laplacian.matvec(g) - 2.0 * problem.z


def _project_circles(g: np.ndarray, e: np.ndarray) -> np.ndarray:
    return e - (e * g.conj()).real * g


def riemannian_gradient(problem: PhaseProblem, g: np.ndarray) -> np.ndarray:
    """Euclidean gradient with the radial part removed entrywise: Re(grad_i conj(g_i)) = 0."""
    g = g.g if isinstance(g, PhaseState) else g
    return _project_circles(g, euclidean_gradient(problem, g))


def normalize_entries(g: np.ndarray) -> np.ndarray:
    mag = np.abs(g)
    zero = np.flatnonzero(mag == 0.0)
    if zero.size:
        raise DegenerateRoundingError(int(zero[0]))
    return g / mag


def _inner(a: Point, b: Point) -> float:
    return float(sum(np.vdot(x, y).real for x, y in zip(a, b)))


def _riemannian_descent(
    x: Point,
    cost: Callable[[Point], float],
    rgrad: Callable[[Point], Point],
    retract: Callable[[Point, Point, float], Point],
    project: Callable[[Point, Point], Point],
    opts: SolverOptions,
    step0: float,
    scale: float,
    label: str,
) -> Tuple[Point, SolverInfo]:
    """
    Armijo backtracking descent shared by both manifolds. ``scale`` is sqrt(n).

    Each line search starts from the Barzilai-Borwein step of the previous
    iteration, clipped to [step0, MAX_STEP_RATIO * step0]. When a conjugate
    direction fails to give any decrease the search restarts along the
    negative gradient before giving up.
    """
    info = SolverInfo()
    f = cost(x)
    grad = rgrad(x)
    gnorm = math.sqrt(_inner(grad, grad))
    info.objective_history.append(f)
    direction = tuple(-d for d in grad)
    step = step0

    for it in range(opts.max_iterations):
        if gnorm <= opts.tolerance * scale:
            info.converged = True
            break
        steepest = not opts.accelerate
        slope = _inner(grad, direction)
        if slope >= 0.0:
            direction = tuple(-d for d in grad)
            slope = -gnorm * gnorm
            steepest = True
        t = step
        while True:
            cand = retract(x, direction, t)
            f_cand = cost(cand)
            if f_cand <= f + opts.armijo_c * t * slope:
                break
            t *= opts.shrink
            if t >= opts.min_step:
                continue
            if not steepest:
                logger.debug("%s: conjugate direction stalled at iteration %d, restarting", label, it)
                direction = tuple(-d for d in grad)
                slope = -gnorm * gnorm
                steepest = True
                t = step0
                continue
            info.line_search_failed = True
            logger.warning("%s: line search underflow at iteration %d (grad norm %.3e)", label, it, gnorm)
            info.iterations = it
            info.grad_norm = gnorm
            return x, info
        new_grad = rgrad(cand)
        moved = project(cand, tuple(t * d for d in direction))
        old_grad_t = project(cand, grad)
        diff = tuple(a - b for a, b in zip(new_grad, old_grad_t))
        curvature = _inner(moved, diff)
        step = step0
        if curvature > 0.0:
            step = min(max(_inner(moved, moved) / curvature, step0), MAX_STEP_RATIO * step0)
        if opts.accelerate:
            old_dir_t = project(cand, direction)
            beta = max(0.0, _inner(new_grad, diff) / (gnorm * gnorm))
            direction = tuple(-a + beta * b for a, b in zip(new_grad, old_dir_t))
        else:
            direction = tuple(-d for d in new_grad)
        x, f, grad = cand, f_cand, new_grad
        gnorm = math.sqrt(_inner(grad, grad))
        info.objective_history.append(f)
        info.iterations = it + 1
    else:
        info.converged = gnorm <= opts.tolerance * scale
        if not info.converged:
            logger.warning(
                "%s: no convergence after %d iterations (grad norm %.3e)",
                label,
                opts.max_iterations,
                gnorm,
            )
    info.grad_norm = gnorm
    logger.debug("%s: %d iterations, objective %.12g", label, info.iterations, f)
    return x, info


def _default_step(problem: PhaseProblem, opts: SolverOptions) -> float:
    if opts.initial_step is not None:
        return opts.initial_step
    # 2 max deg = 4k on a chain
    return 1.0 / (problem.lam * problem.laplacian.gershgorin_bound() + 2.0)


def _descend_phases(problem: PhaseProblem, g0: np.ndarray, opts: SolverOptions, label: str = "phases") -> PhaseState:
    def cost(x: Point) -> float:
        return objective(problem, x[0])

    def rgrad(x: Point) -> Point:
        return (riemannian_gradient(problem, x[0]),)

    def retract(x: Point, d: Point, t: float) -> Point:
        return (normalize_entries(x[0] + t * d[0]),)

    def project(x: Point, d: Point) -> Point:
        return (_project_circles(x[0], d[0]),)

    (g,), info = _riemannian_descent(
        (g0,), cost, rgrad, retract, project, opts, _default_step(problem, opts), math.sqrt(problem.n), label
    )
    return PhaseState(g=g, info=info)


def relaxation_start(problem: PhaseProblem) -> Optional[np.ndarray]:
    """Entrywise normalization of the sphere-relaxed (TRS) minimizer, or None if it has no usable rounding."""
    if problem.lam == 0.0:
        return None
    try:
        sol = solve_trs(TrsProblem(problem.laplacian, problem.lam, CircleEmbedding(problem.z).stacked))
        return normalize_entries(CircleEmbedding.from_stacked(sol.gbar).z)
    except Mod1Error as exc:
        logger.warning("phases: no relaxation start (%s)", exc)
        return None


def solve_phases(
    problem: PhaseProblem,
    init: Optional[np.ndarray | PhaseState] = None,
    opts: SolverOptions | None = None,
    relaxed: bool = True,
) -> PhaseState:
    """
    Riemannian descent over unit-modulus vectors.

    With ``init`` given the descent starts there only. Otherwise it starts
    from z and, when ``relaxed``, also from the rounded TRS minimizer; the run
    with the lower objective wins (z on ties), so the result is never worse
    than the rounded relaxation.
    """
    opts = opts or SolverOptions()
    if init is not None:
        g0 = init.g if isinstance(init, PhaseState) else np.asarray(init)
        if g0.shape != (problem.n,):
            raise LengthMismatchError("initial phases", problem.n, g0.shape[0])
        return _descend_phases(problem, normalize_entries(g0.astype(np.complex128)), opts)

    best = _descend_phases(problem, normalize_entries(problem.z), opts, "phases(z)")
    g_trs = relaxation_start(problem) if relaxed else None
    if g_trs is not None:
        other = _descend_phases(problem, g_trs, opts, "phases(trs)")
        if other.info.objective < best.info.objective:
            logger.debug(
                "phases: relaxation start wins, %.12g < %.12g", other.info.objective, best.info.objective
            )
            best = other
    return best


# ---------------------------------------------------------------------------
# Burer-Monteiro factorization
# ---------------------------------------------------------------------------


def theory_rank(n: int) -> int:
    """Rank beyond which second-order critical points of the factorized SDP are global."""
    return math.isqrt(n + 1) + 1


def bm_objective(problem: PhaseProblem, Y: np.ndarray, v: np.ndarray) -> float:
    """``lam <LY, Y> - 2 Re(z^* Y v)``."""
    quad = float(np.vdot(Y, problem.laplacian.matvec(Y)).real)
    return problem.lam * max(quad, 0.0) - 2.0 * float(np.vdot(problem.z, Y @ v).real)


def bm_gradient(problem: PhaseProblem, Y: np.ndarray, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Riemannian gradient on (oblique manifold) x (unit sphere)."""
    gy = 2.0 * problem.lam * problem.laplacian.matvec(Y) - 2.0 * np.outer(problem.z, v.conj())
    gv = -2.0 * (Y.conj().T @ problem.z)
    return _project_bm(Y, v, gy, gv)


def _project_bm(Y, v, dy, dv) -> Tuple[np.ndarray, np.ndarray]:
    radial = np.einsum("ij,ij->i", dy, Y.conj()).real
    return dy - radial[:, None] * Y, dv - np.vdot(v, dv).real * v


def _normalize_rows(Y: np.ndarray) -> np.ndarray:
    return Y / np.linalg.norm(Y, axis=1, keepdims=True)


def random_bm_state(n: int, p: int, seed: int) -> BmState:
    rng = np.random.Generator(np.random.Philox(seed))
    Y = rng.standard_normal((n, p)) + 1j * rng.standard_normal((n, p))
    v = rng.standard_normal(p) + 1j * rng.standard_normal(p)
    return BmState(Y=_normalize_rows(Y), v=v / np.linalg.norm(v))


def extract_phases(Y: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``g_i = (Yv)_i / |(Yv)_i|``."""
    return normalize_entries(Y @ v)


def solve_burer_monteiro(
    problem: PhaseProblem,
    p: int = 3,
    opts: SolverOptions | None = None,
    init: Optional[BmState] = None,
    polish: bool = True,
) -> PhaseState:
    """
    Factorized SDP relaxation; the rounded phases come from ``Y v``.

    With ``polish`` the rounded phases seed a descent on the circles, whose
    run becomes ``info``; the factor run is kept in ``factor_info``.
    """
    opts = opts or SolverOptions()
    if p < 1:
        raise InvalidSpecError(f"Burer-Monteiro rank p must be >= 1, got {p}")
    state = init or random_bm_state(problem.n, p, opts.seed)
    if state.Y.shape != (problem.n, p):
        raise LengthMismatchError("Burer-Monteiro factor rows", problem.n, state.Y.shape[0])

    def cost(x: Point) -> float:
        return bm_objective(problem, x[0], x[1])

    def rgrad(x: Point) -> Point:
        return bm_gradient(problem, x[0], x[1])

    def retract(x: Point, d: Point, t: float) -> Point:
        v = x[1] + t * d[1]
        return _normalize_rows(x[0] + t * d[0]), v / np.linalg.norm(v)

    def project(x: Point, d: Point) -> Point:
        return _project_bm(x[0], x[1], d[0], d[1])

    (Y, v), info = _riemannian_descent(
        (state.Y, state.v),
        cost,
        rgrad,
        retract,
        project,
        opts,
        _default_step(problem, opts),
        math.sqrt(problem.n),
        f"burer-monteiro(p={p})",
    )
    factors = BmState(Y=Y, v=v)
    g = extract_phases(Y, v)
    if not polish:
        return PhaseState(g=g, info=info, factors=factors)
    polished = _descend_phases(problem, g, opts, f"burer-monteiro(p={p}) polish")
    return PhaseState(g=polished.g, info=polished.info, factors=factors, factor_info=info)
