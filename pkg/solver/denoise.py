"""
Stage 1: noisy residues in, denoised residues out.

embed -> regularized problem on the k-neighbourhood graph -> solve with the
configured method -> read angles back into [0, 1). The iterated variant feeds
each projected output back in as the next input.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from solver.angular import CircleEmbedding, Mod1Samples, embed, project_to_mod1
from solver.errors import InvalidSpecError, LengthMismatchError
from solver.grid_graph import GridSpec, build_graph, build_laplacian, spectral_bounds
from solver.manifold import PhaseProblem, SolverInfo, SolverOptions, solve_burer_monteiro, solve_phases
from solver.trs import DEFAULT_TOL, TrsProblem, TrsSolution, solve_trs

logger = logging.getLogger(__name__)


class DenoiseMethod(Enum):
    TRS = "trs"
    PHASES = "phases"
    BURER_MONTEIRO = "burer_monteiro"
    NONE = "none"  # raw residues, the plain OLS baseline

    @classmethod
    def parse(cls, value: str | DenoiseMethod) -> DenoiseMethod:
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        if key == "bm":
            key = "burer_monteiro"
        try:
            return cls(key)
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            raise InvalidSpecError(f"unknown denoise method {value!r} (expected one of {choices})") from None

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class DenoiseConfig:
    lam: float = 0.1
    k: int = 2
    method: DenoiseMethod = DenoiseMethod.TRS
    iterations: int = 1
    tol: float = DEFAULT_TOL
    solver: SolverOptions = field(default_factory=SolverOptions)
    bm_rank: int = 3

    def __post_init__(self):
        object.__setattr__(self, "method", DenoiseMethod.parse(self.method))
        if not self.lam >= 0.0:
            raise InvalidSpecError(f"lambda must be >= 0, got {self.lam}")
        if self.k < 1:
            raise InvalidSpecError(f"k must be >= 1, got {self.k}")
        if self.iterations < 1:
            raise InvalidSpecError(f"iterations must be >= 1, got {self.iterations}")
        if not self.tol > 0.0:
            raise InvalidSpecError(f"tol must be > 0, got {self.tol}")
        if self.bm_rank < 1:
            raise InvalidSpecError(f"bm_rank must be >= 1, got {self.bm_rank}")


@dataclass(frozen=True, eq=False)
class DenoiseResult:
    residues: Mod1Samples
    gbar: np.ndarray  # stacked [Re; Im] estimate before projection
    trs: Optional[TrsSolution] = None
    info: Optional[SolverInfo] = None
    iterations: int = 1


class Denoiser:
    """Holds the graph and Laplacian for one grid so repeated calls reuse them."""

    def __init__(self, spec: GridSpec, cfg: DenoiseConfig):
        self.cfg = cfg
        self.spec = spec.with_radius(cfg.k)
        self.graph = build_graph(self.spec)
        self.laplacian = build_laplacian(self.graph)
        self.beta2_lower = spectral_bounds(self.spec).fiedler_lower

    def _check(self, y: Mod1Samples):
        if y.n != self.spec.n:
            raise LengthMismatchError("samples", self.spec.n, y.n)

    def trs_problem(self, y: Mod1Samples) -> TrsProblem:
        return TrsProblem(self.laplacian, self.cfg.lam, embed(y).stacked, beta2_lower=self.beta2_lower)

    def run_once(self, y: Mod1Samples) -> DenoiseResult:
        self._check(y)
        cfg = self.cfg
        if cfg.method is DenoiseMethod.NONE:
            return DenoiseResult(residues=y, gbar=embed(y).stacked)
        if cfg.method is DenoiseMethod.TRS:
            sol = solve_trs(self.trs_problem(y), tol=cfg.tol)
            logger.debug("TRS: case %s, mu*=%.6g", sol.case_tag, sol.mu_star)
            return DenoiseResult(residues=project_to_mod1(sol.gbar), gbar=sol.gbar, trs=sol)
        problem = PhaseProblem.from_samples(self.laplacian, cfg.lam, y)
        if cfg.method is DenoiseMethod.PHASES:
            state = solve_phases(problem, None, cfg.solver)
        else:
            state = solve_burer_monteiro(problem, cfg.bm_rank, cfg.solver)
        gbar = CircleEmbedding(state.g).stacked
        return DenoiseResult(residues=project_to_mod1(state.g), gbar=gbar, info=state.info)

    def run(self, y: Mod1Samples) -> DenoiseResult:
        """``cfg.iterations`` passes, each projected to [0, 1) before the next."""
        result = self.run_once(y)
        for it in range(1, self.cfg.iterations):
            result = self.run_once(result.residues)
            logger.debug("iterated denoise: pass %d of %d", it + 1, self.cfg.iterations)
        return DenoiseResult(
            residues=result.residues,
            gbar=result.gbar,
            trs=result.trs,
            info=result.info,
            iterations=self.cfg.iterations,
        )


def denoise(y: Mod1Samples, spec: GridSpec, cfg: DenoiseConfig) -> Mod1Samples:
    """Single pass, regardless of ``cfg.iterations``."""
    return Denoiser(spec, cfg).run_once(y).residues


def denoise_iterated(y: Mod1Samples, spec: GridSpec, cfg: DenoiseConfig) -> Mod1Samples:
    return Denoiser(spec, cfg).run(y).residues
