"""
Modulo-1 denoising and unwrapping solvers.
No CLI or file-format dependency.
"""

from .angular import CircleEmbedding, Mod1Samples, embed, project_to_mod1, wrap_distance
from .denoise import DenoiseConfig, DenoiseMethod, DenoiseResult, Denoiser, denoise, denoise_iterated
from .grid_graph import GridSpec, NeighborGraph, SparseLaplacian, build_graph, build_laplacian
from .manifold import PhaseProblem, PhaseState, SolverOptions, solve_burer_monteiro, solve_phases
from .trs import TrsCase, TrsProblem, TrsSolution, solve_trs, verify_kkt
from .unwrap import ols_unwrap, quotient_tracker, unwrap

__all__ = [
    "CircleEmbedding",
    "Mod1Samples",
    "embed",
    "project_to_mod1",
    "wrap_distance",
    "DenoiseConfig",
    "DenoiseMethod",
    "DenoiseResult",
    "Denoiser",
    "denoise",
    "denoise_iterated",
    "GridSpec",
    "NeighborGraph",
    "SparseLaplacian",
    "build_graph",
    "build_laplacian",
    "PhaseProblem",
    "PhaseState",
    "SolverOptions",
    "solve_burer_monteiro",
    "solve_phases",
    "TrsCase",
    "TrsProblem",
    "TrsSolution",
    "solve_trs",
    "verify_kkt",
    "ols_unwrap",
    "quotient_tracker",
    "unwrap",
]
