import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from simulation.functions import f1
from simulation.noise import Gaussian, apply_noise
from solver.angular import CircleEmbedding, Mod1Samples, embed
from solver.errors import DegenerateRoundingError, InvalidSpecError
from solver.grid_graph import GridSpec
from solver.manifold import (
    BmState,
    PhaseProblem,
    SolverOptions,
    bm_gradient,
    bm_objective,
    extract_phases,
    normalize_entries,
    objective,
    random_bm_state,
    riemannian_gradient,
    solve_burer_monteiro,
    solve_phases,
    theory_rank,
)
from solver.trs import TrsProblem, solve_trs

from conftest import chain_laplacian


def _noisy_problem(n=100, k=2, lam=0.1, sigma=0.05, seed=0):
    clean = f1(GridSpec.chain(n, k).coordinates()[:, 0])
    y = apply_noise(clean, Gaussian(sigma), seed)
    return PhaseProblem.from_samples(chain_laplacian(n, k), lam, y)


def _random_problem(rng, n):
    y = Mod1Samples(rng.random(n))
    return PhaseProblem.from_samples(chain_laplacian(n, int(rng.integers(1, 4))), float(rng.uniform(0.01, 1.0)), y)


def test_riemannian_gradient_is_tangent(rng):
    problem = _random_problem(rng, 40)
    g = np.exp(2j * np.pi * rng.random(40))
    grad = riemannian_gradient(problem, g)
    assert_allclose((grad * g.conj()).real, 0.0, atol=1e-12)


def test_riemannian_gradient_finite_differences():
    rng = np.random.default_rng(7)
    problem = _random_problem(rng, 20)
    h = 1e-6
    for _ in range(100):
        g = np.exp(2j * np.pi * rng.random(20))
        xi = 1j * rng.standard_normal(20) * g  # tangent: Re(xi conj(g)) = 0
        plus = objective(problem, (g + h * xi) / np.abs(g + h * xi))
        minus = objective(problem, (g - h * xi) / np.abs(g - h * xi))
        fd = (plus - minus) / (2 * h)
        exact = np.vdot(riemannian_gradient(problem, g), xi).real
        assert_allclose(fd, exact, rtol=1e-6, atol=1e-6)


def test_bm_gradient_finite_differences(rng):
    problem = _random_problem(rng, 15)
    state = random_bm_state(15, 3, seed=3)
    dy = rng.standard_normal((15, 3)) + 1j * rng.standard_normal((15, 3))
    dv = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    gy, gv = bm_gradient(problem, state.Y, state.v)
    # project the direction onto the tangent space
    dy = dy - np.einsum("ij,ij->i", dy, state.Y.conj()).real[:, None] * state.Y
    dv = dv - np.vdot(state.v, dv).real * state.v
    h = 1e-6

    def retract(t):
        Y = state.Y + t * dy
        v = state.v + t * dv
        return Y / np.linalg.norm(Y, axis=1, keepdims=True), v / np.linalg.norm(v)

    fd = (bm_objective(problem, *retract(h)) - bm_objective(problem, *retract(-h))) / (2 * h)
    exact = np.vdot(gy, dy).real + np.vdot(gv, dv).real
    assert_allclose(fd, exact, rtol=1e-6, atol=1e-6)


@pytest.mark.parametrize("accelerate", [False, True])
def test_objective_monotone_and_feasible(accelerate):
    rng = np.random.default_rng(11)
    opts = SolverOptions(max_iterations=300, accelerate=accelerate)
    for _ in range(50):
        problem = _random_problem(rng, int(rng.integers(10, 60)))
        state = solve_phases(problem, opts=opts)
        history = np.asarray(state.info.objective_history)
        assert np.all(np.diff(history) <= 0.0)
        assert_allclose(np.abs(state.g), 1.0, atol=1e-12)


def test_phases_converges_and_improves_on_start():
    problem = _noisy_problem()
    state = solve_phases(problem)
    assert state.info.converged
    assert state.info.grad_norm <= 1e-6 * math.sqrt(problem.n)
    assert state.info.objective <= objective(problem, problem.z)


def test_phases_never_worse_than_rounded_relaxation():
    rng = np.random.default_rng(2024)
    for _ in range(30):
        problem = _random_problem(rng, int(rng.integers(10, 150)))
        sol = solve_trs(TrsProblem(problem.laplacian, problem.lam, CircleEmbedding(problem.z).stacked))
        rounded = objective(problem, normalize_entries(CircleEmbedding.from_stacked(sol.gbar).z))
        state = solve_phases(problem)
        assert state.info.objective <= rounded + 1e-9 * abs(rounded)
        assert_allclose(state.info.objective, objective(problem, state.g))


def test_phases_honours_explicit_start(rng):
    problem = _random_problem(rng, 30)
    g0 = np.exp(2j * np.pi * rng.random(30))
    state = solve_phases(problem, init=g0, opts=SolverOptions(max_iterations=5))
    assert state.info.objective_history[0] == pytest.approx(objective(problem, g0))


# lam * 2k < 1/sqrt(5) leaves a single local minimum on the circles
_MATCHING_INSTANCES = [
    (60, 2, 0.1, 0.05, 0),
    (100, 1, 0.2, 0.1, 1),
    (100, 3, 0.03, 0.1, 2),
    (150, 2, 0.1, 0.1, 3),
    (200, 3, 0.07, 0.1, 4),
    (250, 2, 0.03, 0.15, 5),
    (300, 1, 0.2, 0.05, 6),
    (400, 3, 0.07, 0.1, 7),
    (500, 2, 0.1, 0.1, 8),
    (500, 3, 0.03, 0.05, 9),
]


@pytest.mark.parametrize("n, k, lam, sigma, seed", _MATCHING_INSTANCES)
def test_burer_monteiro_matches_phases(n, k, lam, sigma, seed):
    problem = _noisy_problem(n, k, lam, sigma, seed)
    opts = SolverOptions(max_iterations=20000, seed=seed)
    phases = solve_phases(problem, opts=opts)
    bm = solve_burer_monteiro(problem, 3, opts)
    assert phases.info.converged and bm.info.converged
    assert bm.factors.constraint_residual() < 1e-12
    assert_allclose(objective(problem, bm.g), objective(problem, phases.g), rtol=1e-6)


def test_rank_one_burer_monteiro_matches_phases():
    problem = _noisy_problem(n=80, k=2, lam=0.1, sigma=0.05, seed=3)
    opts = SolverOptions(max_iterations=20000)
    phases = solve_phases(problem, opts=opts)
    raw = solve_burer_monteiro(problem, 1, opts, polish=False)
    assert raw.info.converged and raw.factor_info is None
    assert_allclose(objective(problem, raw.g), objective(problem, phases.g), rtol=1e-6)
    polished = solve_burer_monteiro(problem, 1, opts)
    assert polished.factor_info.iterations == raw.info.iterations
    assert_allclose(objective(problem, polished.g), objective(problem, phases.g), rtol=1e-6)


def test_burer_monteiro_deterministic():
    problem = _noisy_problem(n=50)
    a = solve_burer_monteiro(problem, 3, SolverOptions(seed=5, max_iterations=50))
    b = solve_burer_monteiro(problem, 3, SolverOptions(seed=5, max_iterations=50))
    assert_allclose(a.g, b.g)


def test_extract_phases_degenerate():
    Y = np.eye(3, dtype=np.complex128)
    with pytest.raises(DegenerateRoundingError):
        extract_phases(Y, np.array([0.0, 1.0, 0.0], dtype=np.complex128))


def test_theory_rank():
    assert theory_rank(8) == 4
    assert theory_rank(500) == 23


def test_from_trs_matches_from_samples(rng):
    lap = chain_laplacian(12, 1)
    y = Mod1Samples(rng.random(12))
    a = PhaseProblem.from_samples(lap, 0.2, y)
    b = PhaseProblem.from_trs(TrsProblem(lap, 0.2, embed(y).stacked))
    assert_allclose(a.z, b.z)


def test_options_validation():
    with pytest.raises(InvalidSpecError):
        SolverOptions(shrink=1.5)
    with pytest.raises(InvalidSpecError):
        SolverOptions(tolerance=0.0)
    with pytest.raises(InvalidSpecError):
        solve_burer_monteiro(_noisy_problem(n=20), 0)


def test_bm_state_residual():
    state = random_bm_state(30, 4, seed=1)
    assert state.p == 4
    assert state.constraint_residual() < 1e-12
    assert BmState(Y=2 * state.Y, v=state.v).constraint_residual() > 1.0
