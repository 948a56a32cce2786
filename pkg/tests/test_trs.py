import math
import time

import numpy as np
import pytest
from numpy.testing import assert_allclose

from solver.angular import Mod1Samples, embed
from solver.errors import InvalidSpecError, LengthMismatchError
from solver.trs import TrsCase, TrsProblem, apply_shifted, null_coefficients, phi, solve_trs, solve_trs_dense, verify_kkt

from conftest import chain_laplacian


def _unit_zbar(rng, n):
    return embed(Mod1Samples(rng.random(n))).stacked


def _perpendicular_zbar(rng, n):
    # equally spaced angles sum to zero
    y = (np.arange(n) + 0.3) / n
    return embed(Mod1Samples(rng.permutation(y))).stacked


def _hard_zbar(rng, lap, lam):
    n = lap.n
    x = rng.standard_normal(n)
    x -= x.mean()
    x *= math.sqrt(n / 2) / np.linalg.norm(x)
    y = rng.standard_normal(n)
    y -= y.mean()
    y *= math.sqrt(n / 2) / np.linalg.norm(y)
    # H^+ zbar = [x; y] / 2, so phi(0) = n / 4
    return 0.5 * lam * np.concatenate([lap.matvec(x), lap.matvec(y)])


def test_lambda_zero_returns_input(rng):
    lap = chain_laplacian(20, 2)
    zbar = _unit_zbar(rng, 20)
    sol = solve_trs(TrsProblem(lap, 0.0, zbar))
    assert_allclose(sol.gbar, zbar)
    assert sol.mu_star == 2.0
    assert sol.case_tag is TrsCase.EASY_NOT_PERP


def test_easy_case_kkt(rng):
    lap = chain_laplacian(100, 2)
    problem = TrsProblem(lap, 0.1, _unit_zbar(rng, 100))
    sol = solve_trs(problem)
    assert sol.case_tag is TrsCase.EASY_NOT_PERP
    assert 0.0 < sol.mu_star <= 2.0
    assert verify_kkt(problem, sol).ok(100)


def test_perpendicular_interior_case(rng):
    lap = chain_laplacian(40, 2)
    zbar = embed(Mod1Samples(np.arange(40) / 40)).stacked
    problem = TrsProblem(lap, 0.1, zbar)
    sol = solve_trs(problem)
    assert sol.case_tag is TrsCase.PERP_INTERIOR
    assert sol.mu_star > 0.0
    ref = solve_trs_dense(problem)
    assert ref.case_tag is TrsCase.PERP_INTERIOR
    assert_allclose(sol.objective, ref.objective, rtol=1e-8)


def test_hard_case(rng):
    lap = chain_laplacian(60, 2)
    problem = TrsProblem(lap, 0.5, _hard_zbar(rng, lap, 0.5))
    sol = solve_trs(problem)
    assert sol.case_tag is TrsCase.HARD_CASE
    assert sol.mu_star == 0.0
    assert_allclose(sol.gbar @ sol.gbar, 60, rtol=1e-8)
    assert verify_kkt(problem, sol).ok(60)
    assert solve_trs_dense(problem).case_tag is TrsCase.HARD_CASE


def test_phi_decreasing(rng):
    problem = TrsProblem(chain_laplacian(50, 2), 0.3, _unit_zbar(rng, 50))
    values = [phi(problem, mu) for mu in (0.25, 0.5, 1.0, 2.0)]
    assert all(a > b for a, b in zip(values, values[1:]))
    with pytest.raises(InvalidSpecError):
        phi(problem, 0.0)


def test_problem_validation(rng):
    lap = chain_laplacian(10, 1)
    with pytest.raises(LengthMismatchError):
        TrsProblem(lap, 0.1, np.zeros(19))
    with pytest.raises(InvalidSpecError):
        TrsProblem(lap, -0.1, np.zeros(20))


def test_matches_dense_oracle():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    seen = set()
    for _ in range(200):
        n = int(rng.integers(10, 201))
        k = int(rng.integers(1, 4))
        lam = float(rng.choice([0.0, 0.01, 0.1, 1.0]))
        lap = chain_laplacian(n, k)
        kind = "easy" if lam == 0.0 else rng.choice(["easy", "perp", "hard"])
        if kind == "easy":
            zbar = _unit_zbar(rng, n)
        elif kind == "perp":
            zbar = _perpendicular_zbar(rng, n)
        else:
            zbar = _hard_zbar(rng, lap, lam)
        problem = TrsProblem(lap, lam, zbar)
        sol = solve_trs(problem)
        ref = solve_trs_dense(problem)
        seen.add(sol.case_tag)
        assert_allclose(sol.objective, ref.objective, rtol=1e-8, atol=1e-8)
        assert sol.mu_star >= 0.0
        assert sol.kkt_residual <= 1e-6 * math.sqrt(n)
        assert abs(sol.gbar @ sol.gbar - n) <= 1e-8 * n
    assert seen == set(TrsCase)
    assert time.perf_counter() - start < 30.0


def test_apply_shifted_matches_dense(rng):
    n, lam, mu = 30, 0.4, 0.7
    lap = chain_laplacian(n, 3)
    problem = TrsProblem(lap, lam, _unit_zbar(rng, n))
    x = rng.standard_normal(2 * n)
    dense = lap.dense()
    H = np.block([[lam * dense, np.zeros((n, n))], [np.zeros((n, n)), lam * dense]])
    assert_allclose(apply_shifted(problem, mu, x), (2 * H + mu * np.eye(2 * n)) @ x, atol=1e-12)
    with pytest.raises(InvalidSpecError):
        apply_shifted(problem, -1.0, x)


def test_null_coefficients():
    n = 16
    lap = chain_laplacian(n, 1)
    zbar = np.concatenate([np.ones(n), np.zeros(n)])
    c1, c2 = null_coefficients(TrsProblem(lap, 0.1, zbar))
    assert_allclose(c1, math.sqrt(n))
    assert c2 == 0.0
    c1, c2 = null_coefficients(TrsProblem(lap, 0.1, _perpendicular_zbar(np.random.default_rng(0), n)))
    assert abs(c1) < 1e-12 and abs(c2) < 1e-12


def test_minimizer_beats_random_feasible_points():
    rng = np.random.default_rng(99)
    n = 60
    lap = chain_laplacian(n, 2)
    for lam, zbar in ((0.1, _unit_zbar(rng, n)), (0.3, _perpendicular_zbar(rng, n)), (0.5, _hard_zbar(rng, lap, 0.5))):
        problem = TrsProblem(lap, lam, zbar)
        best = solve_trs(problem).objective
        for _ in range(100):
            x = rng.standard_normal(2 * n)
            x *= math.sqrt(n) / np.linalg.norm(x)
            assert best <= problem.objective(x) + 1e-9 * abs(best)


@pytest.mark.parametrize("n, k, lam", [(40, 1, 0.1), (60, 2, 0.3), (120, 3, 0.05), (200, 2, 1.0)])
def test_multiplier_within_spectral_bracket(n, k, lam):
    rng = np.random.default_rng(n)
    lap = chain_laplacian(n, k)
    fiedler = np.linalg.eigvalsh(lap.dense())[1]
    perp = TrsProblem(lap, lam, _perpendicular_zbar(rng, n))
    sol = solve_trs(perp)
    assert sol.case_tag is TrsCase.PERP_INTERIOR
    assert 0.0 < sol.mu_star <= 2.0 - 2.0 * lam * fiedler
    assert_allclose(sol.mu_star, solve_trs_dense(perp).mu_star, rtol=1e-6, atol=1e-8)
    easy = TrsProblem(lap, lam, _unit_zbar(rng, n))
    sol = solve_trs(easy)
    assert sol.case_tag is TrsCase.EASY_NOT_PERP
    assert 0.0 < sol.mu_star <= 2.0
    assert_allclose(sol.mu_star, solve_trs_dense(easy).mu_star, rtol=1e-6, atol=1e-8)


def test_small_lambda_never_hits_hard_case():
    rng = np.random.default_rng(5)
    for n in (16, 40, 101):
        for k in (1, 2, 3):
            lap = chain_laplacian(n, k)
            for frac in (0.25, 0.6, 0.99):
                lam = frac / (4 * k)
                for zbar in (_unit_zbar(rng, n), _perpendicular_zbar(rng, n)):
                    assert solve_trs(TrsProblem(lap, lam, zbar)).case_tag is not TrsCase.HARD_CASE
