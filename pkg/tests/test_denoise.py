import numpy as np
import pytest
from numpy.testing import assert_allclose

from analysis.metrics import mod_out_shift, rmse, wrap_rmse
from simulation.functions import f1
from simulation.noise import Bounded, Gaussian, apply_noise
from solver.angular import Mod1Samples, wrap_distance, wrap_mod1
from solver.denoise import DenoiseConfig, DenoiseMethod, Denoiser, denoise, denoise_iterated
from solver.errors import InvalidSpecError, LengthMismatchError
from solver.grid_graph import GridSpec
from solver.manifold import SolverOptions
from solver.trs import TrsCase
from solver.unwrap import ols_unwrap


def test_noiseless_trs_recovers_residues(chain_spec, f1_clean, f1_residues):
    result = Denoiser(chain_spec, DenoiseConfig(lam=0.1, k=2)).run(f1_residues)
    assert result.trs.case_tag is TrsCase.EASY_NOT_PERP
    assert wrap_rmse(result.residues, wrap_mod1(f1_clean)) <= 1e-2


def test_lambda_zero_is_identity(chain_spec, f1_residues):
    out = denoise(f1_residues, chain_spec, DenoiseConfig(lam=0.0))
    assert np.max(wrap_distance(out.values, f1_residues.values)) < 1e-12


def test_method_none_passthrough(chain_spec, f1_residues):
    out = denoise(f1_residues, chain_spec, DenoiseConfig(method="none"))
    assert out is f1_residues


@pytest.mark.parametrize("method", ["phases", "burer_monteiro"])
def test_circle_methods_close_to_trs(method, chain_spec, f1_clean):
    noisy = apply_noise(f1_clean, Bounded(0.05), seed=3)
    trs = denoise(noisy, chain_spec, DenoiseConfig(lam=0.1, k=2))
    other = denoise(noisy, chain_spec, DenoiseConfig(lam=0.1, k=2, method=method, solver=SolverOptions(max_iterations=5000)))
    assert wrap_rmse(other, trs) < 2e-2
    assert wrap_rmse(other, wrap_mod1(f1_clean)) < wrap_rmse(noisy, wrap_mod1(f1_clean))


def test_denoise_reduces_noise(chain_spec, f1_clean):
    noisy = apply_noise(f1_clean, Bounded(0.2), seed=1)
    out = denoise(noisy, chain_spec, DenoiseConfig(lam=0.3, k=3))
    target = wrap_mod1(f1_clean)
    assert wrap_rmse(out, target) < 0.8 * wrap_rmse(noisy, target)


def test_gaussian_noise_improves_on_most_seeds(chain_spec, f1_clean):
    target = wrap_mod1(f1_clean)
    denoiser = Denoiser(chain_spec, DenoiseConfig(lam=0.1, k=2))
    wins = 0
    for seed in range(20):
        noisy = apply_noise(f1_clean, Gaussian(0.1), seed)
        wins += wrap_rmse(denoiser.run_once(noisy).residues, target) < wrap_rmse(noisy, target)
    assert wins >= 18


def test_iterated_runs_every_pass(chain_spec, f1_clean):
    noisy = apply_noise(f1_clean, Bounded(0.2), seed=2)
    cfg = DenoiseConfig(lam=0.1, k=2, iterations=3)
    result = Denoiser(chain_spec, cfg).run(noisy)
    assert result.iterations == 3
    once = denoise(noisy, chain_spec, cfg)
    twice = denoise(once, chain_spec, cfg)
    thrice = denoise(twice, chain_spec, cfg)
    assert_allclose(result.residues.values, thrice.values, atol=1e-9)
    assert_allclose(denoise_iterated(noisy, chain_spec, cfg).values, result.residues.values)


def test_single_iteration_matches_denoise(chain_spec, f1_clean):
    noisy = apply_noise(f1_clean, Bounded(0.1), seed=4)
    cfg = DenoiseConfig(lam=0.1, k=2)
    assert_allclose(denoise_iterated(noisy, chain_spec, cfg).values, denoise(noisy, chain_spec, cfg).values)


def test_radius_comes_from_config(chain_spec):
    denoiser = Denoiser(chain_spec, DenoiseConfig(k=5))
    assert denoiser.spec.k == 5
    assert denoiser.graph.degrees.max() == 10


def test_length_mismatch(chain_spec):
    with pytest.raises(LengthMismatchError):
        denoise(Mod1Samples(np.zeros(10)), chain_spec, DenoiseConfig())


def test_method_parse():
    assert DenoiseMethod.parse("bm") is DenoiseMethod.BURER_MONTEIRO
    assert DenoiseMethod.parse("Burer-Monteiro") is DenoiseMethod.BURER_MONTEIRO
    assert DenoiseMethod.parse("TRS") is DenoiseMethod.TRS
    with pytest.raises(InvalidSpecError):
        DenoiseMethod.parse("lsqr")


@pytest.mark.parametrize("kwargs", [dict(lam=-0.1), dict(k=0), dict(iterations=0), dict(tol=0.0), dict(bm_rank=0)])
def test_config_validation(kwargs):
    with pytest.raises(InvalidSpecError):
        DenoiseConfig(**kwargs)


@pytest.mark.slow
def test_iterated_not_worse_than_single_pass(chain_spec, f1_clean):
    single, iterated = [], []
    for seed in range(20):
        noisy = apply_noise(f1_clean, Bounded(0.30), seed=seed)
        for cfg, out in ((DenoiseConfig(lam=0.1, k=2), single), (DenoiseConfig(lam=0.1, k=2, iterations=10), iterated)):
            denoiser = Denoiser(chain_spec, cfg)
            r_hat = denoiser.run(noisy).residues
            f_hat = ols_unwrap(r_hat, denoiser.graph, laplacian=denoiser.laplacian)
            out.append(rmse(f1_clean, mod_out_shift(f1_clean, f_hat).aligned))
    assert np.median(iterated) <= np.median(single)
